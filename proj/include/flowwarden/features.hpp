#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowwarden/flow.hpp"

namespace fw {

// Incremental first/second-moment statistics over one observation stream:
// count, running sum, running sum of squares.
struct StatsAccumulator {
    std::uint64_t n_obs = 0;
    double sum_obs = 0.0;
    double sum_sq = 0.0;

    void accumulate(double x);  // throws on non-finite x

    friend bool operator==(const StatsAccumulator&, const StatsAccumulator&) = default;
};

struct StatsSummary {
    double mean = 0.0;
    double std_dev = 0.0;
    double count = 0.0;
};

// Empty accumulator yields (0,0,0) so downstream clustering never sees NaN.
StatsSummary finalize_stats(const StatsAccumulator& acc);

// The per-window attribute slots. Each slot accumulates one observation per
// connection in the window (auth slots observe log events mapped onto
// connections), so every slot carries (mean, std, count).
enum class AttributeId : std::uint8_t {
    DstIpTotal, DstIpUnique,
    SrcPortTotal, SrcPortUnique, DstPortTotal, DstPortUnique,
    ConnTotal, ConnSameSrc, ConnSameDst, ConnSameService,
    DurLt1s, Dur1To10s, Dur10To60s, DurGt60s,
    PktArp, PktLlc, PktIp, PktIcmp, PktEapol, PktTcp, PktUdp,
    PktHttp, PktFtp, PktHttps, PktDhcp, PktDns, PktNtp,
    PktIpOption, SynErrors, RejErrors, PktUrgent,
    DataTotal, DataSrc2Dst, DataDst2Src,
    SizeLt128, Size128To512, Size512To1500, SizeGt1500,
    SshLoginOk, SshLoginFail, ServiceLoginOk, ServiceLoginFail,
    DeviceLoginOk, DeviceLoginFail,
};
inline constexpr int kAttributeCount = 44;

const char* attribute_name(AttributeId a);

struct AttributeSet {
    std::array<StatsAccumulator, kAttributeCount> slots;

    const StatsAccumulator& slot(AttributeId a) const {
        return slots[static_cast<int>(a)];
    }
    // Sum of observations: the window-level "total" reading of a slot.
    double total(AttributeId a) const { return slot(a).sum_obs; }
    // Mean observation: the window-level "per connection" reading.
    double mean(AttributeId a) const { return finalize_stats(slot(a)).mean; }
};

// One connection plus the device-log events attributed to it (events between
// the device's previous connection and this one, per auth slot).
struct WindowEntry {
    FlowRecord flow;
    std::array<std::uint32_t, 6> auth_counts{};  // order: attribute slots 38..43
};

// Sliding buffer of a device's most recent connections. Appending past
// capacity drops the oldest entry; attributes() recomputes from the buffer,
// so the drop removes exactly that entry's contribution.
class ConnectionWindow {
public:
    explicit ConnectionWindow(int capacity);

    void append(WindowEntry entry);
    void clear();
    int size() const { return static_cast<int>(entries_.size()); }
    int capacity() const { return capacity_; }
    bool full() const { return size() == capacity_; }

    AttributeSet attributes() const;

    double first_timestamp() const;
    double last_timestamp() const;

    // Most frequent (dst_ip, dst_port, protocol) triple; ties break toward
    // the lexicographically smallest key for determinism.
    struct Destination {
        std::string dst_ip;
        std::uint16_t dst_port = 0;
        Protocol protocol = Protocol::Other;
    };
    Destination modal_destination() const;

private:
    int capacity_;
    std::deque<WindowEntry> entries_;
};

struct WindowId {
    MacAddr device;
    int index = 0;

    friend bool operator==(const WindowId&, const WindowId&) = default;
    friend auto operator<=>(const WindowId&, const WindowId&) = default;
};

std::string to_string(const WindowId& id);
WindowId parse_window_id(const std::string& text);

// A closed aggregation window, ready for vectorization.
struct WindowRecord {
    WindowId id;
    AttributeSet attrs;
    double t_first = 0.0;
    double t_last = 0.0;
    int connections = 0;
    bool partial = false;  // closed with fewer than n_conn connections
    ConnectionWindow::Destination modal_dst;
};

struct AggregationConfig {
    int n_conn = 50;  // connection-based window length
};

// Batch windowing: tumbling closes every n_conn connections per device, a
// final partial window flushes whatever remains. Inputs must be time-sorted.
std::vector<WindowRecord> window_flows(const std::vector<FlowRecord>& flows,
                                       const std::vector<DeviceLogEvent>& logs,
                                       const AggregationConfig& config);

// Streaming variant used by the gateway loop: feed flows one at a time, get
// closed windows back; flush_before() closes stragglers older than a cutoff.
class WindowingEngine {
public:
    WindowingEngine(AggregationConfig config, std::vector<DeviceLogEvent> logs);

    std::optional<WindowRecord> add_flow(const FlowRecord& flow);
    std::vector<WindowRecord> flush_before(double cutoff_time);
    std::vector<WindowRecord> flush_all();

private:
    struct DeviceState {
        ConnectionWindow window;
        int next_index = 0;
        std::size_t log_cursor = 0;
        double last_emit_time = 0.0;
        bool has_emitted = false;
    };

    WindowRecord close_window(MacAddr device, DeviceState& st, bool partial);
    DeviceState& state_for(MacAddr device);
    std::array<std::uint32_t, 6> consume_auth(MacAddr device, DeviceState& st,
                                              double up_to);

    AggregationConfig config_;
    std::map<MacAddr, std::vector<DeviceLogEvent>> logs_by_device_;
    std::map<MacAddr, DeviceState> devices_;
};

enum class Stat : std::uint8_t { Mean, Std, Count };
const char* stat_name(Stat s);

struct FeatureKey {
    AttributeId attr;
    Stat stat;

    friend bool operator==(const FeatureKey&, const FeatureKey&) = default;
};

std::string feature_name(const FeatureKey& key);
FeatureKey parse_feature_key(const std::string& text);

// Ordered list of active (attribute, statistic) pairs plus the min-max
// normalization bounds learned at training time. The order is the canonical
// feature index used everywhere downstream.
class FeatureSchema {
public:
    FeatureSchema() = default;

    // All 44 attributes x (mean, std, count): the pre-reduction schema.
    static FeatureSchema full();
    static FeatureSchema from_features(std::vector<FeatureKey> features);

    int size() const { return static_cast<int>(features_.size()); }
    const std::vector<FeatureKey>& features() const { return features_; }
    bool bounds_learned() const { return bounds_learned_; }
    const Eigen::VectorXd& lower_bounds() const { return lo_; }
    const Eigen::VectorXd& upper_bounds() const { return hi_; }

    Eigen::VectorXd raw_vector(const AttributeSet& attrs) const;

    // Row-per-sample matrix of raw vectors -> per-feature (min, max).
    void learn_bounds(const Eigen::MatrixXd& raw_rows);
    void set_bounds(Eigen::VectorXd lo, Eigen::VectorXd hi);

    // Min-max scaling into [0,1], clamped; constant features map to 0.
    Eigen::VectorXd normalize(const Eigen::VectorXd& raw) const;

    // New schema keeping the given feature indices (bounds carried over).
    FeatureSchema retained(const std::vector<int>& keep) const;

private:
    std::vector<FeatureKey> features_;
    Eigen::VectorXd lo_, hi_;
    bool bounds_learned_ = false;
};

// Per-device, per-window feature vector. Values are raw when the schema has
// no learned bounds (training pass) and normalized+clamped otherwise.
struct FeatureVector {
    WindowId id;
    Eigen::VectorXd values;
    bool partial = false;
};

FeatureVector vectorize(const WindowRecord& window, const FeatureSchema& schema);

// Stacks vectors into a row-per-sample matrix; all must share the dimension.
Eigen::MatrixXd stack_rows(const std::vector<FeatureVector>& vectors);

}  // namespace fw
