#include "flowwarden/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "flowwarden/textio.hpp"

namespace fw {

void StatsAccumulator::accumulate(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("non-finite observation rejected");
    }
    ++n_obs;
    sum_obs += x;
    sum_sq += x * x;
}

StatsSummary finalize_stats(const StatsAccumulator& acc) {
    if (acc.n_obs == 0) return {0.0, 0.0, 0.0};
    const double n = static_cast<double>(acc.n_obs);
    const double mean = acc.sum_obs / n;
    const double var = std::abs(acc.sum_sq / n - mean * mean);
    return {mean, std::sqrt(var), n};
}

namespace {

constexpr std::array<const char*, kAttributeCount> kAttributeNames = {
    "dst_ip_total", "dst_ip_unique",
    "src_port_total", "src_port_unique", "dst_port_total", "dst_port_unique",
    "conn_total", "conn_same_src", "conn_same_dst", "conn_same_service",
    "dur_lt_1s", "dur_1_10s", "dur_10_60s", "dur_gt_60s",
    "pkt_arp", "pkt_llc", "pkt_ip", "pkt_icmp", "pkt_eapol", "pkt_tcp", "pkt_udp",
    "pkt_http", "pkt_ftp", "pkt_https", "pkt_dhcp", "pkt_dns", "pkt_ntp",
    "pkt_ip_option", "syn_errors", "rej_errors", "pkt_urgent",
    "data_total", "data_src2dst", "data_dst2src",
    "size_lt_128", "size_128_512", "size_512_1500", "size_gt_1500",
    "ssh_login_ok", "ssh_login_fail", "service_login_ok", "service_login_fail",
    "device_login_ok", "device_login_fail",
};

int duration_bin(double d) {
    if (d < 1.0) return 0;
    if (d < 10.0) return 1;
    if (d < 60.0) return 2;
    return 3;
}

int size_bin(double avg_packet_size) {
    if (avg_packet_size < 128.0) return 0;
    if (avg_packet_size < 512.0) return 1;
    if (avg_packet_size <= 1500.0) return 2;
    return 3;
}

// Counters match the record's protocol label exactly (the exporter assigns
// the most specific label); version/multicast variants share one slot.
double protocol_packets(AttributeId slot, const FlowRecord& f) {
    const auto pkts = static_cast<double>(f.packets);
    switch (slot) {
        case AttributeId::PktArp: return f.protocol == Protocol::Arp ? pkts : 0.0;
        case AttributeId::PktLlc: return f.protocol == Protocol::Llc ? pkts : 0.0;
        case AttributeId::PktIp:
            return (f.protocol == Protocol::IPv4 || f.protocol == Protocol::IPv6) ? pkts : 0.0;
        case AttributeId::PktIcmp:
            return (f.protocol == Protocol::Icmp || f.protocol == Protocol::IcmpV6) ? pkts : 0.0;
        case AttributeId::PktEapol: return f.protocol == Protocol::Eapol ? pkts : 0.0;
        case AttributeId::PktTcp: return f.protocol == Protocol::Tcp ? pkts : 0.0;
        case AttributeId::PktUdp: return f.protocol == Protocol::Udp ? pkts : 0.0;
        case AttributeId::PktHttp: return f.protocol == Protocol::Http ? pkts : 0.0;
        case AttributeId::PktFtp: return f.protocol == Protocol::Ftp ? pkts : 0.0;
        case AttributeId::PktHttps: return f.protocol == Protocol::Https ? pkts : 0.0;
        case AttributeId::PktDhcp: return f.protocol == Protocol::Dhcp ? pkts : 0.0;
        case AttributeId::PktDns:
            return (f.protocol == Protocol::Dns || f.protocol == Protocol::Mdns) ? pkts : 0.0;
        case AttributeId::PktNtp: return f.protocol == Protocol::Ntp ? pkts : 0.0;
        default: return 0.0;
    }
}

struct ServiceKey {
    std::string ip;
    std::uint16_t port;
    Protocol proto;

    bool operator==(const ServiceKey&) const = default;
};

struct ServiceKeyHash {
    std::size_t operator()(const ServiceKey& k) const {
        std::size_t h = std::hash<std::string>{}(k.ip);
        h = h * 1315423911u + k.port;
        h = h * 1315423911u + static_cast<std::size_t>(k.proto);
        return h;
    }
};

}  // namespace

const char* attribute_name(AttributeId a) { return kAttributeNames[static_cast<int>(a)]; }

ConnectionWindow::ConnectionWindow(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("window capacity must be >= 1");
}

void ConnectionWindow::append(WindowEntry entry) {
    entries_.push_back(std::move(entry));
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

void ConnectionWindow::clear() { entries_.clear(); }

double ConnectionWindow::first_timestamp() const {
    return entries_.empty() ? 0.0 : entries_.front().flow.timestamp;
}

double ConnectionWindow::last_timestamp() const {
    return entries_.empty() ? 0.0 : entries_.back().flow.timestamp;
}

AttributeSet ConnectionWindow::attributes() const {
    AttributeSet out;
    if (entries_.empty()) return out;

    std::unordered_map<std::string, int> src_ip_count, dst_ip_count;
    std::unordered_map<ServiceKey, int, ServiceKeyHash> service_count;
    for (const auto& e : entries_) {
        ++src_ip_count[e.flow.src_ip];
        ++dst_ip_count[e.flow.dst_ip];
        ++service_count[{e.flow.dst_ip, e.flow.dst_port, e.flow.protocol}];
    }

    std::unordered_set<std::string> seen_dst_ips;
    std::unordered_set<std::uint32_t> seen_src_ports, seen_dst_ports;

    auto put = [&out](AttributeId a, double x) {
        out.slots[static_cast<int>(a)].accumulate(x);
    };

    for (const auto& e : entries_) {
        const FlowRecord& f = e.flow;

        put(AttributeId::DstIpTotal, 1.0);
        put(AttributeId::DstIpUnique, seen_dst_ips.insert(f.dst_ip).second ? 1.0 : 0.0);

        put(AttributeId::SrcPortTotal, f.src_port != 0 ? 1.0 : 0.0);
        put(AttributeId::SrcPortUnique,
            (f.src_port != 0 && seen_src_ports.insert(f.src_port).second) ? 1.0 : 0.0);
        put(AttributeId::DstPortTotal, f.dst_port != 0 ? 1.0 : 0.0);
        put(AttributeId::DstPortUnique,
            (f.dst_port != 0 && seen_dst_ports.insert(f.dst_port).second) ? 1.0 : 0.0);

        put(AttributeId::ConnTotal, 1.0);
        put(AttributeId::ConnSameSrc, src_ip_count.at(f.src_ip));
        put(AttributeId::ConnSameDst, dst_ip_count.at(f.dst_ip));
        put(AttributeId::ConnSameService,
            service_count.at({f.dst_ip, f.dst_port, f.protocol}));

        const int dbin = duration_bin(f.duration);
        put(AttributeId::DurLt1s, dbin == 0 ? 1.0 : 0.0);
        put(AttributeId::Dur1To10s, dbin == 1 ? 1.0 : 0.0);
        put(AttributeId::Dur10To60s, dbin == 2 ? 1.0 : 0.0);
        put(AttributeId::DurGt60s, dbin == 3 ? 1.0 : 0.0);

        for (int a = static_cast<int>(AttributeId::PktArp);
             a <= static_cast<int>(AttributeId::PktNtp); ++a) {
            put(static_cast<AttributeId>(a), protocol_packets(static_cast<AttributeId>(a), f));
        }
        put(AttributeId::PktIpOption,
            (f.router_alert || f.padding) ? static_cast<double>(f.packets) : 0.0);
        put(AttributeId::SynErrors, (f.errors & conn_error::kSyn) ? 1.0 : 0.0);
        put(AttributeId::RejErrors, (f.errors & conn_error::kRej) ? 1.0 : 0.0);
        put(AttributeId::PktUrgent, f.urgent ? 1.0 : 0.0);

        const double s2d = static_cast<double>(f.bytes_src2dst);
        const double d2s = static_cast<double>(f.bytes_dst2src);
        put(AttributeId::DataTotal, s2d + d2s);
        put(AttributeId::DataSrc2Dst, s2d);
        put(AttributeId::DataDst2Src, d2s);

        const double avg_size = (s2d + d2s) / static_cast<double>(f.packets);
        const int sbin = size_bin(avg_size);
        put(AttributeId::SizeLt128, sbin == 0 ? 1.0 : 0.0);
        put(AttributeId::Size128To512, sbin == 1 ? 1.0 : 0.0);
        put(AttributeId::Size512To1500, sbin == 2 ? 1.0 : 0.0);
        put(AttributeId::SizeGt1500, sbin == 3 ? 1.0 : 0.0);

        for (int i = 0; i < 6; ++i) {
            put(static_cast<AttributeId>(static_cast<int>(AttributeId::SshLoginOk) + i),
                static_cast<double>(e.auth_counts[i]));
        }
    }
    return out;
}

ConnectionWindow::Destination ConnectionWindow::modal_destination() const {
    Destination best;
    int best_count = -1;
    std::map<std::tuple<std::string, std::uint16_t, std::uint8_t>, int> counts;
    for (const auto& e : entries_) {
        ++counts[{e.flow.dst_ip, e.flow.dst_port, static_cast<std::uint8_t>(e.flow.protocol)}];
    }
    for (const auto& [key, count] : counts) {
        if (count > best_count) {  // map iterates keys in order, first max wins
            best_count = count;
            best = {std::get<0>(key), std::get<1>(key),
                    static_cast<Protocol>(std::get<2>(key))};
        }
    }
    return best;
}

std::string to_string(const WindowId& id) {
    return to_string(id.device) + ":" + std::to_string(id.index);
}

WindowId parse_window_id(const std::string& text) {
    std::size_t pos = text.rfind(':');
    if (pos == std::string::npos || pos + 1 >= text.size()) {
        throw std::runtime_error("bad window id: " + text);
    }
    WindowId id;
    id.device = parse_mac(text.substr(0, pos));
    id.index = parse_int(text.substr(pos + 1), "window index");
    return id;
}

WindowingEngine::WindowingEngine(AggregationConfig config, std::vector<DeviceLogEvent> logs)
    : config_(config) {
    for (auto& ev : logs) logs_by_device_[ev.device_mac].push_back(ev);
    for (auto& [mac, evs] : logs_by_device_) {
        std::stable_sort(evs.begin(), evs.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    }
}

WindowingEngine::DeviceState& WindowingEngine::state_for(MacAddr device) {
    auto it = devices_.find(device);
    if (it == devices_.end()) {
        it = devices_.emplace(device, DeviceState{ConnectionWindow(config_.n_conn), 0, 0, 0.0, false})
                 .first;
    }
    return it->second;
}

std::array<std::uint32_t, 6> WindowingEngine::consume_auth(MacAddr device, DeviceState& st,
                                                           double up_to) {
    std::array<std::uint32_t, 6> counts{};
    auto it = logs_by_device_.find(device);
    if (it == logs_by_device_.end()) return counts;
    const auto& evs = it->second;
    while (st.log_cursor < evs.size() && evs[st.log_cursor].timestamp <= up_to) {
        const auto& ev = evs[st.log_cursor];
        int idx = static_cast<int>(ev.kind) * 2 + (ev.success ? 0 : 1);
        ++counts[idx];
        ++st.log_cursor;
    }
    return counts;
}

WindowRecord WindowingEngine::close_window(MacAddr device, DeviceState& st, bool partial) {
    WindowRecord rec;
    rec.id = WindowId{device, st.next_index++};
    rec.attrs = st.window.attributes();
    rec.t_first = st.window.first_timestamp();
    rec.t_last = st.window.last_timestamp();
    rec.connections = st.window.size();
    rec.partial = partial;
    rec.modal_dst = st.window.modal_destination();
    st.window.clear();
    st.last_emit_time = rec.t_last;
    st.has_emitted = true;
    return rec;
}

std::optional<WindowRecord> WindowingEngine::add_flow(const FlowRecord& flow) {
    DeviceState& st = state_for(flow.src_mac);
    WindowEntry entry{flow, consume_auth(flow.src_mac, st, flow.timestamp)};
    st.window.append(std::move(entry));
    if (st.window.full()) return close_window(flow.src_mac, st, false);
    return std::nullopt;
}

std::vector<WindowRecord> WindowingEngine::flush_before(double cutoff_time) {
    std::vector<WindowRecord> out;
    for (auto& [mac, st] : devices_) {
        if (st.window.size() > 0 && st.window.last_timestamp() <= cutoff_time) {
            out.push_back(close_window(mac, st, true));
        }
    }
    return out;
}

std::vector<WindowRecord> WindowingEngine::flush_all() {
    std::vector<WindowRecord> out;
    for (auto& [mac, st] : devices_) {
        if (st.window.size() > 0) out.push_back(close_window(mac, st, true));
    }
    return out;
}

std::vector<WindowRecord> window_flows(const std::vector<FlowRecord>& flows,
                                       const std::vector<DeviceLogEvent>& logs,
                                       const AggregationConfig& config) {
    WindowingEngine engine(config, logs);
    std::vector<WindowRecord> out;
    for (const auto& f : flows) {
        if (auto w = engine.add_flow(f)) out.push_back(std::move(*w));
    }
    for (auto& w : engine.flush_all()) out.push_back(std::move(w));
    return out;
}

const char* stat_name(Stat s) {
    switch (s) {
        case Stat::Mean: return "mean";
        case Stat::Std: return "std";
        case Stat::Count: return "count";
    }
    return "?";
}

std::string feature_name(const FeatureKey& key) {
    return std::string(attribute_name(key.attr)) + "." + stat_name(key.stat);
}

FeatureKey parse_feature_key(const std::string& text) {
    std::size_t dot = text.rfind('.');
    if (dot == std::string::npos) throw std::runtime_error("bad feature name: " + text);
    const std::string attr = text.substr(0, dot);
    const std::string stat = text.substr(dot + 1);
    FeatureKey key{};
    bool found = false;
    for (int i = 0; i < kAttributeCount; ++i) {
        if (attr == kAttributeNames[i]) {
            key.attr = static_cast<AttributeId>(i);
            found = true;
            break;
        }
    }
    if (!found) throw std::runtime_error("unknown attribute: " + attr);
    if (stat == "mean") key.stat = Stat::Mean;
    else if (stat == "std") key.stat = Stat::Std;
    else if (stat == "count") key.stat = Stat::Count;
    else throw std::runtime_error("unknown statistic: " + stat);
    return key;
}

FeatureSchema FeatureSchema::full() {
    std::vector<FeatureKey> keys;
    keys.reserve(kAttributeCount * 3);
    for (int a = 0; a < kAttributeCount; ++a) {
        for (Stat s : {Stat::Mean, Stat::Std, Stat::Count}) {
            keys.push_back({static_cast<AttributeId>(a), s});
        }
    }
    return from_features(std::move(keys));
}

FeatureSchema FeatureSchema::from_features(std::vector<FeatureKey> features) {
    FeatureSchema schema;
    schema.features_ = std::move(features);
    return schema;
}

Eigen::VectorXd FeatureSchema::raw_vector(const AttributeSet& attrs) const {
    Eigen::VectorXd v(size());
    for (int k = 0; k < size(); ++k) {
        const StatsSummary s = finalize_stats(attrs.slot(features_[k].attr));
        switch (features_[k].stat) {
            case Stat::Mean: v[k] = s.mean; break;
            case Stat::Std: v[k] = s.std_dev; break;
            case Stat::Count: v[k] = s.count; break;
        }
    }
    return v;
}

void FeatureSchema::learn_bounds(const Eigen::MatrixXd& raw_rows) {
    if (raw_rows.cols() != size()) {
        throw std::invalid_argument("bounds matrix does not match schema length");
    }
    lo_ = raw_rows.colwise().minCoeff();
    hi_ = raw_rows.colwise().maxCoeff();
    bounds_learned_ = true;
}

void FeatureSchema::set_bounds(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != size() || hi.size() != size()) {
        throw std::invalid_argument("bounds length does not match schema length");
    }
    lo_ = std::move(lo);
    hi_ = std::move(hi);
    bounds_learned_ = true;
}

Eigen::VectorXd FeatureSchema::normalize(const Eigen::VectorXd& raw) const {
    if (!bounds_learned_) throw std::logic_error("normalization bounds not learned");
    if (raw.size() != size()) throw std::invalid_argument("vector does not match schema");
    Eigen::VectorXd out(size());
    for (int k = 0; k < size(); ++k) {
        const double span = hi_[k] - lo_[k];
        out[k] = span > 0.0 ? std::clamp((raw[k] - lo_[k]) / span, 0.0, 1.0) : 0.0;
    }
    return out;
}

FeatureSchema FeatureSchema::retained(const std::vector<int>& keep) const {
    FeatureSchema out;
    out.features_.reserve(keep.size());
    if (bounds_learned_) {
        out.lo_.resize(static_cast<Eigen::Index>(keep.size()));
        out.hi_.resize(static_cast<Eigen::Index>(keep.size()));
    }
    int k = 0;
    for (int idx : keep) {
        if (idx < 0 || idx >= size()) throw std::out_of_range("feature index out of range");
        out.features_.push_back(features_[idx]);
        if (bounds_learned_) {
            out.lo_[k] = lo_[idx];
            out.hi_[k] = hi_[idx];
        }
        ++k;
    }
    out.bounds_learned_ = bounds_learned_;
    return out;
}

FeatureVector vectorize(const WindowRecord& window, const FeatureSchema& schema) {
    FeatureVector fv;
    fv.id = window.id;
    fv.partial = window.partial;
    Eigen::VectorXd raw = schema.raw_vector(window.attrs);
    fv.values = schema.bounds_learned() ? schema.normalize(raw) : std::move(raw);
    return fv;
}

Eigen::MatrixXd stack_rows(const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) return Eigen::MatrixXd(0, 0);
    const Eigen::Index h = vectors.front().values.size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), h);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].values.size() != h) {
            throw std::invalid_argument("feature vectors have mixed dimensions");
        }
        m.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
    }
    return m;
}

}  // namespace fw
