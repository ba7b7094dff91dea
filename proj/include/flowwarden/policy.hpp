#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowwarden/fis.hpp"
#include "flowwarden/flow.hpp"

namespace fw {

// Match key of a cached policy: device required, the destination fields
// optional (absent = wildcard). Specificity counts the set optional fields.
struct PolicyMatch {
    MacAddr device;
    std::optional<std::string> dst_ip;
    std::optional<std::uint16_t> dst_port;
    std::optional<Protocol> protocol;

    int specificity() const;
    bool matches(const FlowRecord& flow) const;
    std::string key() const;  // canonical text key, also the hash key

    friend bool operator==(const PolicyMatch&, const PolicyMatch&) = default;
};

enum class PolicyAction : std::uint8_t { Allow, RestrictToCloud, Isolate };
const char* to_string(PolicyAction a);
PolicyAction parse_policy_action(const std::string& text);

struct SecurityPolicy {
    PolicyMatch match;
    PolicyAction action = PolicyAction::Allow;
    TrafficLabel verdict_label = TrafficLabel::Benign;
    double created_at = 0.0;
    double expires_at = 0.0;
};

// Expiring keyed store with most-specific-match lookup. Hash-keyed inserts
// and probes; an ordered expiry index drives capacity eviction (earliest
// expiry out first). A lookup hit refreshes the entry's expiry to now+ttl.
class PolicyCache {
public:
    PolicyCache(std::size_t capacity, double ttl);

    // Highest-specificity non-expired match; ties resolve to the most
    // recently created. Expired entries are never returned.
    std::optional<SecurityPolicy> lookup(const FlowRecord& flow, double now);

    struct InsertReport {
        bool evicted = false;
        bool replaced = false;
        std::string victim_key;
    };
    InsertReport insert(SecurityPolicy policy, double now);

    std::size_t size() const { return entries_.size(); }
    double ttl() const { return ttl_; }

    std::vector<SecurityPolicy> snapshot() const;

    // Versioned structured-text persistence of the live entries.
    std::string serialize() const;
    static PolicyCache deserialize(const std::string& text, std::size_t capacity);

private:
    struct Entry {
        SecurityPolicy policy;
    };

    void erase_key(const std::string& key);
    void drop_expired(double now);

    std::size_t capacity_;
    double ttl_;
    std::unordered_map<std::string, Entry> entries_;
    std::set<std::pair<double, std::string>> expiry_index_;
};

enum class Zone : std::uint8_t { Safe, Suspicious, Isolated };
const char* to_string(Zone z);

// Per-device overlay placement. SAFE carries no destination list
// (unrestricted); SUSPICIOUS keeps exactly the listed cloud endpoints
// reachable; ISOLATED reaches nothing.
struct AonAssignment {
    MacAddr device;
    Zone zone = Zone::Safe;
    std::vector<std::pair<std::string, std::uint16_t>> allowed_destinations;
};

struct ZonePolicyConfig {
    int benign_windows_to_lift = 3;  // hysteresis K
    std::set<TrafficLabel> isolate_labels = {TrafficLabel::DataTheft};
    int cloud_top_n = 3;
};

struct DeviceZoneState {
    Zone zone = Zone::Safe;
    int benign_streak = 0;
};

// Learns each device's cloud endpoints: top benign (dst_ip, dst_port) pairs
// by flow count, recorded while the device is unrestricted.
class EndpointProfiler {
public:
    void record(const FlowRecord& flow);
    std::vector<std::pair<std::string, std::uint16_t>> top_endpoints(MacAddr device,
                                                                     int n) const;

private:
    std::map<MacAddr, std::map<std::pair<std::string, std::uint16_t>, std::uint64_t>> counts_;
};

// Verdict -> zone transition with de-escalation hysteresis: a restricted
// device returns to SAFE only after K consecutive benign windows.
AonAssignment assign_zone(const Verdict& verdict, MacAddr device, DeviceZoneState& state,
                          const ZonePolicyConfig& config,
                          const std::vector<std::pair<std::string, std::uint16_t>>& cloud_endpoints);

enum class RuleAction : std::uint8_t { Forward, Drop };
const char* to_string(RuleAction a);

// Abstract flow-table entry. Matches flows where the device is either
// endpoint; the optional fields constrain the remote end.
struct FlowRule {
    int priority = 0;  // specificity * 10; higher wins
    MacAddr device;
    std::optional<std::string> remote_ip;
    std::optional<std::uint16_t> remote_port;
    std::optional<Protocol> protocol;
    RuleAction action = RuleAction::Forward;
    double idle_timeout = 0.0;

    bool matches(const FlowRecord& flow) const;
};

std::vector<FlowRule> emit_rules(const AonAssignment& assignment, const SecurityPolicy& policy);

std::string format_flow_rules(const std::vector<FlowRule>& rules);

// Per-device rule tables with a default-forward fallback; a flow is dropped
// when the best-matching rule of either endpoint device says Drop.
class RuleTable {
public:
    void install(MacAddr device, std::vector<FlowRule> rules);
    RuleAction decide(const FlowRecord& flow) const;
    std::vector<FlowRule> all_rules() const;

private:
    std::map<MacAddr, std::vector<FlowRule>> by_device_;
};

}  // namespace fw
