#include "flowwarden/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "flowwarden/textio.hpp"

namespace fw {

int PolicyMatch::specificity() const {
    return static_cast<int>(dst_ip.has_value()) + static_cast<int>(dst_port.has_value()) +
           static_cast<int>(protocol.has_value());
}

bool PolicyMatch::matches(const FlowRecord& flow) const {
    if (flow.src_mac != device) return false;
    if (dst_ip && *dst_ip != flow.dst_ip) return false;
    if (dst_port && *dst_port != flow.dst_port) return false;
    if (protocol && *protocol != flow.protocol) return false;
    return true;
}

std::string PolicyMatch::key() const {
    std::string k = to_string(device);
    k += '|';
    k += dst_ip ? *dst_ip : "*";
    k += '|';
    k += dst_port ? std::to_string(*dst_port) : "*";
    k += '|';
    k += protocol ? to_string(*protocol) : "*";
    return k;
}

const char* to_string(PolicyAction a) {
    switch (a) {
        case PolicyAction::Allow: return "ALLOW";
        case PolicyAction::RestrictToCloud: return "RESTRICT_TO_CLOUD";
        case PolicyAction::Isolate: return "ISOLATE";
    }
    return "?";
}

PolicyAction parse_policy_action(const std::string& text) {
    if (text == "ALLOW") return PolicyAction::Allow;
    if (text == "RESTRICT_TO_CLOUD") return PolicyAction::RestrictToCloud;
    if (text == "ISOLATE") return PolicyAction::Isolate;
    throw std::runtime_error("unknown policy action: " + text);
}

PolicyCache::PolicyCache(std::size_t capacity, double ttl) : capacity_(capacity), ttl_(ttl) {
    if (capacity_ == 0) throw std::invalid_argument("cache capacity must be positive");
    if (ttl_ < 0.0) throw std::invalid_argument("ttl must be non-negative");
}

void PolicyCache::erase_key(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    expiry_index_.erase({it->second.policy.expires_at, key});
    entries_.erase(it);
}

void PolicyCache::drop_expired(double now) {
    while (!expiry_index_.empty() && expiry_index_.begin()->first <= now) {
        const std::string key = expiry_index_.begin()->second;
        erase_key(key);
    }
}

std::optional<SecurityPolicy> PolicyCache::lookup(const FlowRecord& flow, double now) {
    // Probe the 8 wildcard shapes directly; the store is keyed, so a lookup
    // is a bounded number of hash probes regardless of cache size.
    const SecurityPolicy* best = nullptr;
    std::string best_key;
    for (int mask = 7; mask >= 0; --mask) {
        PolicyMatch probe;
        probe.device = flow.src_mac;
        if (mask & 1) probe.dst_ip = flow.dst_ip;
        if (mask & 2) probe.dst_port = flow.dst_port;
        if (mask & 4) probe.protocol = flow.protocol;
        auto it = entries_.find(probe.key());
        if (it == entries_.end()) continue;
        const SecurityPolicy& cand = it->second.policy;
        if (cand.expires_at <= now) continue;  // expired entries never match
        if (!best || cand.match.specificity() > best->match.specificity() ||
            (cand.match.specificity() == best->match.specificity() &&
             cand.created_at > best->created_at)) {
            best = &cand;
            best_key = it->first;
        }
    }
    if (!best) return std::nullopt;

    // Refresh on use: expiry extends to now + ttl.
    auto it = entries_.find(best_key);
    expiry_index_.erase({it->second.policy.expires_at, best_key});
    it->second.policy.expires_at = now + ttl_;
    expiry_index_.insert({it->second.policy.expires_at, best_key});
    return it->second.policy;
}

PolicyCache::InsertReport PolicyCache::insert(SecurityPolicy policy, double now) {
    InsertReport report;
    policy.created_at = now;
    policy.expires_at = now + ttl_;
    const std::string key = policy.match.key();

    if (entries_.count(key)) {
        report.replaced = true;
        erase_key(key);
    } else {
        drop_expired(now);
        if (entries_.size() >= capacity_) {
            // Evict the entry closest to expiry.
            report.evicted = true;
            report.victim_key = expiry_index_.begin()->second;
            erase_key(report.victim_key);
        }
    }
    expiry_index_.insert({policy.expires_at, key});
    entries_.emplace(key, Entry{std::move(policy)});
    return report;
}

std::vector<SecurityPolicy> PolicyCache::snapshot() const {
    std::map<std::string, const SecurityPolicy*> ordered;
    for (const auto& [key, entry] : entries_) ordered[key] = &entry.policy;
    std::vector<SecurityPolicy> out;
    out.reserve(ordered.size());
    for (const auto& [key, p] : ordered) out.push_back(*p);
    return out;
}

std::string PolicyCache::serialize() const {
    std::string out = "#flowwarden-policy-cache v1\n";
    out += "ttl\t" + dec17(ttl_) + '\n';
    std::map<std::string, const SecurityPolicy*> ordered;
    for (const auto& [key, entry] : entries_) ordered[key] = &entry.policy;
    for (const auto& [key, p] : ordered) {
        out += to_string(p->match.device);
        out += '\t';
        out += p->match.dst_ip ? *p->match.dst_ip : "*";
        out += '\t';
        out += p->match.dst_port ? std::to_string(*p->match.dst_port) : "*";
        out += '\t';
        out += p->match.protocol ? to_string(*p->match.protocol) : "*";
        out += '\t';
        out += to_string(p->action);
        out += '\t';
        out += to_string(p->verdict_label);
        out += '\t';
        out += dec17(p->created_at);
        out += '\t';
        out += dec17(p->expires_at);
        out += '\n';
    }
    return out;
}

PolicyCache PolicyCache::deserialize(const std::string& text, std::size_t capacity) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    if (lines.empty() || lines[0] != "#flowwarden-policy-cache v1") {
        throw std::runtime_error("not a policy cache snapshot");
    }
    double ttl = 300.0;
    std::vector<SecurityPolicy> policies;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        auto fields = split_fields(lines[i]);
        if (fields.size() == 2 && fields[0] == "ttl") {
            ttl = parse_double(fields[1], "ttl");
            continue;
        }
        if (fields.size() != 8) throw std::runtime_error("bad cache snapshot line: " + lines[i]);
        SecurityPolicy p;
        p.match.device = parse_mac(fields[0]);
        if (fields[1] != "*") p.match.dst_ip = fields[1];
        if (fields[2] != "*") p.match.dst_port = static_cast<std::uint16_t>(parse_u64(fields[2], "port"));
        if (fields[3] != "*") p.match.protocol = parse_protocol(fields[3]);
        p.action = parse_policy_action(fields[4]);
        p.verdict_label = parse_label(fields[5]);
        p.created_at = parse_double(fields[6], "created_at");
        p.expires_at = parse_double(fields[7], "expires_at");
        policies.push_back(std::move(p));
    }
    PolicyCache cache(capacity, ttl);
    for (auto& p : policies) {
        const std::string key = p.match.key();
        cache.expiry_index_.insert({p.expires_at, key});
        cache.entries_.emplace(key, Entry{std::move(p)});
    }
    return cache;
}

const char* to_string(Zone z) {
    switch (z) {
        case Zone::Safe: return "SAFE";
        case Zone::Suspicious: return "SUSPICIOUS";
        case Zone::Isolated: return "ISOLATED";
    }
    return "?";
}

void EndpointProfiler::record(const FlowRecord& flow) {
    ++counts_[flow.src_mac][{flow.dst_ip, flow.dst_port}];
}

std::vector<std::pair<std::string, std::uint16_t>> EndpointProfiler::top_endpoints(
    MacAddr device, int n) const {
    auto it = counts_.find(device);
    if (it == counts_.end()) return {};
    std::vector<std::pair<std::pair<std::string, std::uint16_t>, std::uint64_t>> items(
        it->second.begin(), it->second.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::pair<std::string, std::uint16_t>> out;
    for (const auto& [ep, count] : items) {
        if (static_cast<int>(out.size()) >= n) break;
        out.push_back(ep);
    }
    return out;
}

AonAssignment assign_zone(const Verdict& verdict, MacAddr device, DeviceZoneState& state,
                          const ZonePolicyConfig& config,
                          const std::vector<std::pair<std::string, std::uint16_t>>& cloud_endpoints) {
    if (!verdict.malicious) {
        if (state.zone == Zone::Safe) {
            state.benign_streak = 0;
        } else {
            ++state.benign_streak;
            if (state.benign_streak >= config.benign_windows_to_lift) {
                state.zone = Zone::Safe;
                state.benign_streak = 0;
            }
        }
    } else {
        state.benign_streak = 0;
        state.zone = config.isolate_labels.count(verdict.label) ? Zone::Isolated
                                                                : Zone::Suspicious;
    }

    AonAssignment out;
    out.device = device;
    out.zone = state.zone;
    if (state.zone == Zone::Suspicious) out.allowed_destinations = cloud_endpoints;
    return out;
}

const char* to_string(RuleAction a) {
    return a == RuleAction::Forward ? "FORWARD" : "DROP";
}

bool FlowRule::matches(const FlowRecord& flow) const {
    if (flow.src_mac == device) {
        if (remote_ip && *remote_ip != flow.dst_ip) return false;
        if (remote_port && *remote_port != flow.dst_port) return false;
        if (protocol && *protocol != flow.protocol) return false;
        return true;
    }
    if (flow.dst_mac == device) {
        if (remote_ip && *remote_ip != flow.src_ip) return false;
        if (remote_port && *remote_port != flow.src_port) return false;
        if (protocol && *protocol != flow.protocol) return false;
        return true;
    }
    return false;
}

std::vector<FlowRule> emit_rules(const AonAssignment& assignment, const SecurityPolicy& policy) {
    const double timeout = policy.expires_at - policy.created_at;
    std::vector<FlowRule> rules;
    switch (assignment.zone) {
        case Zone::Safe: {
            FlowRule r;
            r.priority = 0;
            r.device = assignment.device;
            r.action = RuleAction::Forward;
            r.idle_timeout = timeout;
            rules.push_back(std::move(r));
            break;
        }
        case Zone::Suspicious: {
            for (const auto& [ip, port] : assignment.allowed_destinations) {
                FlowRule r;
                r.priority = 20;  // ip+port specific
                r.device = assignment.device;
                r.remote_ip = ip;
                r.remote_port = port;
                r.action = RuleAction::Forward;
                r.idle_timeout = timeout;
                rules.push_back(std::move(r));
            }
            FlowRule drop;
            drop.priority = 0;  // strictly below every endpoint rule
            drop.device = assignment.device;
            drop.action = RuleAction::Drop;
            drop.idle_timeout = timeout;
            rules.push_back(std::move(drop));
            break;
        }
        case Zone::Isolated: {
            FlowRule drop;
            drop.priority = 0;
            drop.device = assignment.device;
            drop.action = RuleAction::Drop;
            drop.idle_timeout = timeout;
            rules.push_back(std::move(drop));
            break;
        }
    }
    return rules;
}

std::string format_flow_rules(const std::vector<FlowRule>& rules) {
    std::string out = "#flowwarden-flow-rules v1\n";
    for (const auto& r : rules) {
        out += to_string(r.device);
        out += '\t';
        out += std::to_string(r.priority);
        out += '\t';
        out += r.remote_ip ? *r.remote_ip : "*";
        out += '\t';
        out += r.remote_port ? std::to_string(*r.remote_port) : "*";
        out += '\t';
        out += r.protocol ? to_string(*r.protocol) : "*";
        out += '\t';
        out += to_string(r.action);
        out += '\t';
        out += dec6(r.idle_timeout);
        out += '\n';
    }
    return out;
}

void RuleTable::install(MacAddr device, std::vector<FlowRule> rules) {
    by_device_[device] = std::move(rules);
}

RuleAction RuleTable::decide(const FlowRecord& flow) const {
    RuleAction action = RuleAction::Forward;  // default allow
    for (MacAddr dev : {flow.src_mac, flow.dst_mac}) {
        auto it = by_device_.find(dev);
        if (it == by_device_.end()) continue;
        const FlowRule* best = nullptr;
        for (const auto& r : it->second) {
            if (!r.matches(flow)) continue;
            if (!best || r.priority > best->priority) best = &r;
        }
        if (best && best->action == RuleAction::Drop) action = RuleAction::Drop;
    }
    return action;
}

std::vector<FlowRule> RuleTable::all_rules() const {
    std::vector<FlowRule> out;
    for (const auto& [dev, rules] : by_device_) {
        out.insert(out.end(), rules.begin(), rules.end());
    }
    return out;
}

}  // namespace fw
