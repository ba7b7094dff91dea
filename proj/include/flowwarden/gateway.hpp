#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowwarden/fis.hpp"
#include "flowwarden/metrics.hpp"
#include "flowwarden/policy.hpp"
#include "flowwarden/trace.hpp"

namespace fw {

struct TrainConfig {
    AggregationConfig window;
    double cfs_threshold = 0.9;
    double deviation_tolerance = 0.05;
    double deviation_min_support_frac = 0.05;
    double score_tolerance = 0.05;
    int score_prune_rounds = 3;
    std::vector<int> candidates = {2, 3, 4, 5, 6, 8, 10, 12};
    int gap_refs = 20;
    double fuzziness = 2.0;
    double epsilon = 1e-6;
    int max_iters = 300;
    std::uint64_t seed = 0;
    bool use_truth_labels = true;  // when the dataset carries labels
    bool alt_exponent = false;
};

struct TrainReport {
    std::string text;  // human-readable sections, machine-parsable key=value core
};

std::pair<RuleBase, TrainReport> train_pipeline(const TraceDataset& dataset,
                                                const TrainConfig& config);

struct PolicyConfig {
    double cache_ttl = 300.0;
    std::size_t cache_capacity = 10000;
    double flush_interval = 60.0;  // wall-clock straggler flush
    ZonePolicyConfig zones;
};

struct WindowVerdict {
    WindowId id;
    double close_time = 0.0;
    Verdict verdict;
    bool cache_hit = false;
};

struct SimReport {
    std::vector<WindowVerdict> verdicts;
    std::uint64_t lookups = 0;
    std::uint64_t hits = 0;
    std::uint64_t invocations = 0;  // classifier calls; equals misses
    double cache_hit_rate = 0.0;
    std::vector<std::pair<double, std::size_t>> policies_resident;  // (time, cache size)
    std::map<MacAddr, std::uint64_t> forwarded;
    std::map<MacAddr, std::uint64_t> dropped;
    std::map<MacAddr, Zone> final_zone;
    std::vector<FlowRule> final_rules;   // installed rule tables at replay end
    std::string cache_snapshot;          // serialized policy cache at replay end
    MetricsTable metrics;  // vs dataset labels, when present
    bool has_metrics = false;
};

// Full replay: flows in timestamp order, each closed device window is looked
// up in the policy cache and classified only on miss; verdicts become cached
// policies and zone assignments whose rules gate subsequent flows.
SimReport run_pipeline(const TraceDataset& dataset, const RuleBase& rulebase,
                       const PolicyConfig& config);

// Classification without enforcement: verdict per window.
std::vector<WindowVerdict> classify_dataset(const TraceDataset& dataset,
                                            const RuleBase& rulebase);

std::string format_sim_report(const SimReport& report);

std::string format_verdicts(const std::vector<WindowVerdict>& verdicts);
struct ParsedVerdict {
    WindowId id;
    double o_star = 0.0;
    TrafficLabel label = TrafficLabel::Benign;
    double confidence = 0.0;
};
std::vector<ParsedVerdict> parse_verdicts(const std::string& text);

// Per-feature histogram columns (normalized values, 20 bins) for offline
// distribution inspection.
std::string format_feature_histograms(const std::vector<FeatureVector>& vectors,
                                      const FeatureSchema& schema);

}  // namespace fw
