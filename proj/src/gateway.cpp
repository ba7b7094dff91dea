#include "flowwarden/gateway.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <stdexcept>

#include "flowwarden/model_select.hpp"
#include "flowwarden/reduction.hpp"
#include "flowwarden/textio.hpp"

namespace fw {

namespace {

Eigen::MatrixXd project_columns(const Eigen::MatrixXd& m, const std::vector<int>& keep) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = m.col(keep[k]);
    }
    return out;
}

std::vector<int> complement(int size, const std::vector<int>& dropped) {
    std::vector<bool> gone(static_cast<std::size_t>(size), false);
    for (int d : dropped) gone[static_cast<std::size_t>(d)] = true;
    std::vector<int> keep;
    for (int k = 0; k < size; ++k) {
        if (!gone[static_cast<std::size_t>(k)]) keep.push_back(k);
    }
    return keep;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    return x ^ (x >> 31);
}

}  // namespace

std::pair<RuleBase, TrainReport> train_pipeline(const TraceDataset& dataset,
                                                const TrainConfig& config) {
    if (dataset.flows.empty()) throw std::runtime_error("dataset has no flows");

    std::ostringstream rep;
    rep << "#flowwarden-train-report v1\n";

    const std::vector<WindowRecord> windows =
        window_flows(dataset.flows, dataset.logs, config.window);
    const int n = static_cast<int>(windows.size());
    rep << "windows=" << n << "\n";

    std::vector<int> candidates;
    for (int c : config.candidates) {
        if (c >= 2 && c <= n) candidates.push_back(c);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.empty() || n < *std::min_element(config.candidates.begin(),
                                                    config.candidates.end())) {
        throw std::runtime_error("fewer windows than the smallest cluster-count candidate");
    }
    if (candidates.size() < 2) {
        throw std::runtime_error("not enough windows to score cluster-count candidates");
    }

    // Pass 1: raw vectors, then min-max bounds, then normalized matrix.
    FeatureSchema schema = FeatureSchema::full();
    std::vector<FeatureVector> vecs;
    vecs.reserve(windows.size());
    for (const auto& w : windows) vecs.push_back(vectorize(w, schema));
    Eigen::MatrixXd raw = stack_rows(vecs);
    schema.learn_bounds(raw);
    Eigen::MatrixXd m(raw.rows(), raw.cols());
    for (Eigen::Index j = 0; j < raw.rows(); ++j) {
        m.row(j) = schema.normalize(raw.row(j).transpose()).transpose();
    }
    rep << "features.initial=" << schema.size() << "\n";

    // Correlation-based selection.
    CorrelationReport corr = pearson_matrix(m);
    std::vector<int> cfs_dropped = cfs_prune(corr, config.cfs_threshold);
    {
        std::set<int> drop_set(cfs_dropped.begin(), cfs_dropped.end());
        for (const auto& [keeper, doomed] : corr.drops) {
            rep << "drop feature=" << feature_name(schema.features()[static_cast<std::size_t>(doomed)])
                << " reason=cfs partner="
                << feature_name(schema.features()[static_cast<std::size_t>(keeper)]) << "\n";
        }
        const std::vector<int> keep = complement(schema.size(), cfs_dropped);
        if (keep.size() >= 2) {
            m = project_columns(m, keep);
            schema = schema.retained(keep);
        } else {
            rep << "note=cfs prune skipped (would leave <2 features)\n";
        }
    }
    rep << "features.after_cfs=" << schema.size() << "\n";

    // Deviation method needs classes: ground truth when present, otherwise
    // pseudo-classes from a first clustering pass.
    const bool labeled = config.use_truth_labels && !dataset.labels.empty();
    std::vector<int> classes;
    if (labeled) {
        classes = outputs_from_labels(vecs, dataset.labels);
    } else {
        FcmConfig first;
        first.cluster_count = std::min(4, n);
        first.fuzziness = config.fuzziness;
        first.epsilon = config.epsilon;
        first.max_iters = config.max_iters;
        first.alt_exponent = config.alt_exponent;
        first.seed = mix(config.seed, 0xf17575ULL);
        if (first.cluster_count >= 2) {
            classes = hard_assignments(fcm_fit(m, first).memberships);
        }
    }
    {
        std::set<int> distinct(classes.begin(), classes.end());
        if (distinct.size() >= 2) {
            const int min_support = std::max(
                1, static_cast<int>(std::llround(config.deviation_min_support_frac * n)));
            DeviationReport dev;
            std::vector<int> dropped =
                deviation_prune(m, classes, min_support, config.deviation_tolerance, &dev);
            for (int d : dropped) {
                rep << "drop feature="
                    << feature_name(schema.features()[static_cast<std::size_t>(d)])
                    << " reason=deviation\n";
            }
            const std::vector<int> keep = complement(schema.size(), dropped);
            if (keep.size() >= 2) {
                m = project_columns(m, keep);
                schema = schema.retained(keep);
            } else {
                rep << "note=deviation prune skipped (would leave <2 features)\n";
            }
        } else {
            rep << "note=deviation prune skipped (single class)\n";
        }
    }
    rep << "features.after_deviation=" << schema.size() << "\n";

    // Cluster-count selection.
    FcmConfig base_cfg;
    base_cfg.fuzziness = config.fuzziness;
    base_cfg.epsilon = config.epsilon;
    base_cfg.max_iters = config.max_iters;
    base_cfg.alt_exponent = config.alt_exponent;
    base_cfg.seed = config.seed;
    const VoteOutcome outcome = select_cluster_count(m, candidates, config.gap_refs, base_cfg);
    rep << "selection candidate\twcsd\tsilhouette\tgap\tgap_se\tch\tdb\tvotes\n";
    for (const auto& s : outcome.scores) {
        rep << "candidate " << s.candidate << '\t' << dec17(s.wcsd) << '\t'
            << dec17(s.mean_silhouette) << '\t' << dec17(s.gap) << '\t' << dec17(s.gap_se)
            << '\t' << dec17(s.calinski_harabasz) << '\t' << dec17(s.davies_bouldin) << '\t'
            << s.votes << "\n";
    }
    rep << "selection.elbow=" << outcome.elbow_pick << "\n";
    rep << "selection.silhouette=" << outcome.silhouette_pick << "\n";
    rep << "selection.gap=" << outcome.gap_pick << "\n";
    rep << "selection.ch=" << outcome.ch_pick << "\n";
    rep << "selection.db=" << outcome.db_pick << "\n";
    rep << "selection.chosen=" << outcome.chosen << "\n";

    // Final fit with post-clustering score pruning and re-clustering.
    FcmConfig fit_cfg = base_cfg;
    fit_cfg.cluster_count = outcome.chosen;
    fit_cfg.seed = mix(config.seed, 0xf1750000ULL + static_cast<std::uint64_t>(outcome.chosen));
    FcmModel model = fcm_fit(m, fit_cfg);
    for (int round = 0; round < config.score_prune_rounds; ++round) {
        std::vector<int> dropped = score_prune(model, m, config.score_tolerance);
        if (dropped.empty()) break;
        const std::vector<int> keep = complement(schema.size(), dropped);
        if (keep.size() < 2) {
            rep << "note=score prune stopped (would leave <2 features)\n";
            break;
        }
        for (int d : dropped) {
            rep << "drop feature=" << feature_name(schema.features()[static_cast<std::size_t>(d)])
                << " reason=score round=" << round << "\n";
        }
        m = project_columns(m, keep);
        schema = schema.retained(keep);
        model = fcm_fit(m, fit_cfg);
    }
    rep << "features.final=" << schema.size() << "\n";
    rep << "fcm.iterations=" << model.iterations << "\n";
    rep << "fcm.converged=" << (model.converged ? 1 : 0) << "\n";
    rep << "fcm.objective";
    for (double j : model.objective_trace) rep << ' ' << dec17(j);
    rep << "\n";
    for (std::size_t i = 0; i < model.cluster_mass.size(); ++i) {
        if (model.cluster_mass[i] <= 0.0) rep << "note=cluster " << i << " has zero mass\n";
    }

    // Consequent outputs: truth codes or signature pseudo-labels.
    std::vector<int> outputs;
    std::vector<std::string> evidence;
    if (labeled) {
        outputs = outputs_from_labels(vecs, dataset.labels);
    } else {
        outputs = pseudo_outputs_from_scores(model, m, schema, &evidence);
    }

    RuleBase base = build_rulebase(model, m, outputs, schema);
    base.window = config.window;
    if (!labeled) {
        for (std::size_t i = 0; i < base.rules.size() && i < evidence.size(); ++i) {
            base.rules[i].evidence += " signature=" + evidence[i];
        }
    }

    for (std::size_t i = 0; i < base.rules.size(); ++i) {
        rep << "rule " << i << " label=" << to_string(base.rules[i].label)
            << " degenerate=" << (base.rules[i].degenerate ? 1 : 0) << " evidence=\""
            << base.rules[i].evidence << "\"\n";
    }

    TrainReport report;
    report.text = rep.str();
    return {std::move(base), std::move(report)};
}

namespace {

struct PipelineState {
    PolicyCache cache;
    EndpointProfiler profiler;
    RuleTable rules;
    std::map<MacAddr, DeviceZoneState> zones;

    explicit PipelineState(const PolicyConfig& cfg)
        : cache(cfg.cache_capacity, cfg.cache_ttl) {}
};

FlowRecord window_probe_flow(const WindowRecord& w) {
    FlowRecord probe;
    probe.timestamp = w.t_last;
    probe.src_mac = w.id.device;
    probe.dst_ip = w.modal_dst.dst_ip;
    probe.dst_port = w.modal_dst.dst_port;
    probe.protocol = w.modal_dst.protocol;
    return probe;
}

}  // namespace

SimReport run_pipeline(const TraceDataset& dataset, const RuleBase& rulebase,
                       const PolicyConfig& config) {
    if (rulebase.schema.size() < 1 || !rulebase.schema.bounds_learned()) {
        throw std::runtime_error("rule base schema missing normalization bounds");
    }
    if (rulebase.active_rule_count() == 0) {
        throw std::runtime_error("rule base has no usable rules");
    }

    SimReport report;
    PipelineState st(config);
    WindowingEngine engine(rulebase.window, dataset.logs);

    auto process_window = [&](const WindowRecord& w) {
        const FlowRecord probe = window_probe_flow(w);
        const double now = w.t_last;
        ++report.lookups;

        WindowVerdict wv;
        wv.id = w.id;
        wv.close_time = now;

        std::optional<SecurityPolicy> cached = st.cache.lookup(probe, now);
        SecurityPolicy policy;
        if (cached) {
            ++report.hits;
            wv.cache_hit = true;
            wv.verdict.label = cached->verdict_label;
            wv.verdict.malicious = is_malicious(cached->verdict_label);
            wv.verdict.o_star = label_code(cached->verdict_label);
            wv.verdict.confidence = 1.0;
            policy = *cached;
        } else {
            ++report.invocations;
            const FeatureVector fv = vectorize(w, rulebase.schema);
            wv.verdict = infer(rulebase, fv.values);

            policy.verdict_label = wv.verdict.label;
            policy.match.device = w.id.device;
            if (wv.verdict.malicious) {
                // device-wide containment entry
                policy.action = config.zones.isolate_labels.count(wv.verdict.label)
                                    ? PolicyAction::Isolate
                                    : PolicyAction::RestrictToCloud;
            } else {
                // narrow fast-path entry for the window's dominant service
                policy.match.dst_ip = w.modal_dst.dst_ip;
                policy.match.dst_port = w.modal_dst.dst_port;
                policy.match.protocol = w.modal_dst.protocol;
                policy.action = PolicyAction::Allow;
            }
            st.cache.insert(policy, now);
        }
        report.policies_resident.emplace_back(now, st.cache.size());

        DeviceZoneState& zstate = st.zones[w.id.device];
        const auto endpoints =
            st.profiler.top_endpoints(w.id.device, config.zones.cloud_top_n);
        const AonAssignment assignment =
            assign_zone(wv.verdict, w.id.device, zstate, config.zones, endpoints);
        st.rules.install(w.id.device, emit_rules(assignment, policy));

        report.verdicts.push_back(std::move(wv));
    };

    double last_flush = dataset.flows.empty() ? 0.0 : dataset.flows.front().timestamp;
    for (const auto& flow : dataset.flows) {
        if (flow.timestamp - last_flush >= config.flush_interval) {
            for (const auto& w : engine.flush_before(flow.timestamp - config.flush_interval)) {
                process_window(w);
            }
            last_flush = flow.timestamp;
        }

        if (st.rules.decide(flow) == RuleAction::Forward) {
            ++report.forwarded[flow.src_mac];
            if (st.zones[flow.src_mac].zone == Zone::Safe) st.profiler.record(flow);
        } else {
            ++report.dropped[flow.src_mac];
        }

        if (auto w = engine.add_flow(flow)) process_window(*w);
    }
    for (const auto& w : engine.flush_all()) process_window(w);

    report.cache_hit_rate =
        report.lookups > 0 ? static_cast<double>(report.hits) / report.lookups : 0.0;
    for (const auto& [mac, zs] : st.zones) report.final_zone[mac] = zs.zone;
    report.final_rules = st.rules.all_rules();
    report.cache_snapshot = st.cache.serialize();

    if (!dataset.labels.empty()) {
        std::vector<TrafficLabel> predicted, truth;
        for (const auto& wv : report.verdicts) {
            auto it = dataset.labels.find(wv.id);
            if (it == dataset.labels.end()) continue;
            predicted.push_back(wv.verdict.label);
            truth.push_back(it->second);
        }
        if (!predicted.empty()) {
            report.metrics = compute_metrics(predicted, truth, MetricsMode::Multi);
            report.has_metrics = true;
        }
    }
    return report;
}

std::vector<WindowVerdict> classify_dataset(const TraceDataset& dataset,
                                            const RuleBase& rulebase) {
    if (!rulebase.schema.bounds_learned()) {
        throw std::runtime_error("rule base schema missing normalization bounds");
    }
    std::vector<WindowVerdict> out;
    for (const auto& w : window_flows(dataset.flows, dataset.logs, rulebase.window)) {
        WindowVerdict wv;
        wv.id = w.id;
        wv.close_time = w.t_last;
        wv.verdict = infer(rulebase, vectorize(w, rulebase.schema).values);
        out.push_back(std::move(wv));
    }
    return out;
}

std::string format_verdicts(const std::vector<WindowVerdict>& verdicts) {
    std::string out = "#flowwarden-verdicts v1\n";
    for (const auto& wv : verdicts) {
        out += to_string(wv.id);
        out += '\t';
        out += dec17(wv.verdict.o_star);
        out += '\t';
        out += to_string(wv.verdict.label);
        out += '\t';
        out += dec17(wv.verdict.confidence);
        out += '\n';
    }
    return out;
}

std::vector<ParsedVerdict> parse_verdicts(const std::string& text) {
    std::vector<ParsedVerdict> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw std::runtime_error("verdicts line " + std::to_string(line_no) +
                                     ": expected 4 fields");
        }
        ParsedVerdict v;
        v.id = parse_window_id(fields[0]);
        v.o_star = parse_double(fields[1], "o_star");
        v.label = parse_label(fields[2]);
        v.confidence = parse_double(fields[3], "confidence");
        out.push_back(std::move(v));
    }
    return out;
}

std::string format_sim_report(const SimReport& report) {
    std::ostringstream out;
    out << "#flowwarden-sim-report v1\n";
    out << "lookups=" << report.lookups << "\n";
    out << "hits=" << report.hits << "\n";
    out << "invocations=" << report.invocations << "\n";
    out << "cache_hit_rate=" << dec17(report.cache_hit_rate) << "\n";
    std::uint64_t fwd = 0, drp = 0;
    for (const auto& [mac, c] : report.forwarded) fwd += c;
    for (const auto& [mac, c] : report.dropped) drp += c;
    out << "flows.forwarded=" << fwd << "\n";
    out << "flows.dropped=" << drp << "\n";
    for (const auto& [mac, zone] : report.final_zone) {
        out << "zone\t" << to_string(mac) << '\t' << to_string(zone) << '\t'
            << (report.forwarded.count(mac) ? report.forwarded.at(mac) : 0) << '\t'
            << (report.dropped.count(mac) ? report.dropped.at(mac) : 0) << "\n";
    }
    if (report.has_metrics) out << format_metrics(report.metrics);
    out << "#verdicts\n";
    out << format_verdicts(report.verdicts);
    return out.str();
}

std::string format_feature_histograms(const std::vector<FeatureVector>& vectors,
                                      const FeatureSchema& schema) {
    constexpr int kBins = 20;
    std::string out = "#flowwarden-feature-histograms v1\nfeature\tbin_lo\tbin_hi\tcount\n";
    if (vectors.empty()) return out;
    for (int k = 0; k < schema.size(); ++k) {
        std::array<std::uint64_t, kBins> counts{};
        for (const auto& v : vectors) {
            const double x = std::clamp(v.values[k], 0.0, 1.0);
            const int bin = std::min(kBins - 1, static_cast<int>(x * kBins));
            ++counts[static_cast<std::size_t>(bin)];
        }
        for (int b = 0; b < kBins; ++b) {
            out += feature_name(schema.features()[static_cast<std::size_t>(k)]);
            out += '\t';
            out += dec17(static_cast<double>(b) / kBins);
            out += '\t';
            out += dec17(static_cast<double>(b + 1) / kBins);
            out += '\t';
            out += std::to_string(counts[static_cast<std::size_t>(b)]);
            out += '\n';
        }
    }
    return out;
}

}  // namespace fw
