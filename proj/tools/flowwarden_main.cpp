// flowwarden: traffic anomaly detection for edge networks.
// Subcommands: generate, train, classify, simulate, report.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "flowwarden/gateway.hpp"
#include "flowwarden/metrics.hpp"
#include "flowwarden/model_io.hpp"
#include "flowwarden/synth.hpp"
#include "flowwarden/textio.hpp"
#include "flowwarden/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::vector<int> parse_candidates(const std::string& csv) {
    std::vector<int> out;
    for (const auto& tok : fw::split_fields(csv, ',')) {
        out.push_back(fw::parse_int(tok, "candidate"));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowwarden: edge-network traffic anomaly detection"};
    app.require_subcommand(1);

    // --- generate ---
    auto* gen = app.add_subcommand("generate", "emit a synthetic benign/attack trace");
    std::string gen_scenario = "BENIGN";
    int gen_devices = 4;
    double gen_duration = 600.0;
    std::uint64_t gen_seed = 1;
    int gen_nconn = 50;
    std::string gen_out, gen_out_logs, gen_out_labels, gen_config;
    gen->add_option("--scenario", gen_scenario,
                    "traffic label name, or MIXED for all scenarios");
    gen->add_option("--devices", gen_devices, "devices per scenario");
    gen->add_option("--duration", gen_duration, "trace length in seconds");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--n-conn", gen_nconn, "window length used for ground-truth labels");
    gen->add_option("--out", gen_out, "flow records output (.fw)")->required();
    gen->add_option("--out-logs", gen_out_logs, "device log output (.fwl)");
    gen->add_option("--out-labels", gen_out_labels, "ground-truth labels output (.fwy)");
    gen->add_option("--config", gen_config, "key=value rate overrides");

    // --- train ---
    auto* train = app.add_subcommand("train", "train a model from a trace");
    std::string train_in, train_logs, train_labels, train_out, train_report;
    std::uint64_t train_seed = 0;
    int train_nconn = 50;
    std::string train_candidates;
    int train_gap_refs = 20;
    bool train_ignore_labels = false;
    double train_cfs = 0.9, train_m = 2.0;
    train->add_option("--in", train_in, "flow records (.fw)")->required();
    train->add_option("--logs", train_logs, "device logs (.fwl)");
    train->add_option("--labels", train_labels, "ground-truth labels (.fwy)");
    train->add_option("--out", train_out, "model output (.fwm)")->required();
    train->add_option("--report", train_report, "training report output");
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--n-conn", train_nconn, "connections per window");
    train->add_option("--candidates", train_candidates, "cluster-count candidates, csv");
    train->add_option("--gap-refs", train_gap_refs, "gap-statistic reference sets");
    train->add_option("--cfs-threshold", train_cfs, "correlation prune threshold");
    train->add_option("--fuzziness", train_m, "FCM fuzziness index m");
    train->add_flag("--ignore-labels", train_ignore_labels,
                    "train unlabeled even if labels are given");

    // --- classify ---
    auto* classify = app.add_subcommand("classify", "classify a trace with a model");
    std::string cls_model, cls_in, cls_logs, cls_out;
    classify->add_option("--model", cls_model, "model file (.fwm)")->required();
    classify->add_option("--in", cls_in, "flow records (.fw)")->required();
    classify->add_option("--logs", cls_logs, "device logs (.fwl)");
    classify->add_option("--out", cls_out, "verdicts output")->required();

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "replay a trace through the gateway loop");
    std::string sim_model, sim_in, sim_logs, sim_labels, sim_out, sim_rules_out, sim_cache_out;
    double sim_ttl = 300.0;
    std::size_t sim_capacity = 10000;
    double sim_flush = 60.0;
    sim->add_option("--model", sim_model, "model file (.fwm)")->required();
    sim->add_option("--in", sim_in, "flow records (.fw)")->required();
    sim->add_option("--logs", sim_logs, "device logs (.fwl)");
    sim->add_option("--labels", sim_labels, "ground-truth labels (.fwy)");
    sim->add_option("--out", sim_out, "simulation report output");
    sim->add_option("--rules-out", sim_rules_out, "final flow rules export");
    sim->add_option("--cache-out", sim_cache_out, "policy cache snapshot output");
    sim->add_option("--cache-ttl", sim_ttl, "policy ttl seconds");
    sim->add_option("--cache-capacity", sim_capacity, "policy cache capacity");
    sim->add_option("--flush-interval", sim_flush, "straggler window flush seconds");

    // --- report ---
    auto* rpt = app.add_subcommand("report", "score verdicts against ground truth");
    std::string rpt_verdicts, rpt_truth, rpt_mode = "multi", rpt_out;
    std::string rpt_hist, rpt_trace, rpt_trace_logs, rpt_model;
    rpt->add_option("--verdicts", rpt_verdicts, "verdicts file")->required();
    rpt->add_option("--truth", rpt_truth, "ground-truth labels (.fwy)")->required();
    rpt->add_option("--mode", rpt_mode, "binary or multi");
    rpt->add_option("--out", rpt_out, "metrics output (stdout if omitted)");
    rpt->add_option("--histograms", rpt_hist, "per-feature histogram export");
    rpt->add_option("--trace", rpt_trace, "trace for histogram export (.fw)");
    rpt->add_option("--trace-logs", rpt_trace_logs, "device logs for histogram export");
    rpt->add_option("--model", rpt_model, "model whose schema shapes histograms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            fw::ScenarioConfig cfg;
            if (!gen_config.empty()) {
                cfg = fw::ScenarioConfig::from_kv_text(fw::read_file(gen_config));
            }
            fw::AggregationConfig agg{gen_nconn};
            fw::TraceDataset ds;
            if (gen_scenario == "MIXED" || gen_scenario == "mixed") {
                ds = fw::generate_mixed(gen_devices, gen_duration, gen_seed, cfg, agg);
            } else {
                ds = fw::generate_synthetic(fw::parse_label(gen_scenario), gen_devices,
                                            gen_duration, gen_seed, cfg, agg);
            }
            fw::save_dataset(ds, gen_out, gen_out_logs, gen_out_labels);
            std::cout << "flows=" << ds.flows.size() << " logs=" << ds.logs.size()
                      << " windows=" << ds.labels.size() << "\n";
        } else if (*train) {
            fw::TraceDataset ds = fw::load_dataset(train_in, train_logs, train_labels);
            fw::TrainConfig cfg;
            cfg.window.n_conn = train_nconn;
            cfg.seed = train_seed;
            cfg.gap_refs = train_gap_refs;
            cfg.cfs_threshold = train_cfs;
            cfg.fuzziness = train_m;
            cfg.use_truth_labels = !train_ignore_labels;
            if (!train_candidates.empty()) cfg.candidates = parse_candidates(train_candidates);
            auto [base, report] = fw::train_pipeline(ds, cfg);
            fw::save_rulebase(base, train_out);
            if (!train_report.empty()) {
                fw::write_file(train_report, report.text);
            } else {
                std::cout << report.text;
            }
        } else if (*classify) {
            const fw::RuleBase base = fw::load_rulebase(cls_model);
            const fw::TraceDataset ds = fw::load_dataset(cls_in, cls_logs);
            fw::write_file(cls_out, fw::format_verdicts(fw::classify_dataset(ds, base)));
        } else if (*sim) {
            const fw::RuleBase base = fw::load_rulebase(sim_model);
            const fw::TraceDataset ds = fw::load_dataset(sim_in, sim_logs, sim_labels);
            fw::PolicyConfig cfg;
            cfg.cache_ttl = sim_ttl;
            cfg.cache_capacity = sim_capacity;
            cfg.flush_interval = sim_flush;
            const fw::SimReport report = fw::run_pipeline(ds, base, cfg);
            const std::string text = fw::format_sim_report(report);
            if (!sim_out.empty()) {
                fw::write_file(sim_out, text);
            } else {
                std::cout << text;
            }
            if (!sim_rules_out.empty()) {
                fw::write_file(sim_rules_out, fw::format_flow_rules(report.final_rules));
            }
            if (!sim_cache_out.empty()) {
                fw::write_file(sim_cache_out, report.cache_snapshot);
            }
        } else if (*rpt) {
            const auto verdicts = fw::parse_verdicts(fw::read_file(rpt_verdicts));
            const auto truth_map = fw::parse_labels(fw::read_file(rpt_truth));
            std::vector<fw::TrafficLabel> predicted, truth;
            for (const auto& v : verdicts) {
                auto it = truth_map.find(v.id);
                if (it == truth_map.end()) continue;
                predicted.push_back(v.label);
                truth.push_back(it->second);
            }
            const fw::MetricsMode mode =
                rpt_mode == "binary" ? fw::MetricsMode::Binary : fw::MetricsMode::Multi;
            const fw::MetricsTable table = fw::compute_metrics(predicted, truth, mode);
            const std::string text = fw::format_metrics(table);
            if (!rpt_out.empty()) {
                fw::write_file(rpt_out, text);
            } else {
                std::cout << text;
            }
            if (!rpt_hist.empty()) {
                if (rpt_trace.empty() || rpt_model.empty()) {
                    throw std::runtime_error("--histograms needs --trace and --model");
                }
                const fw::RuleBase base = fw::load_rulebase(rpt_model);
                const fw::TraceDataset ds = fw::load_dataset(rpt_trace, rpt_trace_logs);
                std::vector<fw::FeatureVector> vecs;
                for (const auto& w :
                     fw::window_flows(ds.flows, ds.logs, base.window)) {
                    vecs.push_back(fw::vectorize(w, base.schema));
                }
                fw::write_file(rpt_hist, fw::format_feature_histograms(vecs, base.schema));
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
