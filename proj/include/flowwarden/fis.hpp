#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flowwarden/fcm.hpp"
#include "flowwarden/features.hpp"
#include "flowwarden/flow.hpp"

namespace fw {

// Triangular fuzzy set (a, b, c): membership 1 at b, 0 at and beyond a and
// c, linear between. a <= b <= c; point masses collapse to a == b == c.
struct TriangularSet {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double membership(double x) const;

    friend bool operator==(const TriangularSet&, const TriangularSet&) = default;
};

// D_f(A) = (a + 2b + c) / 4
double defuzzify(const TriangularSet& set);

struct FuzzyRule {
    std::vector<TriangularSet> antecedents;  // one per schema feature
    TriangularSet consequent;                // over class codes
    TrafficLabel label = TrafficLabel::Benign;
    Eigen::VectorXd defuzz_antecedents;      // cached defuzzified antecedent vector
    bool degenerate = false;                 // zero-mass cluster; excluded from inference
    std::string evidence;                    // how the label was assigned
};

struct RuleBase {
    std::vector<FuzzyRule> rules;  // one per cluster
    FeatureSchema schema;
    AggregationConfig window;  // windowing the schema was trained under
    FcmModel fcm;  // centers/config retained; memberships may be empty after load

    int active_rule_count() const;
    std::vector<int> label_codes() const;  // distinct codes of non-degenerate rules
};

struct Verdict {
    double o_star = 0.0;            // distance-weighted inferred output
    double activation_output = 0.0; // activation-weighted output (diagnostic)
    bool has_activation = false;
    TrafficLabel label = TrafficLabel::Benign;
    bool malicious = false;
    std::vector<std::pair<int, double>> activated_rules;  // (rule index, weight)
    double confidence = 0.0;  // max rule weight
    bool interpolated = false;  // no rule activated; pure distance weighting
};

// One rule per cluster: antecedent centers at the max-membership sample,
// left/right points as membership-weighted one-sided means; consequents
// built the same way over the per-sample class codes. Zero-mass clusters
// yield degenerate rules excluded from inference.
RuleBase build_rulebase(const FcmModel& model, const Eigen::MatrixXd& rows,
                        const std::vector<int>& outputs, const FeatureSchema& schema);

// Nearest class code to o_star among `codes`; exact midpoints resolve to the
// higher (malicious-ward) code.
TrafficLabel label_map(double o_star, const std::vector<int>& codes);
TrafficLabel label_map(double o_star);  // over all class codes

// Sparse-rule interpolation: rules activated by positive antecedent
// membership are weighted by inverse-square distance between the input and
// each rule's defuzzified antecedent vector; with no activation the same
// distance weighting interpolates over the whole base.
Verdict infer(const RuleBase& base, const Eigen::VectorXd& x);

// Per-sample outputs for consequent construction when no ground truth
// exists: each sample takes its argmax cluster's signature label.
std::vector<int> pseudo_outputs_from_scores(const FcmModel& model,
                                            const Eigen::MatrixXd& rows,
                                            const FeatureSchema& schema,
                                            std::vector<std::string>* evidence = nullptr);

// Per-sample outputs from ground truth window labels.
std::vector<int> outputs_from_labels(const std::vector<FeatureVector>& vectors,
                                     const std::map<WindowId, TrafficLabel>& labels);

}  // namespace fw
