#include "flowwarden/fis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "flowwarden/model_select.hpp"

namespace fw {

double TriangularSet::membership(double x) const {
    if (x == b) return 1.0;
    if (x <= a || x >= c) return 0.0;
    if (x < b) return (x - a) / (b - a);
    return (c - x) / (c - b);
}

double defuzzify(const TriangularSet& set) { return (set.a + 2.0 * set.b + set.c) / 4.0; }

int RuleBase::active_rule_count() const {
    int n = 0;
    for (const auto& r : rules) n += !r.degenerate;
    return n;
}

std::vector<int> RuleBase::label_codes() const {
    std::set<int> codes;
    for (const auto& r : rules) {
        if (!r.degenerate) codes.insert(label_code(r.label));
    }
    return {codes.begin(), codes.end()};
}

namespace {

// One-sided membership-weighted mean of `values` at or below (above) the
// center; the denominator is positive because the center sample qualifies.
double one_sided_mean(const Eigen::VectorXd& mu, const std::vector<double>& values,
                      double center, bool below) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const bool in = below ? values[j] <= center : values[j] >= center;
        if (!in) continue;
        num += mu[static_cast<Eigen::Index>(j)] * values[j];
        den += mu[static_cast<Eigen::Index>(j)];
    }
    return den > 0.0 ? num / den : center;
}

}  // namespace

RuleBase build_rulebase(const FcmModel& model, const Eigen::MatrixXd& rows,
                        const std::vector<int>& outputs, const FeatureSchema& schema) {
    const Eigen::Index n = rows.rows();
    const Eigen::Index h = rows.cols();
    const Eigen::Index c = model.memberships.cols();
    if (model.memberships.rows() != n) {
        throw std::invalid_argument("membership matrix does not match samples");
    }
    if (static_cast<Eigen::Index>(outputs.size()) != n) {
        throw std::invalid_argument("outputs do not match samples");
    }
    if (schema.size() != h) {
        throw std::invalid_argument("schema does not match sample dimension");
    }

    RuleBase base;
    base.schema = schema;
    base.fcm = model;
    base.rules.resize(static_cast<std::size_t>(c));

    for (Eigen::Index i = 0; i < c; ++i) {
        FuzzyRule& rule = base.rules[static_cast<std::size_t>(i)];
        const Eigen::VectorXd mu = model.memberships.col(i);
        const double mass = mu.sum();
        if (mass <= 0.0) {
            rule.degenerate = true;
            rule.antecedents.assign(static_cast<std::size_t>(h), TriangularSet{});
            rule.defuzz_antecedents = Eigen::VectorXd::Zero(h);
            rule.evidence = "zero-mass cluster";
            continue;
        }

        Eigen::Index q = 0;
        mu.maxCoeff(&q);

        rule.antecedents.resize(static_cast<std::size_t>(h));
        rule.defuzz_antecedents.resize(h);
        std::vector<double> column(static_cast<std::size_t>(n));
        for (Eigen::Index k = 0; k < h; ++k) {
            for (Eigen::Index j = 0; j < n; ++j) column[static_cast<std::size_t>(j)] = rows(j, k);
            TriangularSet set;
            set.b = rows(q, k);
            set.a = one_sided_mean(mu, column, set.b, true);
            set.c = one_sided_mean(mu, column, set.b, false);
            rule.antecedents[static_cast<std::size_t>(k)] = set;
            rule.defuzz_antecedents[k] = defuzzify(set);
        }

        std::vector<double> out_vals(outputs.begin(), outputs.end());
        TriangularSet cons;
        cons.b = out_vals[static_cast<std::size_t>(q)];
        cons.a = one_sided_mean(mu, out_vals, cons.b, true);
        cons.c = one_sided_mean(mu, out_vals, cons.b, false);
        rule.consequent = cons;
        rule.label = label_map(defuzzify(cons));

        // Majority class by membership mass, kept as labeling evidence.
        std::map<int, double> mass_by_code;
        for (Eigen::Index j = 0; j < n; ++j) {
            mass_by_code[outputs[static_cast<std::size_t>(j)]] += mu[j];
        }
        int major = outputs[static_cast<std::size_t>(q)];
        double best = -1.0;
        for (const auto& [code, m] : mass_by_code) {
            if (m > best) {
                best = m;
                major = code;
            }
        }
        std::ostringstream ev;
        ev << "consequent defuzz=" << defuzzify(cons) << " majority_code=" << major
           << " majority_mass=" << best / mass;
        rule.evidence = ev.str();
    }
    return base;
}

TrafficLabel label_map(double o_star, const std::vector<int>& codes) {
    if (codes.empty()) throw std::invalid_argument("label_map needs candidate codes");
    int best = codes.front();
    double best_dist = std::numeric_limits<double>::infinity();
    for (int code : codes) {
        const double d = std::abs(o_star - code);
        // ties go to the higher code: low-FNR bias
        if (d < best_dist || (d == best_dist && code > best)) {
            best_dist = d;
            best = code;
        }
    }
    return label_from_code(best);
}

TrafficLabel label_map(double o_star) {
    std::vector<int> codes(kLabelCount);
    for (int i = 0; i < kLabelCount; ++i) codes[i] = i;
    return label_map(o_star, codes);
}

Verdict infer(const RuleBase& base, const Eigen::VectorXd& x) {
    const Eigen::Index h = x.size();
    if (base.schema.size() != h) {
        throw std::invalid_argument("input dimension does not match rule base schema");
    }
    if (base.active_rule_count() == 0) {
        throw std::runtime_error("rule base has no usable rules");
    }

    const std::size_t q = base.rules.size();
    std::vector<double> activation(q, 0.0);
    std::vector<int> activated;
    for (std::size_t i = 0; i < q; ++i) {
        const FuzzyRule& rule = base.rules[i];
        if (rule.degenerate) continue;
        double act = 1.0;
        for (Eigen::Index k = 0; k < h; ++k) {
            act = std::min(act, rule.antecedents[static_cast<std::size_t>(k)].membership(x[k]));
            if (act == 0.0) break;
        }
        activation[i] = act;
        if (act > 0.0) activated.push_back(static_cast<int>(i));
    }

    Verdict v;
    if (!activated.empty()) {
        double num = 0.0, den = 0.0;
        for (int i : activated) {
            num += activation[static_cast<std::size_t>(i)] *
                   defuzzify(base.rules[static_cast<std::size_t>(i)].consequent);
            den += activation[static_cast<std::size_t>(i)];
        }
        v.activation_output = num / den;
        v.has_activation = true;
    } else {
        v.interpolated = true;
        for (std::size_t i = 0; i < q; ++i) {
            if (!base.rules[i].degenerate) activated.push_back(static_cast<int>(i));
        }
    }

    // Inverse-square distance weights against each rule's defuzzified
    // antecedent vector; exact coincidence takes the whole weight.
    std::vector<double> dist(activated.size());
    int zero_count = 0;
    for (std::size_t s = 0; s < activated.size(); ++s) {
        dist[s] = (x - base.rules[static_cast<std::size_t>(activated[s])].defuzz_antecedents).norm();
        if (dist[s] == 0.0) ++zero_count;
    }
    std::vector<double> weight(activated.size(), 0.0);
    if (zero_count > 0) {
        for (std::size_t s = 0; s < activated.size(); ++s) {
            if (dist[s] == 0.0) weight[s] = 1.0 / zero_count;
        }
    } else {
        double den = 0.0;
        for (double d : dist) den += 1.0 / (d * d);
        for (std::size_t s = 0; s < activated.size(); ++s) {
            weight[s] = (1.0 / (dist[s] * dist[s])) / den;
        }
    }

    double o_star = 0.0;
    for (std::size_t s = 0; s < activated.size(); ++s) {
        o_star += weight[s] *
                  defuzzify(base.rules[static_cast<std::size_t>(activated[s])].consequent);
        v.activated_rules.emplace_back(activated[s], weight[s]);
        v.confidence = std::max(v.confidence, weight[s]);
    }
    v.o_star = o_star;
    v.label = label_map(o_star, base.label_codes());
    v.malicious = is_malicious(v.label);
    return v;
}

namespace {

// Documented per-attack signature thresholds over normalized cluster
// scores; checked in precedence order, first hit labels the cluster.
struct ScoreView {
    const Eigen::RowVectorXd& scores;
    const FeatureSchema& schema;

    double get(AttributeId attr, Stat stat) const {
        const auto& feats = schema.features();
        for (std::size_t k = 0; k < feats.size(); ++k) {
            if (feats[k].attr == attr && feats[k].stat == stat) {
                return scores[static_cast<Eigen::Index>(k)];
            }
        }
        return -1.0;  // pruned from schema: condition cannot trip
    }
};

TrafficLabel signature_label(const ScoreView& v, std::string* why) {
    auto mean = [&](AttributeId a) { return v.get(a, Stat::Mean); };
    auto conclude = [&](TrafficLabel l, const char* reason) {
        if (why) *why = reason;
        return l;
    };

    if (mean(AttributeId::SynErrors) > 0.5 && mean(AttributeId::ConnSameDst) > 0.5) {
        return conclude(TrafficLabel::SynFlood, "syn_errors+same_dst high");
    }
    if (mean(AttributeId::PktArp) > 0.5) {
        return conclude(TrafficLabel::Mitm, "arp-dominant traffic");
    }
    if (mean(AttributeId::ServiceLoginFail) > 0.5 ||
        (mean(AttributeId::ConnSameService) > 0.8 && mean(AttributeId::RejErrors) > 0.3)) {
        return conclude(TrafficLabel::Fuzzing, "failed service logins / hammered service");
    }
    if (mean(AttributeId::DataDst2Src) > 0.8) {
        return conclude(TrafficLabel::DataTheft, "dst2src volume near max");
    }
    if (mean(AttributeId::DataSrc2Dst) > 0.8) {
        return conclude(TrafficLabel::MalwareInjection, "src2dst volume near max");
    }
    if (mean(AttributeId::PktHttps) > 0.6 && mean(AttributeId::ConnSameService) > 0.8) {
        return conclude(TrafficLabel::SslReneg, "https hammering one service");
    }
    if (mean(AttributeId::DstIpUnique) > 0.8) {
        return conclude(TrafficLabel::AddressSweep, "unique dst ip fan-out");
    }
    if (mean(AttributeId::DstPortUnique) > 0.8 && mean(AttributeId::ConnSameDst) > 0.5) {
        return conclude(TrafficLabel::PortSweep, "port fan-out on one target");
    }
    if (mean(AttributeId::DstPortUnique) > 0.8) {
        return conclude(TrafficLabel::PortScan, "port fan-out");
    }
    if (mean(AttributeId::RejErrors) > 0.5 && mean(AttributeId::DstIpUnique) > 0.4) {
        return conclude(TrafficLabel::Botnet, "rejected probes across hosts");
    }
    return conclude(TrafficLabel::Benign, "no attack signature");
}

}  // namespace

std::vector<int> pseudo_outputs_from_scores(const FcmModel& model, const Eigen::MatrixXd& rows,
                                            const FeatureSchema& schema,
                                            std::vector<std::string>* evidence) {
    const Eigen::Index c = model.memberships.cols();
    if (rows.rows() != model.memberships.rows()) {
        throw std::invalid_argument("rows do not match model memberships");
    }

    std::vector<TrafficLabel> cluster_label(static_cast<std::size_t>(c), TrafficLabel::Benign);
    if (evidence) evidence->assign(static_cast<std::size_t>(c), "");
    for (Eigen::Index i = 0; i < c; ++i) {
        const double mass = model.memberships.col(i).sum();
        if (mass <= 0.0) {
            if (evidence) (*evidence)[static_cast<std::size_t>(i)] = "zero-mass cluster";
            continue;
        }
        const Eigen::RowVectorXd scores = (model.memberships.col(i).transpose() * rows) / mass;
        std::string why;
        cluster_label[static_cast<std::size_t>(i)] =
            signature_label(ScoreView{scores, schema}, &why);
        if (evidence) (*evidence)[static_cast<std::size_t>(i)] = why;
    }

    const std::vector<int> assign = hard_assignments(model.memberships);
    std::vector<int> outputs(static_cast<std::size_t>(rows.rows()));
    for (std::size_t j = 0; j < outputs.size(); ++j) {
        outputs[j] = label_code(cluster_label[static_cast<std::size_t>(assign[j])]);
    }
    return outputs;
}

std::vector<int> outputs_from_labels(const std::vector<FeatureVector>& vectors,
                                     const std::map<WindowId, TrafficLabel>& labels) {
    std::vector<int> outputs(vectors.size(), 0);
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        auto it = labels.find(vectors[j].id);
        if (it != labels.end()) outputs[j] = label_code(it->second);
    }
    return outputs;
}

}  // namespace fw
