#include "flowwarden/metrics.hpp"

#include <set>
#include <stdexcept>

#include "flowwarden/textio.hpp"

namespace fw {

namespace {

ClassMetrics from_counts(long tp, long fp, long tn, long fn) {
    ClassMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const long total = tp + fp + tn + fn;
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.fpr = (fp + tn) > 0 ? static_cast<double>(fp) / (fp + tn) : 0.0;
    m.fnr = (fn + tp) > 0 ? static_cast<double>(fn) / (fn + tp) : 0.0;
    const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.f1 = (precision + m.recall) > 0.0 ? 2.0 * precision * m.recall / (precision + m.recall)
                                        : 0.0;
    return m;
}

}  // namespace

MetricsTable compute_metrics(const std::vector<TrafficLabel>& predicted,
                             const std::vector<TrafficLabel>& truth, MetricsMode mode) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("predicted/truth length mismatch");
    }
    if (predicted.empty()) throw std::invalid_argument("no samples");

    MetricsTable table;
    table.mode = mode;

    if (mode == MetricsMode::Binary) {
        table.confusion = Eigen::MatrixXi::Zero(2, 2);
        long tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = is_malicious(truth[i]);
            const bool p = is_malicious(predicted[i]);
            table.confusion(t ? 1 : 0, p ? 1 : 0) += 1;
            if (t && p) ++tp;
            else if (!t && p) ++fp;
            else if (!t && !p) ++tn;
            else ++fn;
        }
        table.binary = from_counts(tp, fp, tn, fn);
        return table;
    }

    table.confusion = Eigen::MatrixXi::Zero(kLabelCount, kLabelCount);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        table.confusion(label_code(truth[i]), label_code(predicted[i])) += 1;
    }

    std::set<TrafficLabel> present;
    for (auto l : truth) present.insert(l);
    for (auto l : predicted) present.insert(l);
    const long n = static_cast<long>(truth.size());
    for (TrafficLabel cls : present) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == cls;
            const bool p = predicted[i] == cls;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        table.per_class[cls] = from_counts(tp, fp, n - tp - fp - fn, fn);
    }

    // Overall binary view as well: useful alongside the per-class table.
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = is_malicious(truth[i]);
        const bool p = is_malicious(predicted[i]);
        if (t && p) ++tp;
        else if (!t && p) ++fp;
        else if (!t && !p) ++tn;
        else ++fn;
    }
    table.binary = from_counts(tp, fp, tn, fn);
    return table;
}

std::string format_metrics(const MetricsTable& table) {
    std::string out;
    auto kv = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };

    kv("mode", table.mode == MetricsMode::Binary ? "binary" : "multi");
    kv("binary.accuracy", dec17(table.binary.accuracy));
    kv("binary.recall", dec17(table.binary.recall));
    kv("binary.fpr", dec17(table.binary.fpr));
    kv("binary.fnr", dec17(table.binary.fnr));
    kv("binary.f1", dec17(table.binary.f1));

    for (const auto& [cls, m] : table.per_class) {
        const std::string p = std::string("class.") + to_string(cls) + ".";
        kv(p + "accuracy", dec17(m.accuracy));
        kv(p + "recall", dec17(m.recall));
        kv(p + "fpr", dec17(m.fpr));
        kv(p + "fnr", dec17(m.fnr));
        kv(p + "f1", dec17(m.f1));
        kv(p + "support", std::to_string(m.tp + m.fn));
    }

    out += "#confusion truth\\predicted\n";
    for (Eigen::Index i = 0; i < table.confusion.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.confusion.cols(); ++j) {
            if (j) out += '\t';
            out += std::to_string(table.confusion(i, j));
        }
        out += '\n';
    }
    return out;
}

}  // namespace fw
