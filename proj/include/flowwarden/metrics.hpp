#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "flowwarden/flow.hpp"

namespace fw {

struct ClassMetrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double recall = 0.0;  // sensitivity, TP/(TP+FN)
    double fpr = 0.0;     // FP/(FP+TN)
    double fnr = 0.0;     // FN/(FN+TP)
    double f1 = 0.0;      // 2PR/(P+R)
};

enum class MetricsMode { Binary, Multi };

struct MetricsTable {
    MetricsMode mode = MetricsMode::Binary;
    // Truth x predicted counts over all class codes (binary mode collapses
    // to codes 0/1 = benign/malicious).
    Eigen::MatrixXi confusion;
    ClassMetrics binary;                         // malicious as positive class
    std::map<TrafficLabel, ClassMetrics> per_class;  // one-vs-rest, multi mode
};

// Definitional confusion metrics. Binary collapses labels to
// benign/malicious; multi computes one-vs-rest metrics for every class
// present in truth or predictions. Throws on length mismatch or empty input.
MetricsTable compute_metrics(const std::vector<TrafficLabel>& predicted,
                             const std::vector<TrafficLabel>& truth, MetricsMode mode);

// Flat key=value lines plus a tab-separated confusion table.
std::string format_metrics(const MetricsTable& table);

}  // namespace fw
