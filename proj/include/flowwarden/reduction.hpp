#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flowwarden/fcm.hpp"

namespace fw {

struct CorrelationReport {
    Eigen::MatrixXd r;               // symmetric, |r| <= 1, diagonal 1
    std::vector<bool> constant;      // zero-variance features; r recorded as 0
    // (kept feature, dropped feature) pairs once cfs_prune has run
    std::vector<std::pair<int, int>> drops;
};

// Definitional two-pass Pearson correlation over feature columns.
// Throws with fewer than 2 samples.
CorrelationReport pearson_matrix(const Eigen::MatrixXd& rows);

// Drops the later feature of every pair with |r| >= threshold, skipping
// pairs whose earlier member is itself already dropped. Returns dropped
// feature indices ascending; pairs are recorded into the report.
std::vector<int> cfs_prune(CorrelationReport& report, double threshold);

struct DeviationRange {
    double lo = 0.0;
    double hi = 0.0;
    bool defined = false;  // class had no frequent values for this feature
    int support = 0;
};

struct DeviationReport {
    std::vector<int> class_codes;                       // distinct, ascending
    std::vector<std::vector<DeviationRange>> ranges;    // [feature][class]
    std::vector<bool> removed;
};

// Frequent-value deviation ranges per class (values quantized to a 0.01
// grid for support counting); a feature is dropped when every class has a
// defined range and the ranges agree per endpoint within tolerance.
// Throws with fewer than 2 distinct classes.
std::vector<int> deviation_prune(const Eigen::MatrixXd& rows,
                                 const std::vector<int>& class_codes, int min_support,
                                 double tolerance, DeviationReport* report = nullptr);

struct ScoreReport {
    Eigen::MatrixXd scores;  // cluster x feature, membership-weighted means
    std::vector<bool> removed;
};

// Membership-weighted per-cluster feature means; a feature whose scores
// coincide across all clusters within tolerance carries no information and
// is dropped. Zero-mass clusters are skipped.
std::vector<int> score_prune(const FcmModel& model, const Eigen::MatrixXd& rows,
                             double tolerance, ScoreReport* report = nullptr);

}  // namespace fw
