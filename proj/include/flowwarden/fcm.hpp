#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace fw {

struct FcmConfig {
    int cluster_count = 2;   // c >= 2
    double fuzziness = 2.0;  // m > 1; m = 1 degenerates to hard assignment
    int max_iters = 300;
    double epsilon = 1e-6;  // convergence tolerance on max |delta mu|
    std::uint64_t seed = 0;
    // Membership exponent is 2/(m-1); the literal (2m-1) variant is kept
    // behind this flag for comparison runs.
    bool alt_exponent = false;
};

// Soft clustering state: centers, the training-set membership matrix, and
// the per-iteration objective trace. Immutable after fit.
struct FcmModel {
    Eigen::MatrixXd centers;      // c x h
    Eigen::MatrixXd memberships;  // n x c, rows sum to 1
    std::vector<double> objective_trace;
    std::vector<double> cluster_mass;  // column sums of memberships
    FcmConfig config;
    int iterations = 0;
    bool converged = false;
};

// Membership row for one point against a set of centers. Rows sum to 1;
// coincidence with a center gives that cluster full membership (split
// equally over coincident centers).
Eigen::VectorXd membership_row(const Eigen::MatrixXd& centers, const Eigen::VectorXd& x,
                               double fuzziness, bool alt_exponent = false);

// Alternating membership/center updates from a seeded row-stochastic start
// until max |delta mu| < epsilon or max_iters. Deterministic for a fixed
// seed and independent of input row order (per-point seeding, canonical
// reduction order). Centers are canonicalized lexicographically on return.
FcmModel fcm_fit(const Eigen::MatrixXd& points, const FcmConfig& config);

Eigen::VectorXd fcm_membership(const FcmModel& model, const Eigen::VectorXd& x);

// J_m = sum_ij mu_ij^m ||V_i - X_j||^2 for the model's memberships.
double fcm_objective(const FcmModel& model, const Eigen::MatrixXd& points);

// Initial membership matrix: each row drawn from a generator seeded by
// (seed, row values), then normalized. Exposed for oracle tests.
Eigen::MatrixXd initial_memberships(const Eigen::MatrixXd& points, int cluster_count,
                                    std::uint64_t seed);

// Indices of points in canonical (lexicographic) order. Exposed for oracle
// tests that must reproduce the reduction order bit-exactly.
std::vector<int> canonical_order(const Eigen::MatrixXd& points);

}  // namespace fw
