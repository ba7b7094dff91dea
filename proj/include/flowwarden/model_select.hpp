#pragma once

#include <Eigen/Dense>
#include <vector>

#include "flowwarden/fcm.hpp"

namespace fw {

// Hard assignment: argmax membership per row (first max wins on ties).
std::vector<int> hard_assignments(const Eigen::MatrixXd& memberships);

// Within-cluster sum of coordinate distances: points hard-assigned to their
// argmax cluster, summed |center_k - point_k| over coordinates.
double wcsd(const FcmModel& model, const Eigen::MatrixXd& points);

struct SilhouetteResult {
    Eigen::VectorXd per_point;  // s(x) in [-1, 1]
    double mean = 0.0;
};

// s(x) = (b - a) / max(a, b) with a(x) the mean distance to own-cluster
// points and b(x) the mean distance to the points of the closest
// neighboring cluster (nearest by centroid). Singleton points score 0.
// Throws unless at least two clusters are non-empty.
SilhouetteResult silhouette(const std::vector<int>& assignments,
                            const Eigen::MatrixXd& points);

struct GapResult {
    std::vector<int> candidates;
    std::vector<double> gap;
    std::vector<double> se;
    int chosen = 0;
};

// Tibshirani-style gap statistic with uniform bounding-box references and
// the 1-standard-error choice rule: smallest i with
// gap(i) >= gap(i+1) - se(i+1), else the largest candidate.
GapResult gap_statistic(const Eigen::MatrixXd& points, const std::vector<int>& candidates,
                        int b_refs, std::uint64_t seed, const FcmConfig& base_config);

// Calinski-Harabasz (higher better) and Davies-Bouldin (lower better) on a
// hard clustering; both use hard centroids.
double calinski_harabasz(const std::vector<int>& assignments, const Eigen::MatrixXd& points);
double davies_bouldin(const std::vector<int>& assignments, const Eigen::MatrixXd& points);

struct SelectionScores {
    int candidate = 0;
    double wcsd = 0.0;
    double mean_silhouette = 0.0;
    double gap = 0.0;
    double gap_se = 0.0;
    double calinski_harabasz = 0.0;
    double davies_bouldin = 0.0;
    int votes = 0;
};

struct VoteOutcome {
    int chosen = 0;
    int elbow_pick = 0;
    int silhouette_pick = 0;
    int gap_pick = 0;
    int ch_pick = 0;
    int db_pick = 0;
    std::vector<SelectionScores> scores;  // votes filled in
};

// One vote per method (elbow knee by max second difference of WCSD, max
// silhouette, the gap 1-SE pick, max CH, min DB); most votes wins, ties
// break toward the smaller candidate.
VoteOutcome vote(std::vector<SelectionScores> scores, int gap_chosen);

// Scores every candidate (one fcm_fit each, seeded per candidate) and votes.
VoteOutcome select_cluster_count(const Eigen::MatrixXd& points,
                                 const std::vector<int>& candidates, int b_refs,
                                 const FcmConfig& base_config);

}  // namespace fw
