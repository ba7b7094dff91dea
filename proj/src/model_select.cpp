#include "flowwarden/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace fw {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    return x ^ (x >> 31);
}

// Hard centroids of an assignment; clusters may be empty (flagged by count).
struct Centroids {
    Eigen::MatrixXd mean;  // k x h
    std::vector<int> count;
    std::vector<int> nonempty;  // cluster ids with members
};

Centroids hard_centroids(const std::vector<int>& assignments, const Eigen::MatrixXd& points) {
    int k = 0;
    for (int a : assignments) k = std::max(k, a + 1);
    Centroids out;
    out.mean = Eigen::MatrixXd::Zero(k, points.cols());
    out.count.assign(k, 0);
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        out.mean.row(assignments[static_cast<std::size_t>(j)]) += points.row(j);
        ++out.count[assignments[static_cast<std::size_t>(j)]];
    }
    for (int i = 0; i < k; ++i) {
        if (out.count[i] > 0) {
            out.mean.row(i) /= out.count[i];
            out.nonempty.push_back(i);
        }
    }
    return out;
}

// Within-cluster sum of squared Euclidean distances to hard centroids; the
// dispersion used by the gap statistic.
double dispersion_w(const std::vector<int>& assignments, const Eigen::MatrixXd& points,
                    const Centroids& cent) {
    double w = 0.0;
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        w += (points.row(j) - cent.mean.row(assignments[static_cast<std::size_t>(j)]))
                 .squaredNorm();
    }
    return w;
}

std::vector<int> fit_assignments(const Eigen::MatrixXd& points, const FcmConfig& cfg) {
    return hard_assignments(fcm_fit(points, cfg).memberships);
}

}  // namespace

std::vector<int> hard_assignments(const Eigen::MatrixXd& memberships) {
    std::vector<int> out(static_cast<std::size_t>(memberships.rows()));
    for (Eigen::Index j = 0; j < memberships.rows(); ++j) {
        Eigen::Index best = 0;
        memberships.row(j).maxCoeff(&best);
        out[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
    return out;
}

double wcsd(const FcmModel& model, const Eigen::MatrixXd& points) {
    if (points.cols() != model.centers.cols()) {
        throw std::invalid_argument("points do not match model dimension");
    }
    const std::vector<int> assign = hard_assignments(model.memberships);
    double total = 0.0;
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        const int i = assign[static_cast<std::size_t>(j)];
        total += (points.row(j) - model.centers.row(i)).cwiseAbs().sum();
    }
    return total;
}

SilhouetteResult silhouette(const std::vector<int>& assignments,
                            const Eigen::MatrixXd& points) {
    if (static_cast<Eigen::Index>(assignments.size()) != points.rows()) {
        throw std::invalid_argument("assignment length does not match points");
    }
    const Centroids cent = hard_centroids(assignments, points);
    if (cent.nonempty.size() < 2) {
        throw std::invalid_argument("silhouette requires at least two non-empty clusters");
    }

    const Eigen::Index n = points.rows();
    SilhouetteResult res;
    res.per_point.resize(n);

    for (Eigen::Index j = 0; j < n; ++j) {
        const int own = assignments[static_cast<std::size_t>(j)];
        if (cent.count[own] == 1) {
            res.per_point[j] = 0.0;  // singleton convention
            continue;
        }

        // Closest neighboring cluster by centroid distance.
        int neighbor = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i : cent.nonempty) {
            if (i == own) continue;
            const double d = (points.row(j) - cent.mean.row(i)).norm();
            if (d < best) {
                best = d;
                neighbor = i;
            }
        }

        double a_sum = 0.0, b_sum = 0.0;
        int a_cnt = 0, b_cnt = 0;
        for (Eigen::Index p = 0; p < n; ++p) {
            const int cl = assignments[static_cast<std::size_t>(p)];
            if (cl == own) {
                if (p != j) {
                    a_sum += (points.row(j) - points.row(p)).norm();
                    ++a_cnt;
                }
            } else if (cl == neighbor) {
                b_sum += (points.row(j) - points.row(p)).norm();
                ++b_cnt;
            }
        }
        const double a = a_sum / a_cnt;
        const double b = b_sum / b_cnt;
        const double m = std::max(a, b);
        res.per_point[j] = m > 0.0 ? (b - a) / m : 0.0;
    }
    res.mean = res.per_point.mean();
    return res;
}

GapResult gap_statistic(const Eigen::MatrixXd& points, const std::vector<int>& candidates,
                        int b_refs, std::uint64_t seed, const FcmConfig& base_config) {
    if (b_refs < 10) throw std::invalid_argument("gap statistic needs b_refs >= 10");
    if (candidates.empty()) throw std::invalid_argument("no candidates");
    if (!std::is_sorted(candidates.begin(), candidates.end())) {
        throw std::invalid_argument("candidates must be sorted ascending");
    }

    const Eigen::Index n = points.rows();
    const Eigen::Index h = points.cols();
    const Eigen::VectorXd lo = points.colwise().minCoeff();
    const Eigen::VectorXd hi = points.colwise().maxCoeff();

    // Shared reference datasets: each candidate is scored against the same
    // uniform draws, as the method prescribes.
    std::vector<Eigen::MatrixXd> refs;
    refs.reserve(static_cast<std::size_t>(b_refs));
    for (int b = 0; b < b_refs; ++b) {
        std::mt19937_64 rng(mix(seed, 0x9d5c0000u + static_cast<std::uint64_t>(b)));
        Eigen::MatrixXd ref(n, h);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < h; ++k) {
                const double u =
                    (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
                ref(j, k) = lo[k] + u * (hi[k] - lo[k]);
            }
        }
        refs.push_back(std::move(ref));
    }

    GapResult res;
    res.candidates = candidates;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const int k = candidates[ci];
        FcmConfig cfg = base_config;
        cfg.cluster_count = k;
        cfg.seed = mix(seed, 0xda7aULL * 1024 + static_cast<std::uint64_t>(k));
        const std::vector<int> assign = fit_assignments(points, cfg);
        const double log_w = std::log(dispersion_w(assign, points, hard_centroids(assign, points)));

        double sum = 0.0, sum_sq = 0.0;
        for (int b = 0; b < b_refs; ++b) {
            FcmConfig rcfg = base_config;
            rcfg.cluster_count = k;
            rcfg.seed = mix(seed, (static_cast<std::uint64_t>(b) << 16) | static_cast<std::uint64_t>(k));
            const std::vector<int> rassign = fit_assignments(refs[static_cast<std::size_t>(b)], rcfg);
            const double lw =
                std::log(dispersion_w(rassign, refs[static_cast<std::size_t>(b)],
                                      hard_centroids(rassign, refs[static_cast<std::size_t>(b)])));
            sum += lw;
            sum_sq += lw * lw;
        }
        const double mean_ref = sum / b_refs;
        const double var = std::max(0.0, sum_sq / b_refs - mean_ref * mean_ref);
        res.gap.push_back(mean_ref - log_w);
        res.se.push_back(std::sqrt(var) * std::sqrt(1.0 + 1.0 / b_refs));
    }

    res.chosen = candidates.back();
    for (std::size_t ci = 0; ci + 1 < candidates.size(); ++ci) {
        if (res.gap[ci] >= res.gap[ci + 1] - res.se[ci + 1]) {
            res.chosen = candidates[ci];
            break;
        }
    }
    return res;
}

double calinski_harabasz(const std::vector<int>& assignments, const Eigen::MatrixXd& points) {
    const Centroids cent = hard_centroids(assignments, points);
    const int k = static_cast<int>(cent.nonempty.size());
    const Eigen::Index n = points.rows();
    if (k < 2 || n <= k) return 0.0;

    const Eigen::RowVectorXd overall = points.colwise().mean();
    double between = 0.0;
    for (int i : cent.nonempty) {
        between += cent.count[i] * (cent.mean.row(i) - overall).squaredNorm();
    }
    const double within = dispersion_w(assignments, points, cent);
    if (within == 0.0) return std::numeric_limits<double>::infinity();
    return (between / (k - 1)) / (within / (static_cast<double>(n) - k));
}

double davies_bouldin(const std::vector<int>& assignments, const Eigen::MatrixXd& points) {
    const Centroids cent = hard_centroids(assignments, points);
    const auto& live = cent.nonempty;
    if (live.size() < 2) return std::numeric_limits<double>::infinity();

    std::map<int, double> scatter;
    for (int i : live) scatter[i] = 0.0;
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        const int i = assignments[static_cast<std::size_t>(j)];
        scatter[i] += (points.row(j) - cent.mean.row(i)).norm();
    }
    for (int i : live) scatter[i] /= cent.count[i];

    double total = 0.0;
    for (int i : live) {
        double worst = 0.0;
        for (int j : live) {
            if (i == j) continue;
            const double sep = (cent.mean.row(i) - cent.mean.row(j)).norm();
            if (sep == 0.0) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, (scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    return total / static_cast<double>(live.size());
}

VoteOutcome vote(std::vector<SelectionScores> scores, int gap_chosen) {
    if (scores.size() < 2) throw std::invalid_argument("vote needs at least 2 scored candidates");
    std::sort(scores.begin(), scores.end(),
              [](const auto& a, const auto& b) { return a.candidate < b.candidate; });

    VoteOutcome out;
    const std::size_t n = scores.size();

    // Elbow knee: maximize the second difference of WCSD over interior
    // candidates; with fewer than 3 candidates fall back to the smallest.
    out.elbow_pick = scores.front().candidate;
    double best_curv = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double curv = scores[i - 1].wcsd - 2.0 * scores[i].wcsd + scores[i + 1].wcsd;
        if (curv > best_curv) {
            best_curv = curv;
            out.elbow_pick = scores[i].candidate;
        }
    }

    out.silhouette_pick = scores.front().candidate;
    double best_sil = -std::numeric_limits<double>::infinity();
    for (const auto& s : scores) {
        if (s.mean_silhouette > best_sil) {
            best_sil = s.mean_silhouette;
            out.silhouette_pick = s.candidate;
        }
    }

    out.gap_pick = gap_chosen;

    out.ch_pick = scores.front().candidate;
    double best_ch = -std::numeric_limits<double>::infinity();
    for (const auto& s : scores) {
        if (s.calinski_harabasz > best_ch) {
            best_ch = s.calinski_harabasz;
            out.ch_pick = s.candidate;
        }
    }

    out.db_pick = scores.front().candidate;
    double best_db = std::numeric_limits<double>::infinity();
    for (const auto& s : scores) {
        if (s.davies_bouldin < best_db) {
            best_db = s.davies_bouldin;
            out.db_pick = s.candidate;
        }
    }

    for (auto& s : scores) {
        s.votes = (s.candidate == out.elbow_pick) + (s.candidate == out.silhouette_pick) +
                  (s.candidate == out.gap_pick) + (s.candidate == out.ch_pick) +
                  (s.candidate == out.db_pick);
    }

    out.chosen = scores.front().candidate;
    int best_votes = -1;
    for (const auto& s : scores) {
        if (s.votes > best_votes) {  // ascending order: ties keep the smaller
            best_votes = s.votes;
            out.chosen = s.candidate;
        }
    }
    out.scores = std::move(scores);
    return out;
}

VoteOutcome select_cluster_count(const Eigen::MatrixXd& points,
                                 const std::vector<int>& candidates, int b_refs,
                                 const FcmConfig& base_config) {
    if (candidates.size() < 2) throw std::invalid_argument("need at least 2 candidates");
    std::vector<int> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());

    std::vector<SelectionScores> scores;
    for (int k : sorted) {
        FcmConfig cfg = base_config;
        cfg.cluster_count = k;
        cfg.seed = mix(base_config.seed, 0x5e1ec7ULL + static_cast<std::uint64_t>(k));
        const FcmModel model = fcm_fit(points, cfg);
        const std::vector<int> assign = hard_assignments(model.memberships);

        SelectionScores s;
        s.candidate = k;
        s.wcsd = wcsd(model, points);
        int live = 0;
        {
            std::vector<int> seen(static_cast<std::size_t>(k), 0);
            for (int a : assign) seen[static_cast<std::size_t>(a)] = 1;
            for (int v : seen) live += v;
        }
        s.mean_silhouette = live >= 2 ? silhouette(assign, points).mean : -1.0;
        s.calinski_harabasz = calinski_harabasz(assign, points);
        s.davies_bouldin = davies_bouldin(assign, points);
        scores.push_back(s);
    }

    const GapResult gap = gap_statistic(points, sorted, b_refs, base_config.seed, base_config);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i].gap = gap.gap[i];
        scores[i].gap_se = gap.se[i];
    }
    return vote(std::move(scores), gap.chosen);
}

}  // namespace fw
