#include "flowwarden/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fw {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_row(const Eigen::MatrixXd& points, Eigen::Index row) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
        std::uint64_t bits;
        const double v = points(row, k);
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 0x100000001b3ULL;
    }
    return h;
}

void validate_config(const FcmConfig& cfg) {
    if (cfg.cluster_count < 2) throw std::invalid_argument("cluster count must be >= 2");
    if (!(cfg.fuzziness > 1.0)) throw std::invalid_argument("fuzziness must be > 1");
    if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
}

double membership_exponent(const FcmConfig& cfg) {
    return cfg.alt_exponent ? 2.0 * cfg.fuzziness - 1.0 : 2.0 / (cfg.fuzziness - 1.0);
}

Eigen::VectorXd row_from_distances(const Eigen::VectorXd& dists, double exponent) {
    const Eigen::Index c = dists.size();
    Eigen::VectorXd mu(c);

    int zero_count = 0;
    for (Eigen::Index i = 0; i < c; ++i) {
        if (dists[i] == 0.0) ++zero_count;
    }
    if (zero_count > 0) {
        for (Eigen::Index i = 0; i < c; ++i) {
            mu[i] = dists[i] == 0.0 ? 1.0 / zero_count : 0.0;
        }
        return mu;
    }

    // mu_i = d_i^{-e} / sum_d d_d^{-e}, algebraically equal to the inverse
    // ratio-sum form but stable for small distances.
    double denom = 0.0;
    for (Eigen::Index i = 0; i < c; ++i) {
        mu[i] = std::pow(dists[i], -exponent);
        denom += mu[i];
    }
    mu /= denom;
    return mu;
}

}  // namespace

std::vector<int> canonical_order(const Eigen::MatrixXd& points) {
    std::vector<int> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        for (Eigen::Index k = 0; k < points.cols(); ++k) {
            if (points(a, k) != points(b, k)) return points(a, k) < points(b, k);
        }
        return false;
    });
    return order;
}

Eigen::MatrixXd initial_memberships(const Eigen::MatrixXd& points, int cluster_count,
                                    std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd u(n, cluster_count);
    for (Eigen::Index j = 0; j < n; ++j) {
        // The draw is keyed to the point's value, not its position, so a
        // permuted input permutes initial rows identically.
        std::mt19937_64 rng(mix64(seed ^ hash_row(points, j)));
        double sum = 0.0;
        for (int i = 0; i < cluster_count; ++i) {
            const double v =
                (static_cast<double>(rng() >> 11) + 1.0) * (1.0 / 9007199254740993.0);
            u(j, i) = v;
            sum += v;
        }
        u.row(j) /= sum;
    }
    return u;
}

Eigen::VectorXd membership_row(const Eigen::MatrixXd& centers, const Eigen::VectorXd& x,
                               double fuzziness, bool alt_exponent) {
    if (centers.cols() != x.size()) {
        throw std::invalid_argument("point dimension does not match centers");
    }
    FcmConfig cfg;
    cfg.fuzziness = fuzziness;
    cfg.alt_exponent = alt_exponent;
    Eigen::VectorXd dists(centers.rows());
    for (Eigen::Index i = 0; i < centers.rows(); ++i) {
        dists[i] = (centers.row(i).transpose() - x).norm();
    }
    return row_from_distances(dists, membership_exponent(cfg));
}

FcmModel fcm_fit(const Eigen::MatrixXd& points, const FcmConfig& config) {
    validate_config(config);
    const Eigen::Index n = points.rows();
    const Eigen::Index h = points.cols();
    const int c = config.cluster_count;
    if (n < c) throw std::invalid_argument("need at least as many points as clusters");

    const std::vector<int> order = canonical_order(points);
    const double exponent = membership_exponent(config);

    Eigen::MatrixXd u = initial_memberships(points, c, config.seed);
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(c, h);

    FcmModel model;
    model.config = config;

    for (int iter = 0; iter < config.max_iters; ++iter) {
        // Center update; sums run in canonical point order so the result is
        // bit-identical under input permutation.
        for (int i = 0; i < c; ++i) {
            Eigen::VectorXd num = Eigen::VectorXd::Zero(h);
            double den = 0.0;
            for (int j : order) {
                const double w = std::pow(u(j, i), config.fuzziness);
                num += w * points.row(j).transpose();
                den += w;
            }
            if (den > 0.0) {
                centers.row(i) = (num / den).transpose();
            }
            // den == 0: cluster has no mass, center stays put
        }

        // Membership update from the fresh centers.
        double delta = 0.0;
        Eigen::MatrixXd u_next(n, c);
        Eigen::VectorXd dists(c);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (int i = 0; i < c; ++i) {
                dists[i] = (centers.row(i) - points.row(j)).norm();
            }
            u_next.row(j) = row_from_distances(dists, exponent).transpose();
            delta = std::max(delta, (u_next.row(j) - u.row(j)).cwiseAbs().maxCoeff());
        }
        u = std::move(u_next);

        double objective = 0.0;
        for (int j : order) {
            for (int i = 0; i < c; ++i) {
                const double d2 = (centers.row(i) - points.row(j)).squaredNorm();
                objective += std::pow(u(j, i), config.fuzziness) * d2;
            }
        }
        model.objective_trace.push_back(objective);
        model.iterations = iter + 1;

        if (delta < config.epsilon) {
            model.converged = true;
            break;
        }
    }

    // Canonicalize cluster identity: centers sorted lexicographically,
    // membership columns permuted along.
    std::vector<int> cluster_order(c);
    std::iota(cluster_order.begin(), cluster_order.end(), 0);
    std::stable_sort(cluster_order.begin(), cluster_order.end(), [&](int a, int b) {
        for (Eigen::Index k = 0; k < h; ++k) {
            if (centers(a, k) != centers(b, k)) return centers(a, k) < centers(b, k);
        }
        return false;
    });
    model.centers.resize(c, h);
    model.memberships.resize(n, c);
    for (int i = 0; i < c; ++i) {
        model.centers.row(i) = centers.row(cluster_order[i]);
        model.memberships.col(i) = u.col(cluster_order[i]);
    }

    model.cluster_mass.resize(c);
    for (int i = 0; i < c; ++i) {
        double mass = 0.0;
        for (int j : order) mass += model.memberships(j, i);
        model.cluster_mass[i] = mass;
    }
    return model;
}

Eigen::VectorXd fcm_membership(const FcmModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.centers.cols()) {
        throw std::invalid_argument("point dimension does not match model");
    }
    return membership_row(model.centers, x, model.config.fuzziness, model.config.alt_exponent);
}

double fcm_objective(const FcmModel& model, const Eigen::MatrixXd& points) {
    if (points.rows() != model.memberships.rows() || points.cols() != model.centers.cols()) {
        throw std::invalid_argument("points do not match model shape");
    }
    const std::vector<int> order = canonical_order(points);
    double objective = 0.0;
    for (int j : order) {
        for (Eigen::Index i = 0; i < model.centers.rows(); ++i) {
            const double d2 = (model.centers.row(i) - points.row(j)).squaredNorm();
            objective += std::pow(model.memberships(j, i), model.config.fuzziness) * d2;
        }
    }
    return objective;
}

}  // namespace fw
