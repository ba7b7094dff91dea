#include "flowwarden/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace fw {

CorrelationReport pearson_matrix(const Eigen::MatrixXd& rows) {
    const Eigen::Index n = rows.rows();
    const Eigen::Index h = rows.cols();
    if (n < 2) throw std::invalid_argument("pearson_matrix needs at least 2 samples");

    CorrelationReport rep;
    rep.r = Eigen::MatrixXd::Zero(h, h);
    rep.constant.assign(static_cast<std::size_t>(h), false);

    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mean;
    Eigen::VectorXd sd(h);
    for (Eigen::Index k = 0; k < h; ++k) {
        sd[k] = std::sqrt(centered.col(k).squaredNorm() / static_cast<double>(n));
        if (sd[k] == 0.0) rep.constant[static_cast<std::size_t>(k)] = true;
    }

    for (Eigen::Index i = 0; i < h; ++i) {
        rep.r(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < h; ++j) {
            double r = 0.0;
            if (sd[i] > 0.0 && sd[j] > 0.0) {
                const double cov =
                    centered.col(i).dot(centered.col(j)) / static_cast<double>(n);
                r = cov / (sd[i] * sd[j]);
            }
            rep.r(i, j) = r;
            rep.r(j, i) = r;
        }
    }
    return rep;
}

std::vector<int> cfs_prune(CorrelationReport& report, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("cfs threshold must be in (0, 1]");
    }
    const Eigen::Index h = report.r.rows();
    std::vector<bool> dropped(static_cast<std::size_t>(h), false);
    for (Eigen::Index i = 0; i < h; ++i) {
        if (dropped[static_cast<std::size_t>(i)]) continue;  // a dropped feature dooms nobody
        for (Eigen::Index j = i + 1; j < h; ++j) {
            if (dropped[static_cast<std::size_t>(j)]) continue;
            if (std::abs(report.r(i, j)) >= threshold) {
                dropped[static_cast<std::size_t>(j)] = true;
                report.drops.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    std::vector<int> out;
    for (Eigen::Index k = 0; k < h; ++k) {
        if (dropped[static_cast<std::size_t>(k)]) out.push_back(static_cast<int>(k));
    }
    return out;
}

namespace {

constexpr double kItemGrid = 0.01;  // quantization cell for support counting

long long grid_cell(double v) { return std::llround(v / kItemGrid); }

}  // namespace

std::vector<int> deviation_prune(const Eigen::MatrixXd& rows,
                                 const std::vector<int>& class_codes, int min_support,
                                 double tolerance, DeviationReport* report) {
    if (static_cast<Eigen::Index>(class_codes.size()) != rows.rows()) {
        throw std::invalid_argument("class codes do not match sample count");
    }
    std::set<int> distinct(class_codes.begin(), class_codes.end());
    if (distinct.size() < 2) {
        throw std::invalid_argument("deviation method requires >=2 classes");
    }
    if (min_support < 1) min_support = 1;

    const Eigen::Index h = rows.cols();
    const std::vector<int> classes(distinct.begin(), distinct.end());

    DeviationReport local;
    DeviationReport& rep = report ? *report : local;
    rep.class_codes = classes;
    rep.ranges.assign(static_cast<std::size_t>(h),
                      std::vector<DeviationRange>(classes.size()));
    rep.removed.assign(static_cast<std::size_t>(h), false);

    std::vector<int> dropped;
    for (Eigen::Index k = 0; k < h; ++k) {
        bool all_defined = true;
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            std::map<long long, int> support;
            for (Eigen::Index j = 0; j < rows.rows(); ++j) {
                if (class_codes[static_cast<std::size_t>(j)] != classes[ci]) continue;
                ++support[grid_cell(rows(j, k))];
            }
            DeviationRange& range = rep.ranges[static_cast<std::size_t>(k)][ci];
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < rows.rows(); ++j) {
                if (class_codes[static_cast<std::size_t>(j)] != classes[ci]) continue;
                const double v = rows(j, k);
                if (support[grid_cell(v)] < min_support) continue;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                range.support += 1;
            }
            if (range.support > 0) {
                range.lo = lo;
                range.hi = hi;
                range.defined = true;
            } else {
                all_defined = false;
            }
        }
        if (!all_defined) continue;

        double lo_min = std::numeric_limits<double>::infinity();
        double lo_max = -std::numeric_limits<double>::infinity();
        double hi_min = std::numeric_limits<double>::infinity();
        double hi_max = -std::numeric_limits<double>::infinity();
        for (const auto& range : rep.ranges[static_cast<std::size_t>(k)]) {
            lo_min = std::min(lo_min, range.lo);
            lo_max = std::max(lo_max, range.lo);
            hi_min = std::min(hi_min, range.hi);
            hi_max = std::max(hi_max, range.hi);
        }
        if (lo_max - lo_min <= tolerance && hi_max - hi_min <= tolerance) {
            rep.removed[static_cast<std::size_t>(k)] = true;
            dropped.push_back(static_cast<int>(k));
        }
    }
    return dropped;
}

std::vector<int> score_prune(const FcmModel& model, const Eigen::MatrixXd& rows,
                             double tolerance, ScoreReport* report) {
    if (rows.rows() != model.memberships.rows()) {
        throw std::invalid_argument("rows do not match model memberships");
    }
    const Eigen::Index c = model.memberships.cols();
    const Eigen::Index h = rows.cols();

    ScoreReport local;
    ScoreReport& rep = report ? *report : local;
    rep.scores = Eigen::MatrixXd::Zero(c, h);
    rep.removed.assign(static_cast<std::size_t>(h), false);

    std::vector<bool> live(static_cast<std::size_t>(c), false);
    for (Eigen::Index i = 0; i < c; ++i) {
        const double mass = model.memberships.col(i).sum();
        if (mass <= 0.0) continue;
        live[static_cast<std::size_t>(i)] = true;
        rep.scores.row(i) = (model.memberships.col(i).transpose() * rows) / mass;
    }
    int live_count = 0;
    for (bool b : live) live_count += b;
    if (live_count < 2) return {};

    std::vector<int> dropped;
    for (Eigen::Index k = 0; k < h; ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < c; ++i) {
            if (!live[static_cast<std::size_t>(i)]) continue;
            lo = std::min(lo, rep.scores(i, k));
            hi = std::max(hi, rep.scores(i, k));
        }
        if (hi - lo <= tolerance) {
            rep.removed[static_cast<std::size_t>(k)] = true;
            dropped.push_back(static_cast<int>(k));
        }
    }
    return dropped;
}

}  // namespace fw
