#include "bias_design/balance.hpp"

#include <algorithm>
#include <cmath>

#include "bias_design/errors.hpp"

namespace bias_design::balance {

namespace {

std::vector<double> group_mean(const std::vector<std::vector<double>>& group) {
    std::vector<double> mean(group.front().size(), 0.0);
    for (const auto& unit : group)
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += unit[d];
    for (auto& m : mean) m /= static_cast<double>(group.size());
    return mean;
}

}  // namespace

TwoGroupData::TwoGroupData(std::vector<std::vector<double>> group1,
                           std::vector<std::vector<double>> group2, double psi)
    : group1_(std::move(group1)), group2_(std::move(group2)), psi_(psi) {
    if (group1_.empty() || group2_.empty()) {
        throw empty_support("both groups need at least one unit");
    }
    if (group1_.size() != group2_.size()) {
        throw Error(ErrorKind::input, "group_size_mismatch",
                    "equal group sizes are required");
    }
    const std::size_t dim = group1_.front().size();
    if (dim == 0) throw dimension_mismatch("covariates need at least one coordinate");
    for (const auto* group : {&group1_, &group2_}) {
        for (const auto& unit : *group) {
            if (unit.size() != dim) {
                throw dimension_mismatch("all units must share one covariate dimension");
            }
            for (double v : unit) {
                if (!std::isfinite(v)) throw non_finite("covariates must be finite");
            }
        }
    }
    if (!std::isfinite(psi_)) throw non_finite("psi must be finite");
}

double two_group_bias(const TwoGroupData& data) {
    const auto m1 = group_mean(data.group1());
    const auto m2 = group_mean(data.group2());
    double sq = 0.0;
    for (std::size_t d = 0; d < m1.size(); ++d) {
        const double diff = m1[d] - m2[d];
        sq += diff * diff;
    }
    return data.psi() * data.psi() * sq / 4.0;
}

numerics::Matrix two_group_moment(const TwoGroupData& data) {
    if (data.dimension() != 1) {
        throw dimension_mismatch("the explicit 3x3 moment needs a scalar covariate");
    }
    const double m1 = group_mean(data.group1())[0];
    const double m2 = group_mean(data.group2())[0];
    const double grand = 0.5 * (m1 + m2);
    double ss = 0.0;
    for (const auto* group : {&data.group1(), &data.group2()}) {
        for (const auto& unit : *group) {
            const double c = unit[0] - grand;
            ss += c * c;
        }
    }
    const double s = ss / static_cast<double>(2 * data.per_group());
    numerics::Matrix m(3, 3);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(1, 2) = m(2, 1) = (m1 - m2) / 2.0;
    m(2, 2) = s;
    return m;
}

design::PartitionedMoment two_group_partitioned(const TwoGroupData& data) {
    const numerics::Matrix m = two_group_moment(data);
    numerics::Matrix m11(2, 2), m12(2, 1), m22(1, 1);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) m11(i, j) = m(i, j);
        m12(i, 0) = m(i, 2);
    }
    m22(0, 0) = m(2, 2);
    return design::PartitionedMoment(m11, m12, m22);
}

std::vector<double> stratified_difference(const std::vector<TwoGroupData>& strata,
                                          const std::vector<double>& weights) {
    if (weights.size() != strata.size()) {
        throw weight_mismatch("one weight per stratum is required");
    }
    if (strata.empty()) throw weight_mismatch("at least one stratum is required");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw weight_mismatch("stratum weights must be nonnegative and finite");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw weight_mismatch("stratum weights must sum to 1");
    const std::size_t dim = strata.front().dimension();
    for (const auto& stratum : strata) {
        if (stratum.dimension() != dim) {
            throw dimension_mismatch("strata must share one covariate dimension");
        }
    }
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < strata.size(); ++k) {
        const auto m1 = group_mean(strata[k].group1());
        const auto m2 = group_mean(strata[k].group2());
        for (std::size_t d = 0; d < dim; ++d) out[d] += weights[k] * (m1[d] - m2[d]);
    }
    return out;
}

Pairing mahalanobis_pairing(const std::vector<std::vector<double>>& treated,
                            const std::vector<std::vector<double>>& controls,
                            const numerics::Matrix& covariance) {
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
        throw dimension_mismatch("the covariance must be square and nonempty");
    }
    if (!numerics::is_symmetric(covariance, 1e-12)) {
        throw not_symmetric("the covariance must be symmetric");
    }
    const double scale = std::max(1.0, numerics::max_abs(covariance));
    if (numerics::min_eigenvalue(covariance) <= 1e-12 * scale) {
        throw singular_matrix("the covariance is not positive definite");
    }
    const std::size_t dim = covariance.rows();
    for (const auto* list : {&treated, &controls}) {
        for (const auto& unit : *list) {
            if (unit.size() != dim) {
                throw dimension_mismatch("unit dimension must match the covariance");
            }
            for (double v : unit) {
                if (!std::isfinite(v)) throw non_finite("covariates must be finite");
            }
        }
    }
    const numerics::Matrix inv = numerics::invert(covariance);
    auto sq_dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                d2 += (a[i] - b[i]) * inv(i, j) * (a[j] - b[j]);
            }
        }
        return std::max(0.0, d2);
    };

    Pairing out;
    std::vector<bool> used_t(treated.size(), false), used_c(controls.size(), false);
    const std::size_t rounds = std::min(treated.size(), controls.size());
    for (std::size_t round = 0; round < rounds; ++round) {
        double best = 0.0;
        std::size_t bi = 0, bj = 0;
        bool any = false;
        for (std::size_t i = 0; i < treated.size(); ++i) {
            if (used_t[i]) continue;
            for (std::size_t j = 0; j < controls.size(); ++j) {
                if (used_c[j]) continue;
                const double d2 = sq_dist(treated[i], controls[j]);
                // Near-ties (relative 1e-12) keep the first pair in index
                // order, which the scan visits lexicographically.
                if (!any || d2 < best - 1e-12 * std::max(1.0, best)) {
                    best = d2;
                    bi = i;
                    bj = j;
                    any = true;
                }
            }
        }
        used_t[bi] = true;
        used_c[bj] = true;
        out.pairs.emplace_back(bi, bj);
        out.total_distance += std::sqrt(best);
    }
    return out;
}

}  // namespace bias_design::balance
