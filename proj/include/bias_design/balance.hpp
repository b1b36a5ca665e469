#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "bias_design/design.hpp"
#include "bias_design/matrix.hpp"

namespace bias_design::balance {

// Covariate lists for a two-arm allocation with equal group sizes, plus the
// bias weight psi. All units share one covariate dimension.
class TwoGroupData {
  public:
    TwoGroupData(std::vector<std::vector<double>> group1,
                 std::vector<std::vector<double>> group2, double psi);

    const std::vector<std::vector<double>>& group1() const noexcept { return group1_; }
    const std::vector<std::vector<double>>& group2() const noexcept { return group2_; }
    double psi() const noexcept { return psi_; }
    std::size_t dimension() const noexcept { return group1_.front().size(); }
    std::size_t per_group() const noexcept { return group1_.size(); }

  private:
    std::vector<std::vector<double>> group1_;
    std::vector<std::vector<double>> group2_;
    double psi_;
};

// The group-mean bias term psi^2 * ||mean(group1) - mean(group2)||^2 / 4;
// zero exactly when the group means agree.
double two_group_bias(const TwoGroupData& data);

// The 3x3 moment matrix of the two-arm design with a scalar covariate,
// columns (1, arm sign, centered z): unit (0,0) and (1,1) entries,
// (1,2) = (2,1) = (mean1 - mean2)/2, (2,2) = grand-mean-centered second
// moment, zeros elsewhere. Vector covariates are rejected.
numerics::Matrix two_group_moment(const TwoGroupData& data);

// The same matrix split into blocks with p = 2 (intercept, arm) and q = 1
// (covariate), ready for the bias criteria.
design::PartitionedMoment two_group_partitioned(const TwoGroupData& data);

// Weighted sum of per-stratum mean differences, sum_k w_k (mean1_k - mean2_k).
std::vector<double> stratified_difference(const std::vector<TwoGroupData>& strata,
                                          const std::vector<double>& weights);

struct Pairing {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (treated, control)
    double total_distance = 0.0;  // summed Mahalanobis distances
};

// Greedy matching: repeatedly joins the globally closest unmatched
// (treated, control) pair under the Mahalanobis distance for the given
// covariance; near-ties (relative 1e-12) resolve to the smaller index pair.
// Produces min(|treated|, |controls|) pairs.
Pairing mahalanobis_pairing(const std::vector<std::vector<double>>& treated,
                            const std::vector<std::vector<double>>& controls,
                            const numerics::Matrix& covariance);

}  // namespace bias_design::balance
