#pragma once

#include <vector>

#include "bias_design/design.hpp"
#include "bias_design/matrix.hpp"

namespace bias_design::criteria {

using design::MonomialBasis;
using design::PartitionedMoment;
using numerics::Matrix;

// MSE decomposition R = S1 + S2 of the reduced-model estimator: S1 is the
// variance part M11^{-1}; S2 is the rank-one bias part, the outer product of
// M11^{-1} M12 psi with itself.
struct BiasMse {
    Matrix s1;
    Matrix s2;
    double trace_s1 = 0.0;
    double trace_s2 = 0.0;
    std::vector<double> psi;
};

BiasMse bias_mse(const PartitionedMoment& moment, const std::vector<double>& psi);

// Trace criterion: trace(S1) + trace(S2).
double a_criterion(const BiasMse& mse);

// Determinant criterion via the factorization det(S1)(1 + psi^T M21 M11^-1
// M12 psi); the direct det(S1 + S2) is recomputed and must agree within
// relative 1e-8 or the call fails.
double d_criterion(const PartitionedMoment& moment, const std::vector<double>& psi);

// Largest eigenvalue of M21 M11^-2 M12: the worst trace(S2) over unit psi.
double q1_criterion(const PartitionedMoment& moment);

// The n x n bias-transfer matrix of an equal-weight design over the listed
// x-points: entry (i,j) = f(x_i)^T M11^-2 f(x_j).
Matrix q2_matrix(const std::vector<std::vector<double>>& x_design, const MonomialBasis& f);

// Exact maximum of h^T Q2 h over the unit ball of the dictionary span
// (h = Phi c, ||c|| = 1): the largest eigenvalue of Phi^T Q2 Phi.
double q2_worst_bias(const std::vector<std::vector<double>>& x_design, const MonomialBasis& f,
                     const std::vector<std::vector<double>>& dictionary);

}  // namespace bias_design::criteria
