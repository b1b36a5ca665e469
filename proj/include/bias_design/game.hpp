#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bias_design/design.hpp"
#include "bias_design/matrix.hpp"

namespace bias_design::game {

using design::AlphaBetaFamily;
using numerics::Matrix;

// Both players' objectives over the family's parameter square, evaluated in
// closed form from the four support points: alice = trace(S1) and
// bob = trace(S2) for the scalar bases {1, x} and {z}. Parameter slices whose
// causal moment block is singular evaluate to +infinity.
class Objectives {
  public:
    Objectives(const AlphaBetaFamily& family, double psi);

    double alice(double alpha, double beta) const;
    double bob(double alpha, double beta) const;
    std::pair<double, double> both(double alpha, double beta) const;
    double psi() const noexcept { return psi_; }

  private:
    double xs_[4];
    double zs_[4];
    double psi_;
};

// Global minimizer of trace(S1)(., beta) over [0,1]: 401-point grid scan,
// near-ties resolved toward the smaller coordinate, then golden-section
// refinement to interval width 1e-10.
double best_response_alice(double beta, const AlphaBetaFamily& family);

// Global minimizer of trace(S2)(alpha, .); the argmin is the same for every
// psi != 0 since the objective scales by psi^2.
double best_response_bob(double alpha, const AlphaBetaFamily& family, double psi);

enum class PointClass { nash, stationary_only, boundary };

std::string to_string(PointClass c);

struct EquilibriumPoint {
    double alpha = 0.0;
    double beta = 0.0;
    PointClass classification = PointClass::stationary_only;
    double trace_s1 = 0.0;
    double trace_s2 = 0.0;
    // Central-difference own-objective gradients, step 1e-5.
    double grad_alice = 0.0;
    double grad_bob = 0.0;
};

struct StartDiagnostic {
    double start_alpha = 0.0;
    double start_beta = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    int sweeps = 0;
    double residual = 0.0;  // last sup-norm coordinate change
    bool converged = false;
    // Index into EquilibriumReport::points; -1 for a non-converged start.
    int point_index = -1;
};

struct EquilibriumReport {
    std::vector<EquilibriumPoint> points;
    std::vector<StartDiagnostic> diagnostics;
    bool complete = false;  // every start converged
};

// The 5x5 uniform grid over [0,1]^2 used when the caller supplies no starts.
std::vector<std::pair<double, double>> default_nash_starts();

// Locates stationary points by coordinate sweeps: each player in turn moves to
// the stationary point of their own objective nearest to their current
// coordinate (grid-seeded, refined by derivative-sign bisection), until the
// sup-norm change falls below 1e-9 or 1000 sweeps pass. Converged limits are
// deduplicated within 1e-6 and classified by second differences: `nash` when
// both players sit at strict local minima, `stationary_only` otherwise,
// `boundary` on the edge of the square. Non-convergence is recorded per start
// in the diagnostics rather than thrown, so partial results survive.
EquilibriumReport nash_solve(const AlphaBetaFamily& family, double psi,
                             const std::vector<std::pair<double, double>>& starts);

struct JointOptimum {
    double alpha = 0.0;
    double beta = 0.0;
    double value = 0.0;
};

// Global minimizer of trace(S1) + trace(S2) over [0,1]^2: 201x201 grid scan
// followed by coordinate descent, refined until the sweep change is below 1e-8.
JointOptimum joint_optimum(const AlphaBetaFamily& family, double psi);

struct MixedStrategy {
    std::vector<std::size_t> atoms;        // row indices with positive mass
    std::vector<double> probabilities;     // matching probabilities, sum 1
};

struct MinimaxSolution {
    MixedStrategy strategy;
    std::vector<double> row_probabilities;  // full vector over all rows
    double value = 0.0;
    double gap = 0.0;  // duality gap certified at termination
    long iterations = 0;
    bool polished = false;  // exact support solve finished the run
};

// Solves min over mixed row strategies of the worst column response by
// multiplicative weights on both players (step 1/sqrt(t), payoff normalized
// to [0,1] for the updates), stopping when the duality gap of the averaged
// strategies falls below 1e-6. Every 200 iterations an exact equalizing
// solve over the currently heavy rows and columns is attempted; when it
// certifies a gap below 1e-9 the exact strategy is returned instead.
MinimaxSolution randomization_minimax(const Matrix& payoff);

struct LiteralSolution {
    std::size_t row = 0;
    double value = 0.0;
};

// The expectation-of-row-max objective is linear in the mixture, so its
// minimum is a point mass: returns the row with the smallest worst-case
// payoff, ties to the smaller index.
LiteralSolution literal_minimax(const Matrix& payoff);

}  // namespace bias_design::game
