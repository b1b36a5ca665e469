#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bias_design/criteria.hpp"
#include "bias_design/design.hpp"
#include "bias_design/errors.hpp"
#include "bias_design/game.hpp"

using namespace bias_design;
using namespace bias_design::game;

namespace {

// The three stationary points of the default family at psi = 1, refined to
// 1e-11 by an independent scan-and-bisect pass over the closed-form
// objectives (the same values fall out of a symbolic polynomial solve).
constexpr double kNashAlpha = 0.593064383562;
constexpr double kNashBeta = 0.082749242284;
constexpr double kMirrorAlpha = 0.406935616811;
constexpr double kMirrorBeta = 0.917250757669;

const AlphaBetaFamily kFamily = AlphaBetaFamily::standard(0.5, 0.5);

double alice_obj(double a, double b) {
    return Objectives(kFamily, 1.0).alice(a, b);
}

double bob_obj(double a, double b, double psi) {
    return Objectives(kFamily, psi).bob(a, b);
}

const EquilibriumPoint* find_point(const EquilibriumReport& rep, double a, double b) {
    for (const auto& p : rep.points) {
        if (std::abs(p.alpha - a) < 1e-4 && std::abs(p.beta - b) < 1e-4) return &p;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("objectives agree with the partitioned-moment path") {
    const Objectives obj(kFamily, 1.0);
    const design::MonomialBasis f{{0}, {1}};
    const design::MonomialBasis g{{1}};
    for (double a : {0.1, 0.35, 0.5, 0.8}) {
        for (double b : {0.2, 0.5, 0.93}) {
            const auto fam = AlphaBetaFamily::standard(a, b);
            const auto mom = design::moment_matrix(design::alpha_beta_measure(fam), f, g);
            const auto mse = criteria::bias_mse(mom, {1.0});
            const auto [t1, t2] = obj.both(a, b);
            CHECK(t1 == doctest::Approx(mse.trace_s1).epsilon(1e-10));
            CHECK(t2 == doctest::Approx(mse.trace_s2).epsilon(1e-10));
        }
    }
}

TEST_CASE("objectives hit infinity exactly on singular slices") {
    const Objectives obj(kFamily, 1.0);
    // alpha = 1, beta = 1 concentrates all mass on one point: x-variance 0.
    CHECK(std::isinf(obj.alice(1.0, 1.0)));
    CHECK(std::isinf(obj.bob(1.0, 1.0)));
    CHECK(std::isfinite(obj.alice(0.5, 0.5)));
}

TEST_CASE("objectives reject non-scalar support points") {
    AlphaBetaFamily fam = kFamily;
    fam.points[2] = design::Point{{1.0, 2.0}, {1.0}};
    CHECK_THROWS_AS(Objectives(fam, 1.0), Error);
}

TEST_CASE("alice best response: balanced opponent is a fixed point") {
    const double a = best_response_alice(0.5, kFamily);
    CHECK(a == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("alice best response at beta = 1 solves a^2 + 2a - 1 = 0") {
    // On the beta = 1 segment trace(S1) = (1 + a) / (a (1 - a)); the interior
    // minimum is at sqrt(2) - 1.
    const double a = best_response_alice(1.0, kFamily);
    CHECK(a == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-7));
}

TEST_CASE("alice best response against the equilibrium beta returns the equilibrium alpha") {
    const double a = best_response_alice(kNashBeta, kFamily);
    CHECK(a == doctest::Approx(kNashAlpha).epsilon(1e-7));
}

TEST_CASE("bob best response at alpha = 1/2 breaks the mirror tie downward") {
    // The slice is symmetric in beta -> 1 - beta, with twin global minima;
    // the tie goes to the smaller coordinate: 1/2 - 1/sqrt(6).
    const double b = best_response_bob(0.5, kFamily, 1.0);
    CHECK(b == doctest::Approx(0.5 - 1.0 / std::sqrt(6.0)).epsilon(1e-7));
    CHECK(b < 0.5);
}

TEST_CASE("bob best response escapes the near basin at the equilibrium alpha") {
    // The equilibrium beta 0.0827 is only a local minimum of bob's slice at
    // alpha 0.5931; the global minimum sits in the far basin near 0.91 with a
    // strictly smaller objective. The solver must return the global one.
    const double b = best_response_bob(kNashAlpha, kFamily, 1.0);
    CHECK(b == doctest::Approx(0.9099568094).epsilon(1e-6));
    const double far = bob_obj(kNashAlpha, b, 1.0);
    const double near = bob_obj(kNashAlpha, kNashBeta, 1.0);
    CHECK(far == doctest::Approx(0.5761001).epsilon(1e-4));
    CHECK(near == doctest::Approx(0.6905235).epsilon(1e-4));
    CHECK(far < near);
}

TEST_CASE("bob best response argmin does not depend on psi") {
    for (double alpha : {0.2, 0.5, kNashAlpha}) {
        const double b1 = best_response_bob(alpha, kFamily, 1.0);
        const double b7 = best_response_bob(alpha, kFamily, 7.0);
        CHECK(b1 == b7);  // identical search path, bitwise equal
    }
}

TEST_CASE("best response input validation") {
    CHECK_THROWS_AS(best_response_alice(-0.1, kFamily), Error);
    CHECK_THROWS_AS(best_response_alice(1.5, kFamily), Error);
    CHECK_THROWS_AS(best_response_bob(0.5, kFamily, 0.0), Error);
    CHECK_THROWS_AS(best_response_bob(2.0, kFamily, 1.0), Error);
}

TEST_CASE("nash_solve from the default grid finds the known three points") {
    const auto rep = nash_solve(kFamily, 1.0, default_nash_starts());
    CHECK(rep.complete);
    CHECK(rep.points.size() == 3);
    CHECK(rep.diagnostics.size() == 25);

    const auto* nash1 = find_point(rep, kNashAlpha, kNashBeta);
    REQUIRE(nash1 != nullptr);
    CHECK(nash1->classification == PointClass::nash);
    CHECK(nash1->alpha == doctest::Approx(kNashAlpha).epsilon(1e-9));
    CHECK(nash1->beta == doctest::Approx(kNashBeta).epsilon(1e-9));
    CHECK(nash1->trace_s1 == doctest::Approx(4.4834633996).epsilon(1e-8));
    CHECK(nash1->trace_s2 == doctest::Approx(0.6905234822).epsilon(1e-8));
    CHECK(nash1->trace_s1 + nash1->trace_s2 == doctest::Approx(5.1739868819).epsilon(1e-8));
    CHECK(std::abs(nash1->grad_alice) < 1e-6);
    CHECK(std::abs(nash1->grad_bob) < 1e-6);

    const auto* mirror = find_point(rep, kMirrorAlpha, kMirrorBeta);
    REQUIRE(mirror != nullptr);
    CHECK(mirror->classification == PointClass::nash);
    // The mirror point shares the nash point's objective values.
    CHECK(mirror->trace_s1 == doctest::Approx(nash1->trace_s1).epsilon(1e-8));
    CHECK(mirror->trace_s2 == doctest::Approx(nash1->trace_s2).epsilon(1e-8));

    const auto* center = find_point(rep, 0.5, 0.5);
    REQUIRE(center != nullptr);
    // Bob's slice has a local maximum at 1/2, so the center is stationary
    // without being an equilibrium.
    CHECK(center->classification == PointClass::stationary_only);
    CHECK(center->trace_s1 == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(center->trace_s2 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("nash_solve diagnostics reference the point table") {
    const auto rep = nash_solve(kFamily, 1.0, default_nash_starts());
    for (const auto& d : rep.diagnostics) {
        REQUIRE(d.converged);
        REQUIRE(d.point_index >= 0);
        REQUIRE(static_cast<std::size_t>(d.point_index) < rep.points.size());
        const auto& p = rep.points[static_cast<std::size_t>(d.point_index)];
        CHECK(std::abs(p.alpha - d.alpha) <= 1e-6);
        CHECK(std::abs(p.beta - d.beta) <= 1e-6);
        CHECK(d.residual < 1e-9);
        CHECK(d.sweeps <= 10);
    }
}

TEST_CASE("nash_solve from a single interior start converges quickly") {
    const auto rep = nash_solve(kFamily, 1.0, {{0.6, 0.1}});
    CHECK(rep.complete);
    REQUIRE(rep.points.size() == 1);
    CHECK(rep.diagnostics.size() == 1);
    CHECK(rep.diagnostics[0].sweeps <= 50);
    CHECK(rep.points[0].alpha == doctest::Approx(kNashAlpha).epsilon(1e-9));
    CHECK(rep.points[0].beta == doctest::Approx(kNashBeta).epsilon(1e-9));
}

TEST_CASE("nash_solve point locations are invariant in psi") {
    const auto base = nash_solve(kFamily, 1.0, default_nash_starts());
    for (double psi : {0.1, 10.0}) {
        const auto rep = nash_solve(kFamily, psi, default_nash_starts());
        REQUIRE(rep.points.size() == base.points.size());
        for (std::size_t i = 0; i < rep.points.size(); ++i) {
            CHECK(std::abs(rep.points[i].alpha - base.points[i].alpha) < 1e-8);
            CHECK(std::abs(rep.points[i].beta - base.points[i].beta) < 1e-8);
            CHECK(rep.points[i].classification == base.points[i].classification);
            // trace_s2 scales by psi^2; trace_s1 is untouched. Converged
            // coordinates agree to ~1e-9 only, so compare at 1e-8.
            CHECK(rep.points[i].trace_s1 ==
                  doctest::Approx(base.points[i].trace_s1).epsilon(1e-8));
            CHECK(rep.points[i].trace_s2 ==
                  doctest::Approx(base.points[i].trace_s2 * psi * psi).epsilon(1e-8));
        }
    }
}

TEST_CASE("nash_solve input validation") {
    CHECK_THROWS_AS(nash_solve(kFamily, 0.0, default_nash_starts()), Error);
    CHECK_THROWS_AS(nash_solve(kFamily, 1.0, {}), Error);
    CHECK_THROWS_AS(nash_solve(kFamily, 1.0, {{-0.2, 0.5}}), Error);
    CHECK_THROWS_AS(nash_solve(kFamily, 1.0, {{0.5, 1.2}}), Error);
}

TEST_CASE("joint optimum at psi = 1 is the balanced design with value 4") {
    const auto opt = joint_optimum(kFamily, 1.0);
    CHECK(opt.alpha == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(opt.beta == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(opt.value == doctest::Approx(4.0).epsilon(1e-3));
    // The equilibrium is strictly worse for the sum: the game has a price.
    const double at_nash = alice_obj(kNashAlpha, kNashBeta) + bob_obj(kNashAlpha, kNashBeta, 1.0);
    CHECK(at_nash == doctest::Approx(5.1739868819).epsilon(1e-6));
    CHECK(opt.value < at_nash);
}

TEST_CASE("joint optimum at psi = 0 reduces to the variance-only problem") {
    const auto opt = joint_optimum(kFamily, 0.0);
    CHECK(opt.alpha == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(opt.beta == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(opt.value == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("joint optimum never exceeds the summed objectives at any solver point") {
    const auto opt = joint_optimum(kFamily, 1.0);
    const auto rep = nash_solve(kFamily, 1.0, default_nash_starts());
    for (const auto& p : rep.points) {
        CHECK(opt.value <= p.trace_s1 + p.trace_s2 + 1e-9);
    }
}

TEST_CASE("matching pennies solves exactly on the first iterate") {
    const numerics::Matrix pennies(2, 2, {1.0, -1.0, -1.0, 1.0});
    const auto sol = randomization_minimax(pennies);
    CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.iterations == 1);
    CHECK_FALSE(sol.polished);
    REQUIRE(sol.row_probabilities.size() == 2);
    CHECK(sol.row_probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.row_probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(sol.strategy.atoms.size() == 2);
    CHECK(sol.strategy.atoms[0] == 0);
    CHECK(sol.strategy.atoms[1] == 1);
}

TEST_CASE("single-column payoff degenerates to the smallest row") {
    const numerics::Matrix v(3, 1, {4.0, 1.0, 2.5});
    const auto sol = randomization_minimax(v);
    CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-6));
    double mass_on_min = sol.row_probabilities[1];
    CHECK(mass_on_min > 0.99);
}

TEST_CASE("minimax demo payoff reproduces the frozen exact solution") {
    // Worst-case bias payoff for four +/-1 assignment rows against a
    // three-function dictionary, computed once from the quadratic form and
    // cross-checked against an LP solve; frozen here to full precision.
    const numerics::Matrix v(4, 3, {
        11.499656011117402, 8.559617326397861, 11.81808787076493,
        8.559617326397861, 11.499656011117402, 11.81808787076493,
        5.461726196488958, 5.874363204870646, 3.269367613332388,
        5.874363204870646, 5.461726196488958, 3.269367613332388,
    });
    const auto sol = randomization_minimax(v);
    CHECK(sol.value == doctest::Approx(5.668044700680).epsilon(1e-9));
    CHECK(sol.gap < 1e-9);
    CHECK(sol.polished);
    CHECK(sol.iterations == 200);
    REQUIRE(sol.row_probabilities.size() == 4);
    CHECK(sol.row_probabilities[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.row_probabilities[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.row_probabilities[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sol.row_probabilities[3] == doctest::Approx(0.5).epsilon(1e-9));
    REQUIRE(sol.strategy.atoms.size() == 2);
    CHECK(sol.strategy.atoms[0] == 2);
    CHECK(sol.strategy.atoms[1] == 3);

    // Sandwich invariant: the certified value is the best column response to
    // the returned mixture, and no pure row does better than the mixture.
    for (std::size_t j = 0; j < v.cols(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < v.rows(); ++i) col += sol.row_probabilities[i] * v(i, j);
        CHECK(col <= sol.value + 1e-9);
    }
    const auto lit = literal_minimax(v);
    CHECK(sol.value <= lit.value + 1e-9);
}

TEST_CASE("literal rule on the demo payoff picks the third row") {
    const numerics::Matrix v(4, 3, {
        11.499656011117402, 8.559617326397861, 11.81808787076493,
        8.559617326397861, 11.499656011117402, 11.81808787076493,
        5.461726196488958, 5.874363204870646, 3.269367613332388,
        5.874363204870646, 5.461726196488958, 3.269367613332388,
    });
    const auto lit = literal_minimax(v);
    CHECK(lit.row == 2);
    CHECK(lit.value == doctest::Approx(5.874363204871).epsilon(1e-9));
}

TEST_CASE("literal rule breaks ties toward the smaller row index") {
    const numerics::Matrix v(3, 2, {7.0, 2.0, 3.0, 7.0, 9.0, 0.0});
    const auto lit = literal_minimax(v);
    CHECK(lit.row == 0);
    CHECK(lit.value == doctest::Approx(7.0));
}

TEST_CASE("empty payoff is rejected by both solvers") {
    const numerics::Matrix empty;
    CHECK_THROWS_AS(randomization_minimax(empty), Error);
    CHECK_THROWS_AS(literal_minimax(empty), Error);
    try {
        randomization_minimax(empty);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::input);
        CHECK(std::string(e.code()) == "empty_payoff");
    }
}

TEST_CASE("randomized value never exceeds the literal value") {
    // The literal rule restricts to point masses, so it can only do worse.
    const numerics::Matrix v(3, 3, {3.0, 1.0, 2.0, 1.0, 3.0, 2.0, 2.0, 2.0, 2.5});
    const auto sol = randomization_minimax(v);
    const auto lit = literal_minimax(v);
    CHECK(sol.value <= lit.value + 1e-6);
    CHECK(sol.gap < 1e-6);
}

TEST_CASE("point class names") {
    CHECK(to_string(PointClass::nash) == "nash");
    CHECK(to_string(PointClass::stationary_only) == "stationary-only");
    CHECK(to_string(PointClass::boundary) == "boundary");
}
