#include "bias_design/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "bias_design/errors.hpp"

namespace bias_design::game {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool fin(double x) { return std::isfinite(x); }

}  // namespace

Objectives::Objectives(const AlphaBetaFamily& family, double psi) : psi_(psi) {
    for (int i = 0; i < 4; ++i) {
        if (family.points[i].x.size() != 1 || family.points[i].z.size() != 1) {
            throw dimension_mismatch("the design game runs on scalar (x,z) support points");
        }
        xs_[i] = family.points[i].x[0];
        zs_[i] = family.points[i].z[0];
    }
    if (!std::isfinite(psi)) throw non_finite("psi must be finite");
}

std::pair<double, double> Objectives::both(double a, double b) const {
    const double w[4] = {a * b, (1.0 - a) * b, a * (1.0 - b), (1.0 - a) * (1.0 - b)};
    double m00 = 0.0, m01 = 0.0, m11 = 0.0, g0 = 0.0, g1 = 0.0;
    for (int i = 0; i < 4; ++i) {
        m00 += w[i];
        m01 += w[i] * xs_[i];
        m11 += w[i] * xs_[i] * xs_[i];
        g0 += w[i] * zs_[i];
        g1 += w[i] * xs_[i] * zs_[i];
    }
    const double det = m00 * m11 - m01 * m01;
    const double mx = std::max({std::abs(m00), std::abs(m01), std::abs(m11)});
    const double scale = std::max(1.0, mx * mx);
    if (std::abs(det) <= 1e-14 * scale) return {kInf, kInf};
    const double i00 = m11 / det;
    const double i01 = -m01 / det;
    const double i11 = m00 / det;
    const double u0 = (i00 * g0 + i01 * g1) * psi_;
    const double u1 = (i01 * g0 + i11 * g1) * psi_;
    return {i00 + i11, u0 * u0 + u1 * u1};
}

double Objectives::alice(double a, double b) const { return both(a, b).first; }
double Objectives::bob(double a, double b) const { return both(a, b).second; }

namespace {

// Derivative-sign bisection toward a stationary point inside [lo, hi]. The
// derivative proxy is a clamped central difference with step 1e-7; the sign
// is flipped for maxima so the bracket condition reads the same. Returns
// nothing when the bracket does not hold or a probe lands on a singular slice.
template <class F>
std::optional<double> refine_root(const F& f, double lo, double hi, bool maximize) {
    const double sgn = maximize ? -1.0 : 1.0;
    constexpr double dstep = 1e-7;
    auto g = [&](double x) {
        const double xl = std::max(0.0, x - dstep);
        const double xr = std::min(1.0, x + dstep);
        const double fr = f(xr);
        const double fl = f(xl);
        if (!fin(fr) || !fin(fl)) return std::numeric_limits<double>::quiet_NaN();
        return sgn * (fr - fl);
    };
    double a = lo;
    double b = hi;
    const double ga = g(a);
    const double gb = g(b);
    if (!(fin(ga) && fin(gb) && ga <= 0.0 && 0.0 <= gb)) return std::nullopt;
    while (b - a > 1e-11) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if (!fin(gm)) return std::nullopt;
        if (gm <= 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// All interior stationary points of f on [0,1] seen by a 401-point grid, plus
// the endpoints when they are one-sided minima. Grid maxima flanked by a
// singular value are skipped: those are pole shoulders, not stationary points.
template <class F>
std::vector<double> stationary_candidates(const F& f) {
    constexpr int n = 401;
    double xs[n];
    double v[n];
    for (int i = 0; i < n; ++i) {
        xs[i] = i / 400.0;
        v[i] = f(xs[i]);
    }
    std::vector<double> out;
    for (int i = 1; i + 1 < n; ++i) {
        if (!fin(v[i])) continue;
        const double vl = fin(v[i - 1]) ? v[i - 1] : kInf;
        const double vr = fin(v[i + 1]) ? v[i + 1] : kInf;
        if (v[i] <= vl && v[i] <= vr) {
            auto r = refine_root(f, xs[i - 1], xs[i + 1], false);
            out.push_back(r ? *r : xs[i]);
        } else if (fin(v[i - 1]) && fin(v[i + 1]) && v[i] >= v[i - 1] && v[i] >= v[i + 1]) {
            auto r = refine_root(f, xs[i - 1], xs[i + 1], true);
            out.push_back(r ? *r : xs[i]);
        }
    }
    if (fin(v[0]) && fin(v[1]) && v[0] <= v[1]) out.push_back(0.0);
    if (fin(v[n - 1]) && fin(v[n - 2]) && v[n - 1] <= v[n - 2]) out.push_back(1.0);
    return out;
}

template <class F>
std::optional<double> nearest_stationary(const F& f, double cur) {
    const std::vector<double> c = stationary_candidates(f);
    if (c.empty()) return std::nullopt;
    double best = c[0];
    for (double x : c) {
        const double dx = std::abs(x - cur);
        const double db = std::abs(best - cur);
        if (dx < db || (dx == db && x < best)) best = x;
    }
    return best;
}

// Global 401-point grid argmin with near-ties (relative 1e-12) resolved
// toward the smaller coordinate. NaN when every grid value is singular.
template <class F>
double grid_argmin(const F& f) {
    double best_v = kInf;
    double best_x = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i <= 400; ++i) {
        const double x = i / 400.0;
        const double v = f(x);
        if (!fin(v)) continue;
        if (!fin(best_v) || v < best_v - 1e-12 * std::max(1.0, std::abs(best_v))) {
            best_v = v;
            best_x = x;
        }
    }
    return best_x;
}

template <class F>
double golden_refine(const F& f, double lo, double hi) {
    constexpr double kPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
    double a = lo;
    double b = hi;
    double c = b - kPhi * (b - a);
    double d = a + kPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > 1e-10) {
        if (!(fd < fc)) {  // ties and right-side singularities keep the left interval
            b = d;
            d = c;
            fd = fc;
            c = b - kPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kPhi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

template <class F>
double global_response(const F& f, const char* who) {
    const double gx = grid_argmin(f);
    if (std::isnan(gx)) {
        throw singular_matrix(std::string("every grid candidate for ") + who +
                              " lies on a singular slice");
    }
    const double h = 1.0 / 400.0;
    return golden_refine(f, std::max(0.0, gx - h), std::min(1.0, gx + h));
}

void check_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw parameter_out_of_range(std::string(name) + " must lie in [0,1]");
    }
}

// Second difference on a possibly clamped three-point stencil; exact for
// quadratics. Callers guarantee xl < x < xr.
template <class F>
double second_difference(const F& f, double x, double fx) {
    const double h = 1e-3;
    const double xl = std::max(0.0, x - h);
    const double xr = std::min(1.0, x + h);
    const double fl = f(xl);
    const double fr = f(xr);
    return 2.0 * (fl / ((x - xl) * (xr - xl)) - fx / ((xr - x) * (x - xl)) +
                  fr / ((xr - x) * (xr - xl)));
}

EquilibriumPoint classify_point(const Objectives& obj, double a, double b) {
    EquilibriumPoint pt;
    pt.alpha = a;
    pt.beta = b;
    const auto [t1, t2] = obj.both(a, b);
    pt.trace_s1 = t1;
    pt.trace_s2 = t2;
    constexpr double gs = 1e-5;
    auto cgrad = [&](auto&& f, double x) {
        const double xl = std::max(0.0, x - gs);
        const double xr = std::min(1.0, x + gs);
        return (f(xr) - f(xl)) / (xr - xl);
    };
    auto fa = [&](double x) { return obj.alice(x, b); };
    auto fb = [&](double x) { return obj.bob(a, x); };
    pt.grad_alice = cgrad(fa, a);
    pt.grad_bob = cgrad(fb, b);
    if (std::min({a, 1.0 - a, b, 1.0 - b}) <= 1e-7) {
        pt.classification = PointClass::boundary;
        return pt;
    }
    const double d2a = second_difference(fa, a, t1);
    const double d2b = second_difference(fb, b, t2);
    pt.classification = (d2a > 1e-8 && d2b > 1e-8) ? PointClass::nash
                                                   : PointClass::stationary_only;
    return pt;
}

}  // namespace

std::string to_string(PointClass c) {
    switch (c) {
        case PointClass::nash: return "nash";
        case PointClass::stationary_only: return "stationary-only";
        case PointClass::boundary: return "boundary";
    }
    return "unknown";
}

double best_response_alice(double beta, const AlphaBetaFamily& family) {
    check_unit_interval(beta, "beta");
    const Objectives obj(family, 1.0);  // trace(S1) does not involve psi
    return global_response([&](double a) { return obj.alice(a, beta); }, "alice");
}

double best_response_bob(double alpha, const AlphaBetaFamily& family, double psi) {
    check_unit_interval(alpha, "alpha");
    if (psi == 0.0) {
        throw parameter_out_of_range("psi must be nonzero: a zero bias weight makes "
                                     "every beta optimal");
    }
    const Objectives obj(family, psi);
    return global_response([&](double b) { return obj.bob(alpha, b); }, "bob");
}

std::vector<std::pair<double, double>> default_nash_starts() {
    std::vector<std::pair<double, double>> starts;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j) starts.emplace_back(i / 4.0, j / 4.0);
    return starts;
}

EquilibriumReport nash_solve(const AlphaBetaFamily& family, double psi,
                             const std::vector<std::pair<double, double>>& starts) {
    if (starts.empty()) {
        throw parameter_out_of_range("at least one start is required");
    }
    for (const auto& [a, b] : starts) {
        if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
            throw parameter_out_of_range("starts must lie in [0,1]^2");
        }
    }
    if (psi == 0.0) {
        throw parameter_out_of_range("psi must be nonzero: a zero bias weight makes "
                                     "every beta stationary");
    }
    const Objectives obj(family, psi);

    EquilibriumReport report;
    report.complete = true;
    for (const auto& [a0, b0] : starts) {
        double a = a0;
        double b = b0;
        int sweeps = 0;
        double residual = kInf;
        bool converged = false;
        for (sweeps = 1; sweeps <= 1000; ++sweeps) {
            auto na_opt = nearest_stationary([&](double x) { return obj.alice(x, b); }, a);
            const double na = na_opt ? *na_opt : a;
            auto nb_opt = nearest_stationary([&](double x) { return obj.bob(na, x); }, b);
            const double nb = nb_opt ? *nb_opt : b;
            residual = std::max(std::abs(na - a), std::abs(nb - b));
            a = na;
            b = nb;
            if (residual < 1e-9) {
                converged = true;
                break;
            }
        }
        StartDiagnostic diag;
        diag.start_alpha = a0;
        diag.start_beta = b0;
        diag.alpha = a;
        diag.beta = b;
        diag.sweeps = std::min(sweeps, 1000);
        diag.residual = residual;
        diag.converged = converged;
        if (converged) {
            int idx = -1;
            for (std::size_t i = 0; i < report.points.size(); ++i) {
                if (std::max(std::abs(report.points[i].alpha - a),
                             std::abs(report.points[i].beta - b)) <= 1e-6) {
                    idx = static_cast<int>(i);
                    break;
                }
            }
            if (idx < 0) {
                report.points.push_back(classify_point(obj, a, b));
                idx = static_cast<int>(report.points.size()) - 1;
            }
            diag.point_index = idx;
        } else {
            report.complete = false;
        }
        report.diagnostics.push_back(diag);
    }
    return report;
}

namespace {

template <class F>
double refine_coordinate(const F& f, double x, double h) {
    const double lo = std::max(0.0, x - h);
    const double hi = std::min(1.0, x + h);
    if (auto r = refine_root(f, lo, hi, false)) return *r;
    // No derivative bracket (boundary or pole nearby): fall back to a local scan.
    double best_x = x;
    double best_v = f(x);
    for (int i = 0; i <= 40; ++i) {
        const double t = lo + (hi - lo) * (i / 40.0);
        const double v = f(t);
        if (fin(v) && v < best_v) {
            best_v = v;
            best_x = t;
        }
    }
    return best_x;
}

}  // namespace

JointOptimum joint_optimum(const AlphaBetaFamily& family, double psi) {
    const Objectives obj(family, psi);
    auto f = [&](double a, double b) {
        const auto [t1, t2] = obj.both(a, b);
        return t1 + t2;
    };
    double best_v = kInf;
    double ba = 0.0;
    double bb = 0.0;
    for (int i = 0; i <= 200; ++i) {
        for (int j = 0; j <= 200; ++j) {
            const double a = i / 200.0;
            const double b = j / 200.0;
            const double v = f(a, b);
            if (fin(v) && v < best_v) {
                best_v = v;
                ba = a;
                bb = b;
            }
        }
    }
    if (!fin(best_v)) {
        throw singular_matrix("every grid point of the parameter square is singular");
    }
    const double h = 1.0 / 200.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        const double na = refine_coordinate([&](double x) { return f(x, bb); }, ba, h);
        const double nb = refine_coordinate([&](double x) { return f(na, x); }, bb, h);
        const double change = std::max(std::abs(na - ba), std::abs(nb - bb));
        ba = na;
        bb = nb;
        if (change < 1e-8) break;
    }
    return {ba, bb, f(ba, bb)};
}

namespace {

struct PolishResult {
    std::vector<double> p;
    double value = 0.0;
    double gap = 0.0;
};

std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b) {
    const Matrix inv = numerics::invert(a);
    std::vector<double> out(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i] += inv(i, j) * b[j];
    return out;
}

double upper_value(const Matrix& v, const std::vector<double>& p) {
    double up = -kInf;
    for (std::size_t j = 0; j < v.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.rows(); ++i) s += p[i] * v(i, j);
        up = std::max(up, s);
    }
    return up;
}

double lower_value(const Matrix& v, const std::vector<double>& q) {
    double low = kInf;
    for (std::size_t i = 0; i < v.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < v.cols(); ++j) s += v(i, j) * q[j];
        low = std::min(low, s);
    }
    return low;
}

// Equalizing solve on a square sub-support: both players' mixtures must make
// the opponent indifferent across the chosen support at one common value.
std::optional<PolishResult> solve_support(const Matrix& v, const std::vector<std::size_t>& isup,
                                          const std::vector<std::size_t>& jsup) {
    const std::size_t sz = isup.size();
    std::vector<double> pi, qj;
    double val = 0.0, val2 = 0.0;
    try {
        Matrix a(sz + 1, sz + 1);
        std::vector<double> b(sz + 1, 0.0);
        for (std::size_t c = 0; c < sz; ++c) a(0, c) = 1.0;
        b[0] = 1.0;
        for (std::size_t r = 0; r < sz; ++r) {
            for (std::size_t c = 0; c < sz; ++c) a(r + 1, c) = v(isup[c], jsup[r]);
            a(r + 1, sz) = -1.0;
        }
        std::vector<double> sol = solve_linear(a, b);
        pi.assign(sol.begin(), sol.begin() + sz);
        val = sol[sz];

        Matrix a2(sz + 1, sz + 1);
        for (std::size_t c = 0; c < sz; ++c) a2(0, c) = 1.0;
        for (std::size_t r = 0; r < sz; ++r) {
            for (std::size_t c = 0; c < sz; ++c) a2(r + 1, c) = v(isup[r], jsup[c]);
            a2(r + 1, sz) = -1.0;
        }
        std::vector<double> sol2 = solve_linear(a2, b);
        qj.assign(sol2.begin(), sol2.begin() + sz);
        val2 = sol2[sz];
    } catch (const Error&) {
        return std::nullopt;
    }
    if (std::abs(val - val2) > 1e-9) return std::nullopt;
    for (double x : pi)
        if (x < -1e-12) return std::nullopt;
    for (double x : qj)
        if (x < -1e-12) return std::nullopt;

    std::vector<double> p(v.rows(), 0.0), q(v.cols(), 0.0);
    double psum = 0.0, qsum = 0.0;
    for (std::size_t c = 0; c < sz; ++c) {
        p[isup[c]] = std::max(0.0, pi[c]);
        q[jsup[c]] = std::max(0.0, qj[c]);
        psum += p[isup[c]];
        qsum += q[jsup[c]];
    }
    for (auto& x : p) x /= psum;
    for (auto& x : q) x /= qsum;
    const double up = upper_value(v, p);
    const double low = lower_value(v, q);
    if (up - low > 1e-9) return std::nullopt;
    return PolishResult{std::move(p), up, up - low};
}

// Enumerate square sub-supports of the rows and columns currently heavy in
// the averaged strategies, heaviest first, smallest size first.
std::optional<PolishResult> polish(const Matrix& v, const std::vector<double>& pa,
                                   const std::vector<double>& qa) {
    std::vector<std::size_t> heavy_i, heavy_j;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i] > 1e-3) heavy_i.push_back(i);
    for (std::size_t j = 0; j < qa.size(); ++j)
        if (qa[j] > 1e-3) heavy_j.push_back(j);
    std::stable_sort(heavy_i.begin(), heavy_i.end(),
                     [&](std::size_t a, std::size_t b) { return pa[a] > pa[b]; });
    std::stable_sort(heavy_j.begin(), heavy_j.end(),
                     [&](std::size_t a, std::size_t b) { return qa[a] > qa[b]; });

    const std::size_t cap = std::min({heavy_i.size(), heavy_j.size(), std::size_t{6}});
    for (std::size_t sz = 1; sz <= cap; ++sz) {
        std::vector<std::size_t> ci(sz), cj(sz);
        for (std::size_t k = 0; k < sz; ++k) ci[k] = k;
        for (;;) {  // combinations of heavy_i positions
            for (std::size_t k = 0; k < sz; ++k) cj[k] = k;
            for (;;) {  // combinations of heavy_j positions
                std::vector<std::size_t> isup(sz), jsup(sz);
                for (std::size_t k = 0; k < sz; ++k) {
                    isup[k] = heavy_i[ci[k]];
                    jsup[k] = heavy_j[cj[k]];
                }
                if (auto sol = solve_support(v, isup, jsup)) return sol;
                // advance cj
                std::size_t k = sz;
                while (k > 0 && cj[k - 1] == heavy_j.size() - sz + (k - 1)) --k;
                if (k == 0) break;
                ++cj[k - 1];
                for (std::size_t t = k; t < sz; ++t) cj[t] = cj[t - 1] + 1;
            }
            std::size_t k = sz;
            while (k > 0 && ci[k - 1] == heavy_i.size() - sz + (k - 1)) --k;
            if (k == 0) break;
            ++ci[k - 1];
            for (std::size_t t = k; t < sz; ++t) ci[t] = ci[t - 1] + 1;
        }
    }
    return std::nullopt;
}

MinimaxSolution package(std::vector<double> p, double value, double gap, long iterations,
                        bool polished) {
    MinimaxSolution out;
    out.row_probabilities = std::move(p);
    for (std::size_t i = 0; i < out.row_probabilities.size(); ++i) {
        if (out.row_probabilities[i] > 0.0) {
            out.strategy.atoms.push_back(i);
            out.strategy.probabilities.push_back(out.row_probabilities[i]);
        }
    }
    out.value = value;
    out.gap = gap;
    out.iterations = iterations;
    out.polished = polished;
    return out;
}

}  // namespace

MinimaxSolution randomization_minimax(const Matrix& payoff) {
    if (payoff.rows() == 0 || payoff.cols() == 0) {
        throw Error(ErrorKind::input, "empty_payoff",
                    "the payoff needs at least one row and one column");
    }
    const std::size_t m = payoff.rows();
    const std::size_t k = payoff.cols();
    double lo = payoff(0, 0);
    double hi = payoff(0, 0);
    for (double x : payoff.data()) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double range = std::max(hi - lo, 1e-30);

    std::vector<double> wp(m, 0.0), wq(k, 0.0);  // log-weights
    std::vector<double> sp(m, 0.0), sq(k, 0.0);  // iterate sums
    std::vector<double> p(m), q(k), pa(m), qa(k);
    auto softmax = [](const std::vector<double>& w, std::vector<double>& out) {
        const double top = *std::max_element(w.begin(), w.end());
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            out[i] = std::exp(w[i] - top);
            sum += out[i];
        }
        for (auto& x : out) x /= sum;
    };

    constexpr long itmax = 1000000;
    for (long t = 1; t <= itmax; ++t) {
        softmax(wp, p);
        softmax(wq, q);
        for (std::size_t i = 0; i < m; ++i) sp[i] += p[i];
        for (std::size_t j = 0; j < k; ++j) sq[j] += q[j];
        for (std::size_t i = 0; i < m; ++i) pa[i] = sp[i] / double(t);
        for (std::size_t j = 0; j < k; ++j) qa[j] = sq[j] / double(t);
        const double up = upper_value(payoff, pa);
        const double low = lower_value(payoff, qa);
        const double gap = up - low;
        if (gap < 1e-6) return package(pa, up, gap, t, false);
        if (t % 200 == 0) {
            if (auto sol = polish(payoff, pa, qa)) {
                return package(std::move(sol->p), sol->value, sol->gap, t, true);
            }
        }
        const double eta = 1.0 / std::sqrt(double(t));
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += ((payoff(i, j) - lo) / range) * q[j];
            wp[i] -= eta * s;
        }
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += ((payoff(i, j) - lo) / range) * p[i];
            wq[j] += eta * s;
        }
    }
    if (auto sol = polish(payoff, pa, qa)) {
        return package(std::move(sol->p), sol->value, sol->gap, itmax, true);
    }
    throw no_convergence("duality gap did not reach 1e-6 within the iteration cap");
}

LiteralSolution literal_minimax(const Matrix& payoff) {
    if (payoff.rows() == 0 || payoff.cols() == 0) {
        throw Error(ErrorKind::input, "empty_payoff",
                    "the payoff needs at least one row and one column");
    }
    LiteralSolution out;
    out.value = kInf;
    for (std::size_t i = 0; i < payoff.rows(); ++i) {
        double worst = -kInf;
        for (std::size_t j = 0; j < payoff.cols(); ++j) worst = std::max(worst, payoff(i, j));
        if (worst < out.value) {
            out.value = worst;
            out.row = i;
        }
    }
    return out;
}

}  // namespace bias_design::game
