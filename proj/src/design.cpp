#include "bias_design/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <string>

#include "bias_design/errors.hpp"

namespace bias_design::design {

namespace {

double ipow(double base, int exponent) {
    double out = 1.0;  // exponent 0 gives 1, including 0^0
    for (int k = 0; k < exponent; ++k) out *= base;
    return out;
}

bool finite_vector(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

bool operator==(const Point& a, const Point& b) {
    return a.x == b.x && a.z == b.z;
}

MonomialBasis::MonomialBasis(std::vector<std::vector<int>> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) {
        throw Error(ErrorKind::input, "empty_basis", "basis needs at least one term");
    }
    arity_ = terms_[0].size();
    for (const auto& t : terms_) {
        if (t.size() != arity_) {
            throw dimension_mismatch("basis terms have mixed arities");
        }
        for (int e : t) {
            if (e < 0) {
                throw parameter_out_of_range("basis exponents must be nonnegative");
            }
        }
    }
    for (std::size_t i = 0; i < terms_.size(); ++i)
        for (std::size_t j = i + 1; j < terms_.size(); ++j)
            if (terms_[i] == terms_[j]) {
                throw Error(ErrorKind::input, "duplicate_basis_term",
                            "basis terms must be distinct");
            }
}

std::vector<double> evaluate_basis(const std::vector<double>& point, const MonomialBasis& basis) {
    if (point.size() != basis.arity()) {
        throw arity_mismatch("point arity " + std::to_string(point.size()) +
                             " does not match basis arity " + std::to_string(basis.arity()));
    }
    std::vector<double> out;
    out.reserve(basis.size());
    for (const auto& term : basis.terms()) {
        double v = 1.0;
        for (std::size_t c = 0; c < term.size(); ++c) v *= ipow(point[c], term[c]);
        out.push_back(v);
    }
    return out;
}

DesignMeasure::DesignMeasure(std::vector<Point> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty()) {
        throw empty_support("design measure needs at least one support point");
    }
    if (weights_.size() != support_.size()) {
        throw weight_mismatch("weight count does not match support size");
    }
    const std::size_t xa = support_[0].x.size();
    const std::size_t za = support_[0].z.size();
    for (const auto& pt : support_) {
        if (pt.x.size() != xa || pt.z.size() != za) {
            throw dimension_mismatch("support points have mixed arities");
        }
        if (!finite_vector(pt.x) || !finite_vector(pt.z)) {
            throw non_finite("support coordinates must be finite");
        }
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) {
            throw weight_mismatch("weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw weight_mismatch("weights sum to " + std::to_string(sum) + ", expected 1");
    }
    for (std::size_t i = 0; i < support_.size(); ++i)
        for (std::size_t j = i + 1; j < support_.size(); ++j)
            if (support_[i] == support_[j]) {
                throw Error(ErrorKind::input, "duplicate_support_point",
                            "support points must be distinct");
            }
}

PartitionedMoment::PartitionedMoment(Matrix m11, Matrix m12, Matrix m22)
    : m11_(std::move(m11)), m12_(std::move(m12)), m22_(std::move(m22)) {
    if (m11_.rows() != m11_.cols() || m22_.rows() != m22_.cols()) {
        throw dimension_mismatch("diagonal moment blocks must be square");
    }
    if (m12_.rows() != m11_.rows() || m12_.cols() != m22_.rows()) {
        throw dimension_mismatch("off-diagonal moment block has wrong shape");
    }
    if (!numerics::is_symmetric(m11_, 1e-12) || !numerics::is_symmetric(m22_, 1e-12)) {
        throw not_symmetric("moment blocks m11 and m22 must be symmetric within 1e-12");
    }
    if (numerics::min_eigenvalue(assembled()) < -1e-10) {
        throw Error(ErrorKind::input, "not_positive_semidefinite",
                    "assembled moment matrix has a negative eigenvalue");
    }
}

Matrix PartitionedMoment::assembled() const {
    const std::size_t pp = p();
    const std::size_t qq = q();
    Matrix full(pp + qq, pp + qq);
    for (std::size_t i = 0; i < pp; ++i)
        for (std::size_t j = 0; j < pp; ++j) full(i, j) = m11_(i, j);
    for (std::size_t i = 0; i < pp; ++i)
        for (std::size_t j = 0; j < qq; ++j) {
            full(i, pp + j) = m12_(i, j);
            full(pp + j, i) = m12_(i, j);
        }
    for (std::size_t i = 0; i < qq; ++i)
        for (std::size_t j = 0; j < qq; ++j) full(pp + i, pp + j) = m22_(i, j);
    return full;
}

AlphaBetaFamily AlphaBetaFamily::standard(double alpha, double beta) {
    AlphaBetaFamily family;
    family.points = {Point{{1.0}, {1.0}}, Point{{0.0}, {1.0}}, Point{{0.0}, {-1.0}},
                     Point{{-1.0}, {-1.0}}};
    family.alpha = alpha;
    family.beta = beta;
    return family;
}

DesignMeasure alpha_beta_measure(const AlphaBetaFamily& family) {
    const double a = family.alpha;
    const double b = family.beta;
    if (!(a >= 0.0 && a <= 1.0) || !(b >= 0.0 && b <= 1.0)) {
        throw parameter_out_of_range("family parameters must lie in [0,1]");
    }
    std::vector<Point> support(family.points.begin(), family.points.end());
    // (1-a)(1-b) computed as the remainder of the running sum keeps the
    // left-to-right total exactly 1 (the residual is below half an ulp of 1).
    std::vector<double> weights = {a * b, (1.0 - a) * b, a * (1.0 - b), 0.0};
    weights[3] = 1.0 - (weights[0] + weights[1] + weights[2]);
    if (weights[3] < 0.0 && weights[3] >= -1e-12) weights[3] = 0.0;  // ulp-level residual
    return DesignMeasure(std::move(support), std::move(weights));
}

PartitionedMoment moment_matrix(const DesignMeasure& measure, const MonomialBasis& f,
                                const MonomialBasis& g) {
    const std::size_t p = f.size();
    const std::size_t q = g.size();
    Matrix full(p + q, p + q);
    for (std::size_t i = 0; i < measure.size(); ++i) {
        const Point& pt = measure.support()[i];
        const double w = measure.weights()[i];
        std::vector<double> u = evaluate_basis(pt.x, f);
        const std::vector<double> gz = evaluate_basis(pt.z, g);
        u.insert(u.end(), gz.begin(), gz.end());
        for (std::size_t r = 0; r < u.size(); ++r)
            for (std::size_t c = 0; c < u.size(); ++c) full(r, c) += w * u[r] * u[c];
    }
    Matrix m11(p, p);
    Matrix m12(p, q);
    Matrix m22(q, q);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) m11(i, j) = full(i, j);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) m12(i, j) = full(i, p + j);
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j) m22(i, j) = full(p + i, p + j);
    return PartitionedMoment(std::move(m11), std::move(m12), std::move(m22));
}

namespace {

// Index of v in seen, appending on first sight.
std::size_t intern(std::vector<std::vector<double>>& seen, const std::vector<double>& v) {
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i] == v) return i;
    seen.push_back(v);
    return seen.size() - 1;
}

}  // namespace

ProductCheck product_design_check(const DesignMeasure& measure) {
    std::vector<std::vector<double>> xs;
    std::vector<std::vector<double>> zs;
    struct Cell {
        std::size_t row, col;
        double w;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < measure.size(); ++i) {
        const Point& pt = measure.support()[i];
        cells.push_back({intern(xs, pt.x), intern(zs, pt.z), measure.weights()[i]});
    }

    ProductCheck out;
    out.support_is_product = measure.size() == xs.size() * zs.size();

    // Rank-1 test on the partial weight table: propagate row/col factors over
    // the positive cells of each connected component, then verify every
    // positive cell and every zero cell whose factors landed in one component.
    constexpr double kZero = 1e-15;
    constexpr double kTol = 1e-10;
    const std::size_t nr = xs.size();
    const std::size_t nc = zs.size();
    std::vector<double> rfac(nr, 0.0), cfac(nc, 0.0);
    std::vector<int> rcomp(nr, -1), ccomp(nc, -1);
    std::vector<std::vector<const Cell*>> by_row(nr), by_col(nc);
    for (const Cell& cell : cells) {
        if (cell.w > kZero) {
            by_row[cell.row].push_back(&cell);
            by_col[cell.col].push_back(&cell);
        }
    }
    int comp = 0;
    for (std::size_t seed = 0; seed < nr; ++seed) {
        if (rcomp[seed] != -1 || by_row[seed].empty()) continue;
        rcomp[seed] = comp;
        rfac[seed] = 1.0;
        std::queue<std::pair<bool, std::size_t>> frontier;  // (is_row, index)
        frontier.push({true, seed});
        while (!frontier.empty()) {
            auto [is_row, idx] = frontier.front();
            frontier.pop();
            const auto& touching = is_row ? by_row[idx] : by_col[idx];
            for (const Cell* cell : touching) {
                if (is_row && ccomp[cell->col] == -1) {
                    ccomp[cell->col] = comp;
                    cfac[cell->col] = cell->w / rfac[idx];
                    frontier.push({false, cell->col});
                } else if (!is_row && rcomp[cell->row] == -1) {
                    rcomp[cell->row] = comp;
                    rfac[cell->row] = cell->w / cfac[idx];
                    frontier.push({true, cell->row});
                }
            }
        }
        ++comp;
    }
    out.weights_factorize = true;
    for (const Cell& cell : cells) {
        const double product = rfac[cell.row] * cfac[cell.col];
        if (cell.w > kZero) {
            if (std::abs(cell.w - product) > kTol) out.weights_factorize = false;
        } else if (rcomp[cell.row] != -1 && rcomp[cell.row] == ccomp[cell.col]) {
            // A zero cell inside one component has a scale-free factor product
            // that must itself vanish; across components the scales are free.
            if (product > kTol) out.weights_factorize = false;
        }
    }
    return out;
}

bool is_product_design(const DesignMeasure& measure) {
    ProductCheck check = product_design_check(measure);
    return check.support_is_product && check.weights_factorize;
}

}  // namespace bias_design::design
