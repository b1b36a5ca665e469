#include "bias_design/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "bias_design/errors.hpp"

namespace bias_design::criteria {

namespace {

Matrix column(const std::vector<double>& v) {
    return Matrix(v.size(), 1, v);
}

}  // namespace

BiasMse bias_mse(const PartitionedMoment& moment, const std::vector<double>& psi) {
    if (psi.size() != moment.q()) {
        throw dimension_mismatch("psi length must equal the bias basis size");
    }
    for (double v : psi) {
        if (!std::isfinite(v)) throw non_finite("psi entries must be finite");
    }
    BiasMse out;
    out.psi = psi;
    out.s1 = numerics::invert(moment.m11());
    Matrix v = out.s1 * (moment.m12() * column(psi));  // M11^-1 M12 psi
    out.s2 = v * numerics::transpose(v);
    out.trace_s1 = numerics::trace(out.s1);
    out.trace_s2 = 0.0;
    for (std::size_t i = 0; i < v.rows(); ++i) out.trace_s2 += v(i, 0) * v(i, 0);
    return out;
}

double a_criterion(const BiasMse& mse) {
    return mse.trace_s1 + mse.trace_s2;
}

double d_criterion(const PartitionedMoment& moment, const std::vector<double>& psi) {
    if (psi.size() != moment.q()) {
        throw dimension_mismatch("psi length must equal the bias basis size");
    }
    Matrix s1 = numerics::invert(moment.m11());
    Matrix u = moment.m12() * column(psi);  // p-vector M12 psi
    Matrix su = s1 * u;
    double quad = 0.0;  // psi^T M21 M11^-1 M12 psi
    for (std::size_t i = 0; i < u.rows(); ++i) quad += u(i, 0) * su(i, 0);
    const double factorized = numerics::determinant(s1) * (1.0 + quad);

    Matrix r = s1 + su * numerics::transpose(su);
    const double direct = numerics::determinant(r);
    const double scale = std::max({std::abs(factorized), std::abs(direct), 1e-300});
    if (std::abs(factorized - direct) > 1e-8 * scale) {
        throw no_convergence("determinant factorization disagrees with the direct value");
    }
    return factorized;
}

double q1_criterion(const PartitionedMoment& moment) {
    Matrix b = numerics::invert(moment.m11()) * moment.m12();  // M11^-1 M12, p x q
    Matrix q1 = numerics::transpose(b) * b;  // exactly symmetric by construction
    return numerics::max_eigenvalue(q1);
}

Matrix q2_matrix(const std::vector<std::vector<double>>& x_design, const MonomialBasis& f) {
    if (x_design.empty()) {
        throw empty_support("the design needs at least one x-point");
    }
    const std::size_t n = x_design.size();
    const std::size_t p = f.size();
    Matrix x1(p, n);  // column i holds f(x_i)
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> fx = design::evaluate_basis(x_design[i], f);
        for (std::size_t a = 0; a < p; ++a) x1(a, i) = fx[a];
    }
    Matrix m11(p, p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += x1(a, i) * x1(b, i);
            m11(a, b) = acc / static_cast<double>(n);
        }
    Matrix c = numerics::invert(m11) * x1;  // M11^-1 X1, p x n
    return numerics::transpose(c) * c;     // symmetric PSD Gram form of Q2
}

double q2_worst_bias(const std::vector<std::vector<double>>& x_design, const MonomialBasis& f,
                     const std::vector<std::vector<double>>& dictionary) {
    if (dictionary.empty()) {
        throw Error(ErrorKind::input, "empty_dictionary",
                    "the dictionary needs at least one vector");
    }
    const std::size_t n = x_design.size();
    for (const auto& h : dictionary) {
        if (h.size() != n) {
            throw dimension_mismatch("dictionary vectors must have one entry per design point");
        }
    }
    // lambda_max(Phi^T Q2 Phi) via the Gram form (C Phi)^T (C Phi).
    Matrix q2 = q2_matrix(x_design, f);
    Matrix phi(n, dictionary.size());
    for (std::size_t j = 0; j < dictionary.size(); ++j)
        for (std::size_t i = 0; i < n; ++i) phi(i, j) = dictionary[j][i];
    Matrix qphi = q2 * phi;
    Matrix g(dictionary.size(), dictionary.size());
    for (std::size_t a = 0; a < dictionary.size(); ++a)
        for (std::size_t b = a; b < dictionary.size(); ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += phi(i, a) * qphi(i, b);
            g(a, b) = acc;
            g(b, a) = acc;
        }
    return numerics::max_eigenvalue(g);
}

}  // namespace bias_design::criteria
