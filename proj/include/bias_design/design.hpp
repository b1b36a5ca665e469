#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "bias_design/matrix.hpp"

namespace bias_design::design {

using numerics::Matrix;

// One candidate experimental point: causal coordinates x, bias coordinates z.
struct Point {
    std::vector<double> x;
    std::vector<double> z;
};

bool operator==(const Point& a, const Point& b);

// Ordered list of distinct exponent tuples over one shared arity.
// Term j evaluates to the product of coordinate^exponent; 0^0 = 1.
class MonomialBasis {
  public:
    explicit MonomialBasis(std::vector<std::vector<int>> terms);
    MonomialBasis(std::initializer_list<std::vector<int>> terms)
        : MonomialBasis(std::vector<std::vector<int>>(terms)) {}

    std::size_t arity() const noexcept { return arity_; }
    std::size_t size() const noexcept { return terms_.size(); }
    const std::vector<std::vector<int>>& terms() const noexcept { return terms_; }

  private:
    std::vector<std::vector<int>> terms_;
    std::size_t arity_ = 0;
};

std::vector<double> evaluate_basis(const std::vector<double>& point, const MonomialBasis& basis);

// Finite design measure: distinct support points, nonnegative weights
// summing to 1 within 1e-12. All points share one x-arity and one z-arity.
class DesignMeasure {
  public:
    DesignMeasure(std::vector<Point> support, std::vector<double> weights);

    const std::vector<Point>& support() const noexcept { return support_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return support_.size(); }
    std::size_t x_arity() const noexcept { return support_[0].x.size(); }
    std::size_t z_arity() const noexcept { return support_[0].z.size(); }

  private:
    std::vector<Point> support_;
    std::vector<double> weights_;
};

// Blocks of the full moment matrix [[m11, m12], [m12^T, m22]]. Construction
// checks block shapes, symmetry of m11/m22 within 1e-12, and positive
// semidefiniteness of the assembled matrix (min eigenvalue >= -1e-10).
class PartitionedMoment {
  public:
    PartitionedMoment(Matrix m11, Matrix m12, Matrix m22);

    const Matrix& m11() const noexcept { return m11_; }
    const Matrix& m12() const noexcept { return m12_; }
    const Matrix& m22() const noexcept { return m22_; }
    Matrix m21() const { return numerics::transpose(m12_); }
    Matrix assembled() const;

    std::size_t p() const noexcept { return m11_.rows(); }
    std::size_t q() const noexcept { return m22_.rows(); }

  private:
    Matrix m11_;
    Matrix m12_;
    Matrix m22_;
};

// Two-parameter design family over four fixed support points; the weights are
// (ab, (1-a)b, a(1-b), (1-a)(1-b)), a valid measure for all a, b in [0,1].
struct AlphaBetaFamily {
    std::array<Point, 4> points;
    double alpha = 0.5;
    double beta = 0.5;

    // The four points (1,1), (0,1), (0,-1), (-1,-1) in scalar (x,z)-space.
    static AlphaBetaFamily standard(double alpha, double beta);
};

DesignMeasure alpha_beta_measure(const AlphaBetaFamily& family);

PartitionedMoment moment_matrix(const DesignMeasure& measure, const MonomialBasis& f,
                                const MonomialBasis& g);

// Two separable aspects of product structure. The support test asks whether
// the support set equals (x-projection) x (z-projection); the weight test asks
// whether the weight table over the support admits a rank-1 factorization
// within 1e-10 (marginal products, when the support is a full product set).
struct ProductCheck {
    bool support_is_product = false;
    bool weights_factorize = false;
};

ProductCheck product_design_check(const DesignMeasure& measure);

// True iff both parts of product_design_check hold.
bool is_product_design(const DesignMeasure& measure);

}  // namespace bias_design::design
