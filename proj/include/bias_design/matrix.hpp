#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace bias_design::numerics {

// Hard cap on matrix dimensions; everything in this library is desk scale.
inline constexpr std::size_t kMaxDim = 64;

// Pivot threshold for inversion, relative to the largest absolute entry.
inline constexpr double kSingularRelTol = 1e-12;

// Dense row-major matrix of finite doubles. Construction rejects NaN,
// infinities, empty shapes, and dimensions above kMaxDim.
class Matrix {
  public:
    Matrix() = default;  // 0x0 placeholder; operations reject it
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const noexcept { return data_; }

    // Throws if any entry is non-finite; used after in-place mutation.
    void check_finite() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix transpose(const Matrix& a);
double trace(const Matrix& a);
double max_abs(const Matrix& a);
bool is_symmetric(const Matrix& a, double tol);

// Gaussian elimination with partial pivoting on an augmented identity.
// A pivot below rel_tol times the largest absolute entry of m raises
// singular_matrix.
Matrix invert(const Matrix& m, double rel_tol = kSingularRelTol);

// Determinant via the same elimination; the permutation sign is tracked
// through row swaps. Singular inputs yield 0 rather than an error.
double determinant(const Matrix& m);

// Eigenvalues of a symmetric matrix (ascending) by the cyclic Jacobi method.
// Requires symmetry within 1e-10 elementwise; converges when the off-diagonal
// Frobenius norm drops below 1e-12 times the diagonal norm.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

double max_eigenvalue(const Matrix& m);
double min_eigenvalue(const Matrix& m);

}  // namespace bias_design::numerics
