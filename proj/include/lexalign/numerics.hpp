#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lexalign/matrix.hpp"

namespace lexalign {

struct QrResult {
  Matrix q;  // m x n, orthonormal columns
  Matrix r;  // n x n, upper triangular with nonnegative diagonal
};

// Householder QR of an m x n matrix with m >= n. The diagonal of R is made
// nonnegative by flipping the matching column of Q; a zero diagonal entry
// counts as positive.
QrResult qr_decompose(const Matrix& a);

class SvdNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvdResult {
  Matrix u;                         // m x k
  std::vector<double> singular;     // k values, nonincreasing, nonnegative
  Matrix v;                         // n x k
};

// Thin SVD, k = min(m, n). Golub-Kahan bidiagonalization followed by
// implicit-shift QR sweeps on the bidiagonal. Throws SvdNotConverged once
// the sweep count exceeds 100 * k.
SvdResult svd(const Matrix& a);

// Haar-distributed orthogonal d x d matrix: QR of a Gaussian matrix with the
// positive-diagonal sign convention. Deterministic per seed.
Matrix random_orthogonal(std::size_t d, std::uint64_t seed);

// ||W^T W - I||_F. The penalty (beta/2) * orthogonality_error(W)^2 is the
// objective the single-step update below partially minimizes.
double orthogonality_error(const Matrix& w);

// W' = (1 + beta) W - beta W W^T W. Orthogonal W is a fixed point.
Matrix orthogonalize_step(const Matrix& w, double beta);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;

  bool within(double tol) const { return max_relative_error <= tol; }
};

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h compared against
// analytic[i]; relative error |a - n| / max(1e-8, |a| + |n|).
GradientCheckReport finite_difference_check(const ScalarFunction& f,
                                            std::span<const double> point,
                                            std::span<const double> analytic,
                                            double h = 1e-5);

}  // namespace lexalign
