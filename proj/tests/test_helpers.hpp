#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lexalign/matrix.hpp"

namespace lexalign::testing {

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                              double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = g(rng);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double naive_fro(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// ||A^T A - I||_F computed without library helpers.
inline double gram_defect(const Matrix& a) {
  Matrix g = naive_matmul(naive_transpose(a), a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return naive_fro(g);
}

inline Matrix naive_rows_normalized(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double n = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) n += m(i, j) * m(i, j);
    n = std::sqrt(n);
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) /= n;
  }
  return m;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; returns the
// eigenvalues in descending order.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::ranges::sort(ev, std::greater<>());
  return ev;
}

// CSLS by the defining formula: full inner-product table, each neighborhood
// mean taken from a complete sort of its row or column.
inline Matrix brute_force_csls(const Matrix& queries, const Matrix& targets, std::size_t t) {
  const std::size_t m = queries.rows(), n = targets.rows(), d = queries.cols();
  Matrix ip(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += queries(i, c) * targets(j, c);
      ip(i, j) = s;
    }
  auto top_mean = [t](std::vector<double> v) {
    std::ranges::sort(v, std::greater<>());
    double s = 0.0;
    for (std::size_t k = 0; k < t; ++k) s += v[k];
    return s / static_cast<double>(t);
  };
  std::vector<double> rq(m), rt(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> v;
    for (std::size_t j = 0; j < n; ++j) v.push_back(ip(i, j));
    rq[i] = top_mean(v);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> v;
    for (std::size_t i = 0; i < m; ++i) v.push_back(ip(i, j));
    rt[j] = top_mean(v);
  }
  Matrix out(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = 2.0 * ip(i, j) - rq[i] - rt[j];
  return out;
}

// Index of the maximum in each row, lowest index on ties.
inline std::vector<std::size_t> row_argmax(const Matrix& scores) {
  std::vector<std::size_t> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

}  // namespace lexalign::testing
