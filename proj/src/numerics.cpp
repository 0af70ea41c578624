#include "lexalign/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lexalign/rng.hpp"

namespace lexalign {

QrResult qr_decompose(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n) throw DimensionError("qr_decompose requires rows >= cols");

  Matrix work = a;
  std::vector<std::vector<double>> reflectors(n);

  for (std::size_t k = 0; k < n; ++k) {
    double norm_x = 0.0;
    for (std::size_t i = k; i < m; ++i) norm_x = std::hypot(norm_x, work(i, k));

    std::vector<double>& v = reflectors[k];
    v.assign(m - k, 0.0);
    if (norm_x == 0.0) continue;

    const double alpha = work(k, k) >= 0.0 ? -norm_x : norm_x;
    for (std::size_t i = k; i < m; ++i) v[i - k] = work(i, k);
    v[0] -= alpha;
    double norm_v = 0.0;
    for (double x : v) norm_v = std::hypot(norm_v, x);
    if (norm_v == 0.0) {
      v.assign(m - k, 0.0);
      continue;
    }
    for (double& x : v) x /= norm_v;

    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i - k] * work(i, j);
      for (std::size_t i = k; i < m; ++i) work(i, j) -= 2.0 * s * v[i - k];
    }
  }

  QrResult out{Matrix(m, n), Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) out.r(i, j) = work(i, j);

  // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
  for (std::size_t j = 0; j < n; ++j) out.q(j, j) = 1.0;
  for (std::size_t kk = n; kk-- > 0;) {
    const std::vector<double>& v = reflectors[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = kk; i < m; ++i) s += v[i - kk] * out.q(i, j);
      if (s == 0.0) continue;
      for (std::size_t i = kk; i < m; ++i) out.q(i, j) -= 2.0 * s * v[i - kk];
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    if (out.r(j, j) >= 0.0) continue;
    for (std::size_t c = j; c < n; ++c) out.r(j, c) = -out.r(j, c);
    for (std::size_t i = 0; i < m; ++i) out.q(i, j) = -out.q(i, j);
  }
  return out;
}

namespace {

constexpr double kSvdTolerance = 1e-12;
constexpr double kTiny = 0x1p-966;

// Rotates columns a and b of m: (a, b) <- (c a + s b, -s a + c b).
void rotate_columns(Matrix& m, std::size_t a, std::size_t b, double c, double s) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double t = c * m(i, a) + s * m(i, b);
    m(i, b) = -s * m(i, a) + c * m(i, b);
    m(i, a) = t;
  }
}

void swap_columns(Matrix& m, std::size_t a, std::size_t b) {
  for (std::size_t i = 0; i < m.rows(); ++i) std::swap(m(i, a), m(i, b));
}

// m >= n.
SvdResult svd_tall(Matrix a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix u(m, n);
  Matrix v(n, n);
  std::vector<double> s(n, 0.0);
  std::vector<double> e(n, 0.0);
  std::vector<double> work(m, 0.0);

  // Householder bidiagonalization: left reflectors land in the columns of u,
  // right reflectors in the columns of v.
  const std::size_t nct = std::min(m - 1, n);
  const std::size_t nrt = n >= 2 ? std::min(n - 2, m) : 0;
  for (std::size_t k = 0; k < std::max(nct, nrt); ++k) {
    if (k < nct) {
      s[k] = 0.0;
      for (std::size_t i = k; i < m; ++i) s[k] = std::hypot(s[k], a(i, k));
      if (s[k] != 0.0) {
        if (a(k, k) < 0.0) s[k] = -s[k];
        for (std::size_t i = k; i < m; ++i) a(i, k) /= s[k];
        a(k, k) += 1.0;
      }
      s[k] = -s[k];
    }
    for (std::size_t j = k + 1; j < n; ++j) {
      if (k < nct && s[k] != 0.0) {
        double t = 0.0;
        for (std::size_t i = k; i < m; ++i) t += a(i, k) * a(i, j);
        t = -t / a(k, k);
        for (std::size_t i = k; i < m; ++i) a(i, j) += t * a(i, k);
      }
      e[j] = a(k, j);
    }
    if (k < nct)
      for (std::size_t i = k; i < m; ++i) u(i, k) = a(i, k);
    if (k < nrt) {
      e[k] = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) e[k] = std::hypot(e[k], e[i]);
      if (e[k] != 0.0) {
        if (e[k + 1] < 0.0) e[k] = -e[k];
        for (std::size_t i = k + 1; i < n; ++i) e[i] /= e[k];
        e[k + 1] += 1.0;
      }
      e[k] = -e[k];
      if (k + 1 < m && e[k] != 0.0) {
        for (std::size_t i = k + 1; i < m; ++i) work[i] = 0.0;
        for (std::size_t j = k + 1; j < n; ++j)
          for (std::size_t i = k + 1; i < m; ++i) work[i] += e[j] * a(i, j);
        for (std::size_t j = k + 1; j < n; ++j) {
          const double t = -e[j] / e[k + 1];
          for (std::size_t i = k + 1; i < m; ++i) a(i, j) += t * work[i];
        }
      }
      for (std::size_t i = k + 1; i < n; ++i) v(i, k) = e[i];
    }
  }

  std::size_t p = n;
  if (nct < n) s[nct] = a(nct, nct);
  if (nrt + 1 < p) e[nrt] = a(nrt, p - 1);
  e[p - 1] = 0.0;

  // Accumulate U.
  for (std::size_t j = nct; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) u(i, j) = 0.0;
    u(j, j) = 1.0;
  }
  for (std::size_t k = nct; k-- > 0;) {
    if (s[k] != 0.0) {
      for (std::size_t j = k + 1; j < n; ++j) {
        double t = 0.0;
        for (std::size_t i = k; i < m; ++i) t += u(i, k) * u(i, j);
        t = -t / u(k, k);
        for (std::size_t i = k; i < m; ++i) u(i, j) += t * u(i, k);
      }
      for (std::size_t i = k; i < m; ++i) u(i, k) = -u(i, k);
      u(k, k) = 1.0 + u(k, k);
      for (std::size_t i = 0; i < k; ++i) u(i, k) = 0.0;
    } else {
      for (std::size_t i = 0; i < m; ++i) u(i, k) = 0.0;
      u(k, k) = 1.0;
    }
  }

  // Accumulate V.
  for (std::size_t k = n; k-- > 0;) {
    if (k < nrt && e[k] != 0.0) {
      for (std::size_t j = k + 1; j < n; ++j) {
        double t = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) t += v(i, k) * v(i, j);
        t = -t / v(k + 1, k);
        for (std::size_t i = k + 1; i < n; ++i) v(i, j) += t * v(i, k);
      }
    }
    for (std::size_t i = 0; i < n; ++i) v(i, k) = 0.0;
    v(k, k) = 1.0;
  }

  // Implicit-shift QR on the bidiagonal (s, e). Indices are signed below
  // because the deflation scans run to -1.
  const std::size_t sweep_cap = 100 * n;
  std::size_t sweeps = 0;
  const long pp = static_cast<long>(n) - 1;
  while (p > 0) {
    const long pl = static_cast<long>(p);
    long k;
    for (k = pl - 2; k >= 0; --k) {
      if (std::abs(e[k]) <= kTiny + kSvdTolerance * (std::abs(s[k]) + std::abs(s[k + 1]))) {
        e[k] = 0.0;
        break;
      }
    }
    int kase;
    if (k == pl - 2) {
      kase = 4;  // e[p-2] negligible: s[p-1] converged
    } else {
      long ks;
      for (ks = pl - 1; ks > k; --ks) {
        const double t = (ks != pl ? std::abs(e[ks]) : 0.0) + (ks != k + 1 ? std::abs(e[ks - 1]) : 0.0);
        if (std::abs(s[ks]) <= kTiny + kSvdTolerance * t) {
          s[ks] = 0.0;
          break;
        }
      }
      if (ks == k) {
        kase = 3;
      } else if (ks == pl - 1) {
        kase = 1;
      } else {
        kase = 2;
        k = ks;
      }
    }
    ++k;

    switch (kase) {
      case 1: {  // deflate negligible s[p-1]
        double f = e[p - 2];
        e[p - 2] = 0.0;
        for (long j = pl - 2; j >= k; --j) {
          const double t = std::hypot(s[j], f);
          const double cs = s[j] / t;
          const double sn = f / t;
          s[j] = t;
          if (j != k) {
            f = -sn * e[j - 1];
            e[j - 1] = cs * e[j - 1];
          }
          rotate_columns(v, j, p - 1, cs, sn);
        }
      } break;
      case 2: {  // split at negligible s[k-1]
        double f = e[k - 1];
        e[k - 1] = 0.0;
        for (long j = k; j < pl; ++j) {
          const double t = std::hypot(s[j], f);
          const double cs = s[j] / t;
          const double sn = f / t;
          s[j] = t;
          f = -sn * e[j];
          e[j] = cs * e[j];
          rotate_columns(u, j, k - 1, cs, sn);
        }
      } break;
      case 3: {  // one QR sweep with Wilkinson-style shift
        if (++sweeps > sweep_cap)
          throw SvdNotConverged("svd: no convergence after " + std::to_string(sweep_cap) + " sweeps");
        const double scale = std::max({std::abs(s[p - 1]), std::abs(s[p - 2]), std::abs(e[p - 2]),
                                       std::abs(s[k]), std::abs(e[k])});
        const double sp = s[p - 1] / scale;
        const double spm1 = s[p - 2] / scale;
        const double epm1 = e[p - 2] / scale;
        const double sk = s[k] / scale;
        const double ek = e[k] / scale;
        const double b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
        const double c = (sp * epm1) * (sp * epm1);
        double shift = 0.0;
        if (b != 0.0 || c != 0.0) {
          shift = std::sqrt(b * b + c);
          if (b < 0.0) shift = -shift;
          shift = c / (b + shift);
        }
        double f = (sk + sp) * (sk - sp) + shift;
        double g = sk * ek;
        for (long j = k; j < pl - 1; ++j) {
          double t = std::hypot(f, g);
          double cs = f / t;
          double sn = g / t;
          if (j != k) e[j - 1] = t;
          f = cs * s[j] + sn * e[j];
          e[j] = cs * e[j] - sn * s[j];
          g = sn * s[j + 1];
          s[j + 1] = cs * s[j + 1];
          rotate_columns(v, j, j + 1, cs, sn);
          t = std::hypot(f, g);
          cs = f / t;
          sn = g / t;
          s[j] = t;
          f = cs * e[j] + sn * s[j + 1];
          s[j + 1] = -sn * e[j] + cs * s[j + 1];
          g = sn * e[j + 1];
          e[j + 1] = cs * e[j + 1];
          if (static_cast<std::size_t>(j) < m - 1) rotate_columns(u, j, j + 1, cs, sn);
        }
        e[p - 2] = f;
      } break;
      case 4: {  // convergence: fix sign, bubble into descending order
        if (s[k] <= 0.0) {
          s[k] = s[k] < 0.0 ? -s[k] : 0.0;
          for (std::size_t i = 0; i < n; ++i) v(i, k) = -v(i, k);
        }
        while (k < pp && s[k] < s[k + 1]) {
          std::swap(s[k], s[k + 1]);
          swap_columns(v, k, k + 1);
          swap_columns(u, k, k + 1);
          ++k;
        }
        --p;
      } break;
    }
  }
  return {std::move(u), std::move(s), std::move(v)};
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.empty()) throw DimensionError("svd of empty matrix");
  if (!a.all_finite()) throw std::invalid_argument("svd: non-finite entry");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdResult t = svd_tall(a.transposed());
  return {std::move(t.v), std::move(t.singular), std::move(t.u)};
}

Matrix random_orthogonal(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw DimensionError("random_orthogonal: d must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(d, d);
  for (double& x : g.data()) x = gauss(rng);
  return qr_decompose(g).q;
}

double orthogonality_error(const Matrix& w) {
  if (!w.square()) throw DimensionError("orthogonality_error requires a square matrix");
  Matrix gram = matmul_at(w, w);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
  return frobenius_norm(gram);
}

Matrix orthogonalize_step(const Matrix& w, double beta) {
  if (!w.square()) throw DimensionError("orthogonalize_step requires a square matrix");
  const Matrix cubic = matmul(matmul_bt(w, w), w);
  Matrix out(w.rows(), w.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = (1.0 + beta) * w.data()[i] - beta * cubic.data()[i];
  return out;
}

GradientCheckReport finite_difference_check(const ScalarFunction& f,
                                            std::span<const double> point,
                                            std::span<const double> analytic, double h) {
  if (point.size() != analytic.size())
    throw DimensionError("finite_difference_check: gradient length mismatch");
  std::vector<double> x(point.begin(), point.end());
  GradientCheckReport report;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel =
        std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    if (rel > report.max_relative_error || i == 0) {
      report.max_relative_error = std::max(report.max_relative_error, rel);
      report.worst_index = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
  }
  return report;
}

}  // namespace lexalign
