#include <doctest.h>

#include <cmath>
#include <random>

#include "lexalign/numerics.hpp"
#include "lexalign/procrustes.hpp"
#include "test_helpers.hpp"

using namespace lexalign;
using lexalign::testing::gaussian_matrix;
using lexalign::testing::naive_matmul;
using lexalign::testing::naive_transpose;

namespace {

// sum_i ||W s_i - t_i||^2
double residual(const Matrix& w, const Matrix& s, const Matrix& t) {
  Matrix diff = naive_matmul(s, naive_transpose(w));
  diff -= t;
  const double f = lexalign::testing::naive_fro(diff);
  return f * f;
}

Matrix givens(std::size_t d, std::size_t i, std::size_t j, double angle) {
  Matrix g = Matrix::identity(d);
  g(i, i) = std::cos(angle);
  g(j, j) = std::cos(angle);
  g(i, j) = -std::sin(angle);
  g(j, i) = std::sin(angle);
  return g;
}

}  // namespace

TEST_CASE("solve_procrustes closed forms") {
  SUBCASE("identical rows give the identity") {
    const Matrix s = gaussian_matrix(40, 6, 1);
    const ProcrustesSolution sol = solve_procrustes(s, s);
    CHECK(frobenius_distance(sol.map, Matrix::identity(6)) <= 1e-10);
    CHECK_FALSE(sol.degenerate);
  }
  SUBCASE("unit source rows against orthogonal target rows") {
    // Source row i is e_i and target row i is row i of Q, so the map must
    // send e_i to Q^T e_i: W = Q^T.
    const Matrix q = random_orthogonal(5, 3);
    const ProcrustesSolution sol = solve_procrustes(Matrix::identity(5), q);
    CHECK(frobenius_distance(sol.map, naive_transpose(q)) <= 1e-10);
    CHECK(frobenius_distance(apply_map(sol.map, Matrix::identity(5)), q) <= 1e-10);
  }
  SUBCASE("rows rotated by Q recover Q") {
    const Matrix q = random_orthogonal(5, 4);
    const Matrix s = gaussian_matrix(30, 5, 2);
    const ProcrustesSolution sol = solve_procrustes(s, apply_map(q, s));
    CHECK(frobenius_distance(sol.map, q) <= 1e-10);
  }
}

TEST_CASE("solve_procrustes with noisy targets beats random rotations") {
  const Matrix q = random_orthogonal(32, 10);
  const Matrix s = gaussian_matrix(500, 32, 11);
  Matrix t = apply_map(q, s);
  t += gaussian_matrix(500, 32, 12, 0.01);
  const ProcrustesSolution sol = solve_procrustes(s, t);
  CHECK(frobenius_distance(sol.map, q) <= 0.05);
  const double best = residual(sol.map, s, t);
  for (std::uint64_t k = 0; k < 1000; ++k) CHECK(best <= residual(random_orthogonal(32, 5000 + k), s, t));
}

TEST_CASE("solve_procrustes optimality on small instances") {
  std::mt19937_64 rng(5);
  for (std::uint64_t inst = 0; inst < 200; ++inst) {
    const std::size_t d = 1 + inst % 8;
    const std::size_t p = 1 + (inst * 7) % 50;
    const Matrix s = gaussian_matrix(p, d, 10 * inst);
    const Matrix t = gaussian_matrix(p, d, 10 * inst + 1);
    const ProcrustesSolution sol = solve_procrustes(s, t);
    CHECK(lexalign::testing::gram_defect(sol.map) <= 1e-9);
    const double best = residual(sol.map, s, t);
    const double slack = 1e-9 * std::max(1.0, best);
    bool beats_all = true;
    for (std::uint64_t k = 0; k < 1000; ++k)
      beats_all = beats_all && best <= residual(random_orthogonal(d, 77 * inst + k), s, t) + slack;
    CHECK(beats_all);
    // Local probe: small rotations on either side never help.
    for (std::size_t i = 0; i + 1 < d; ++i)
      for (double angle : {1e-3, -1e-3}) {
        const Matrix g = givens(d, i, i + 1, angle);
        CHECK(best <= residual(naive_matmul(sol.map, g), s, t) + slack);
        CHECK(best <= residual(naive_matmul(g, sol.map), s, t) + slack);
      }
  }
}

TEST_CASE("solve_procrustes stays orthogonal on degenerate input") {
  const Matrix s{{1, 2, 3}};
  const Matrix t{{-1, 0, 2}};
  const ProcrustesSolution sol = solve_procrustes(s, t);
  CHECK(sol.degenerate);
  CHECK(lexalign::testing::gram_defect(sol.map) <= 1e-9);
  const ProcrustesSolution zero = solve_procrustes(Matrix(2, 3), Matrix(2, 3));
  CHECK(zero.degenerate);
  CHECK(lexalign::testing::gram_defect(zero.map) <= 1e-9);
  CHECK_THROWS_AS(solve_procrustes(Matrix(2, 3), Matrix(3, 3)), DimensionError);
}

TEST_CASE("refine") {
  SUBCASE("noiseless pair with the true rotation is a fixed point") {
    const auto pair = generate_synthetic_pair({.seed = 1, .n = 500, .d = 8, .noise_sigma = 0.0});
    const RefineResult r = refine(pair.ground_truth_rotation, pair.source, pair.target,
                                  {.metric = SimilarityMetric::inner_product(), .query_limit = 300, .iterations = 2});
    CHECK_FALSE(r.aborted);
    CHECK(frobenius_distance(r.map, pair.ground_truth_rotation) <= 1e-8);
    CHECK(r.dictionary_sizes == std::vector<std::size_t>{300, 300});
    for (const auto& p : r.dictionary) CHECK(p.target == pair.target_position[p.source]);
  }
  SUBCASE("a perturbed start moves toward the truth") {
    const auto pair = generate_synthetic_pair({.seed = 2, .n = 1000, .d = 16, .noise_sigma = 0.05});
    const Matrix& q = pair.ground_truth_rotation;
    const Matrix start = q + 0.1 * gaussian_matrix(16, 16, 3);
    const RefineResult r = refine(start, pair.source, pair.target, {.query_limit = 1000});
    CHECK(frobenius_distance(r.map, q) < frobenius_distance(start, q));
    CHECK(lexalign::testing::gram_defect(r.map) <= 1e-9);
  }
  SUBCASE("dimension mismatch") {
    const auto pair = generate_synthetic_pair({.seed = 1, .n = 50, .d = 4});
    CHECK_THROWS_AS(refine(Matrix::identity(3), pair.source, pair.target), DimensionError);
  }
}

TEST_CASE("refine_inverse") {
  SUBCASE("fixed point at Q^T") {
    const auto pair = generate_synthetic_pair({.seed = 4, .n = 500, .d = 8, .noise_sigma = 0.0});
    const Matrix qt = naive_transpose(pair.ground_truth_rotation);
    const RefineResult r = refine_inverse(qt, pair.source, pair.target,
                                          {.metric = SimilarityMetric::inner_product(), .query_limit = 300});
    CHECK(frobenius_distance(r.map, qt) <= 1e-8);
    for (const auto& p : r.dictionary) CHECK(pair.target_position[p.target] == p.source);
  }
  SUBCASE("a perturbed start moves toward the truth") {
    const auto pair = generate_synthetic_pair({.seed = 5, .n = 1000, .d = 16, .noise_sigma = 0.05});
    const Matrix qt = naive_transpose(pair.ground_truth_rotation);
    const Matrix start = qt + 0.1 * gaussian_matrix(16, 16, 6);
    const RefineResult r = refine_inverse(start, pair.source, pair.target, {.query_limit = 1000});
    CHECK(frobenius_distance(r.map, qt) < frobenius_distance(start, qt));
  }
  SUBCASE("swapping arguments of refine reproduces it") {
    const auto pair = generate_synthetic_pair({.seed = 6, .n = 400, .d = 8, .noise_sigma = 0.02});
    const Matrix start = random_orthogonal(8, 1);
    const RefineOptions opts{.query_limit = 200, .iterations = 2};
    const RefineResult a = refine_inverse(start, pair.source, pair.target, opts);
    const RefineResult b = refine(start, pair.target, pair.source, opts);
    CHECK(a.map == b.map);
    CHECK(a.dictionary == b.dictionary);
  }
  SUBCASE("transposed forward dictionary") {
    const auto pair = generate_synthetic_pair({.seed = 7, .n = 400, .d = 8, .noise_sigma = 0.0});
    const RefineResult fwd = refine(pair.ground_truth_rotation, pair.source, pair.target,
                                    {.metric = SimilarityMetric::inner_product(), .query_limit = 200});
    const RefineResult inv = refine_inverse_from_dictionary(fwd.dictionary, pair.source, pair.target);
    CHECK(frobenius_distance(inv.map, naive_transpose(pair.ground_truth_rotation)) <= 1e-8);
    CHECK(std::ranges::is_sorted(inv.dictionary, {}, &InducedPair::source));
    CHECK_THROWS_AS(refine_inverse_from_dictionary({}, pair.source, pair.target), EmptyDictionaryError);
  }
}
