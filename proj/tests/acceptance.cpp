// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lexalign/adversarial.hpp"
#include "lexalign/evaluation.hpp"
#include "lexalign/numerics.hpp"
#include "lexalign/procrustes.hpp"
#include "test_helpers.hpp"

using namespace lexalign;
using lexalign::testing::gaussian_matrix;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ----------------------------------------------------------------------------

void procrustes_exactness() {
  const auto t0 = Clock::now();
  double worst_distance = 0.0;
  std::size_t beaten = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pair = generate_synthetic_pair(
        {.seed = seed, .n = 500, .d = 32, .noise_sigma = 0.0, .shuffle_target = false, .normalize = true});
    const Matrix& s = pair.source.vectors();
    const Matrix& t = pair.target.vectors();
    const Matrix w = solve_procrustes(s, t).map;
    worst_distance = std::max(worst_distance, frobenius_distance(w, pair.ground_truth_rotation));
    // For orthogonal R: ||S R^T - T||^2 = ||S||^2 + ||T||^2 - 2 <R, T^T S>.
    const Matrix m = matmul_at(t, s);
    const double base = std::pow(frobenius_norm(s), 2) + std::pow(frobenius_norm(t), 2);
    auto residual = [&](const Matrix& r) {
      double inner = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) inner += r.data()[i] * m.data()[i];
      return base - 2.0 * inner;
    };
    const double best = residual(w);
    for (std::uint64_t k = 0; k < 1000; ++k)
      if (residual(random_orthogonal(32, 1'000'000 * (seed + 1) + k)) < best) ++beaten;
  }
  const double secs = seconds_since(t0);
  report(1, worst_distance <= 1e-8 && beaten == 0 && secs < 5.0,
         "Procrustes recovers the rotation exactly and beats Haar samples",
         fmt("max |W-Q|_F = %.2e, Haar samples better = %zu / 20000, %.2f s", worst_distance, beaten, secs));
}

void orthogonalization() {
  const auto t0 = Clock::now();
  bool monotone = true;
  std::size_t worst_steps = 0;
  double worst_final = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix w = random_orthogonal(32, seed) + gaussian_matrix(32, 32, 100 + seed, 0.01);
    double err = orthogonality_error(w);
    std::size_t steps = 0;
    while (err >= 1e-6 && steps < 2000) {
      w = orthogonalize_step(w, 0.01);
      const double next = orthogonality_error(w);
      if (next > err) monotone = false;
      err = next;
      ++steps;
    }
    worst_steps = std::max(worst_steps, steps);
    worst_final = std::max(worst_final, err);
  }
  const double secs = seconds_since(t0);
  report(2, monotone && worst_final < 1e-6 && secs < 5.0, "orthogonalization converges monotonically",
         fmt("monotone=%s, worst final error %.2e after at most %zu steps, %.2f s", monotone ? "yes" : "no",
             worst_final, worst_steps, secs));
}

void csls_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(10, 200);
  const std::size_t ts[] = {1, 3, 5, 10};
  double worst = 0.0;
  for (std::size_t inst = 0; inst < 50; ++inst) {
    const std::size_t m = size(rng), n = size(rng), d = 2 + inst % 15;
    const std::size_t t = ts[inst % 4];
    const Matrix q = lexalign::testing::naive_rows_normalized(gaussian_matrix(m, d, 3 * inst));
    const Matrix y = lexalign::testing::naive_rows_normalized(gaussian_matrix(n, d, 3 * inst + 1));
    const Matrix oracle = lexalign::testing::brute_force_csls(q, y, t);
    const std::size_t k = std::min<std::size_t>(n, 10);
    const NeighborLists got = csls_topk(q, y, t, k);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row(oracle.row(i).begin(), oracle.row(i).end());
      std::ranges::sort(row, std::greater<>());
      for (std::size_t r = 0; r < k; ++r) {
        worst = std::max(worst, std::abs(got[i][r].score - row[r]));
        worst = std::max(worst, std::abs(got[i][r].score - oracle(i, got[i][r].index)));
      }
    }
  }
  const double secs = seconds_since(t0);
  report(3, worst <= 1e-12 && secs < 10.0, "CSLS matches the brute-force formula",
         fmt("50 instances, max score deviation %.2e, %.2f s", worst, secs));
}

void gradient_fidelity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  const std::size_t d = 4, h = 8, b = 5;
  auto as_matrix = [d](std::span<const double> p) {
    Matrix m(d, d);
    std::copy(p.begin(), p.end(), m.data().begin());
    return m;
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const DiscriminatorParams disc = init_discriminator(d, h, 0.2, rng);
    const Matrix w = random_orthogonal(d, 10 + seed) + gaussian_matrix(d, d, 20 + seed, 0.1);
    const Matrix z = random_orthogonal(d, 30 + seed) + gaussian_matrix(d, d, 40 + seed, 0.1);
    const Matrix s = gaussian_matrix(b, d, 50 + seed);
    const Matrix t = gaussian_matrix(b, d, 60 + seed);
    const Matrix ws = apply_map(w, s);

    // D1 on (Ws, t) and D2 on (ZWs, s).
    for (const auto& [fake, real] : {std::pair{ws, t}, std::pair{apply_map(z, ws), s}}) {
      const auto g = disc_loss_and_grad(disc, fake, real);
      auto f = [&](std::span<const double> p) {
        DiscriminatorParams e = disc;
        e.assign(p);
        return disc_loss_and_grad(e, fake, real).loss;
      };
      worst = std::max(worst, finite_difference_check(f, disc.flatten(), g.grad.flatten()).max_relative_error);
    }
    // W vs D1.
    {
      const auto g = map_adv_loss_and_grad({&w}, disc, s, t);
      auto f = [&](std::span<const double> p) {
        const Matrix m = as_matrix(p);
        return map_adv_loss_and_grad({&m}, disc, s, t).loss;
      };
      worst = std::max(worst, finite_difference_check(f, w.data(), g.grad.data()).max_relative_error);
    }
    // W vs D2 through a frozen Z.
    {
      const auto g = map_adv_loss_and_grad({&w, &z}, disc, s, s);
      auto f = [&](std::span<const double> p) {
        const Matrix m = as_matrix(p);
        return map_adv_loss_and_grad({&m, &z}, disc, s, s).loss;
      };
      worst = std::max(worst, finite_difference_check(f, w.data(), g.grad.data()).max_relative_error);
    }
    // Z vs D2 on constant W-images.
    {
      const auto g = map_adv_loss_and_grad({&z}, disc, ws, s);
      auto f = [&](std::span<const double> p) {
        const Matrix m = as_matrix(p);
        return map_adv_loss_and_grad({&m}, disc, ws, s).loss;
      };
      worst = std::max(worst, finite_difference_check(f, z.data(), g.grad.data()).max_relative_error);
    }
  }
  const double secs = seconds_since(t0);
  report(4, worst <= 1e-4 && secs < 30.0, "analytic gradients match central differences",
         fmt("max relative error %.2e over 20 seeds, %.2f s", worst, secs));
}

// ----------------------------------------------------------------------------
// Desk-scale end-to-end runs shared by criteria 5-8.

TrainerConfig desk_trainer(std::uint64_t seed) {
  TrainerConfig c;
  c.seed = seed;
  c.epochs = 10;
  c.steps_per_epoch = 1000;
  c.batch_size = 32;
  c.disc_steps = 1;
  c.hidden_dim = 64;
  c.criterion_k = 10000;
  return c;
}

RefineOptions desk_refine(std::size_t query_limit) {
  RefineOptions o;
  o.metric = SimilarityMetric::csls(10);
  o.query_limit = query_limit;
  o.iterations = 5;
  return o;
}

struct DeskRun {
  std::uint64_t seed = 0;
  TrainResult trained;
  double p1_forward = 0.0;
  double p1_inverse = 0.0;
  double adv_csls = 0.0;
  double adv_ip = 0.0;
  double refined_at[3] = {0.0, 0.0, 0.0};  // query_limit 50, 1000, 2000
  double reloaded_criterion = 0.0;
  double seconds = 0.0;
};

const std::size_t kDeskSeeds = 5;
const std::size_t kQueryLimits[3] = {50, 1000, 2000};

DeskRun desk_run(std::uint64_t seed) {
  const auto t0 = Clock::now();
  DeskRun run;
  run.seed = seed;
  const auto pair = generate_synthetic_pair(
      {.seed = seed, .n = 2000, .d = 16, .noise_sigma = 0.01, .shuffle_target = true, .normalize = true});
  const TranslationDictionary& dict = pair.ground_truth_dictionary;
  const std::vector<std::size_t> k1{1};
  auto p1 = [&](const Matrix& map, Direction dir, const SimilarityMetric& metric) {
    return precision_at_k(map, dir, pair.source, pair.target, dict, metric, k1).p_at.at(1);
  };

  const TrainerConfig config = desk_trainer(seed);
  run.trained = train(config, pair.source, pair.target);
  const TrainResult& r = run.trained;

  run.adv_csls = p1(r.best_w, Direction::Forward, SimilarityMetric::csls(10));
  run.adv_ip = p1(r.best_w, Direction::Forward, SimilarityMetric::inner_product());

  const RefineResult fw = refine(r.best_w, pair.source, pair.target, desk_refine(10000));
  const RefineResult inv = refine_inverse(r.best_z, pair.source, pair.target, desk_refine(10000));
  run.p1_forward = p1(fw.map, Direction::Forward, SimilarityMetric::csls(10));
  run.p1_inverse = p1(inv.map, Direction::Inverse, SimilarityMetric::csls(10));

  for (std::size_t i = 0; i < 3; ++i)
    run.refined_at[i] = p1(refine(r.best_w, pair.source, pair.target, desk_refine(kQueryLimits[i])).map,
                           Direction::Forward, SimilarityMetric::csls(10));

  const auto path = std::filesystem::temp_directory_path() / ("lexalign_accept_" + std::to_string(seed) + ".map");
  save_checkpoint({r.best_w, r.best_z}, path);
  const MapCheckpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  run.reloaded_criterion = mean_similarity_criterion(back.w, pair.source.vectors(), pair.target.vectors(),
                                                     config.criterion_k, config.criterion_metric);
  run.seconds = seconds_since(t0);
  std::printf("  seed %llu: best epoch %zu, criterion %.4f -> %.4f, adversarial P@1 csls %.1f ip %.1f, "
              "refined P@1 W %.1f Z %.1f, query_limit 50/1000/2000 -> %.1f/%.1f/%.1f, %.1f s\n",
              static_cast<unsigned long long>(seed), r.best_epoch, r.initial_criterion, r.best_criterion,
              run.adv_csls, run.adv_ip, run.p1_forward, run.p1_inverse, run.refined_at[0], run.refined_at[1],
              run.refined_at[2], run.seconds);
  std::fflush(stdout);
  return run;
}

void desk_criteria() {
  const auto t0 = Clock::now();
  std::vector<DeskRun> runs;
  for (std::uint64_t seed = 0; seed < kDeskSeeds; ++seed) runs.push_back(desk_run(seed));
  const double secs = seconds_since(t0);

  std::size_t recovered = 0, ordered = 0;
  for (const auto& r : runs) {
    recovered += r.p1_forward >= 95.0 && r.p1_inverse >= 95.0;
    ordered += r.adv_csls >= r.adv_ip;
  }
  report(5, recovered >= 4 && secs <= 600.0, "adversarial training plus refinement recovers both directions",
         fmt("%zu / %zu seeds at P@1 >= 95%% both ways, %.1f s", recovered, runs.size(), secs));
  report(6, ordered >= 4, "CSLS retrieval at least as accurate as inner product before refinement",
         fmt("%zu / %zu seeds", ordered, runs.size()));

  double mean[3] = {0.0, 0.0, 0.0};
  for (const auto& r : runs)
    for (std::size_t i = 0; i < 3; ++i) mean[i] += r.refined_at[i] / static_cast<double>(runs.size());
  report(7, mean[0] < mean[1] && std::abs(mean[1] - mean[2]) <= 2.0,
         "refinement needs enough queries, then plateaus",
         fmt("mean P@1 at query_limit 50/1000/2000 = %.2f/%.2f/%.2f", mean[0], mean[1], mean[2]));

  double worst_reload = 0.0;
  std::size_t below_first = 0;
  for (const auto& r : runs) {
    worst_reload = std::max(worst_reload, std::abs(r.reloaded_criterion - r.trained.best_criterion));
    if (r.trained.history.empty() || r.trained.best_criterion < r.trained.history.front().criterion)
      ++below_first;
  }
  report(8, worst_reload <= 1e-9 && below_first == 0, "checkpoint reproduces its criterion and never regresses",
         fmt("max |reloaded - recorded| = %.2e, runs below epoch 1 = %zu", worst_reload, below_first));
}

}  // namespace

int main() {
  procrustes_exactness();
  orthogonalization();
  csls_oracle();
  gradient_fidelity();
  desk_criteria();
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
