#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexalign/embeddings.hpp"
#include "lexalign/matrix.hpp"
#include "lexalign/rng.hpp"
#include "lexalign/similarity.hpp"

namespace lexalign {

inline constexpr double kProbabilityClamp = 1e-7;

// sigmoid(L3(lrelu(L2(lrelu(L1(x)))))) with inputs as rows.
struct DiscriminatorParams {
  Matrix w1;  // d x H
  std::vector<double> b1;
  Matrix w2;  // H x H
  std::vector<double> b2;
  Matrix w3;  // H x 1
  double b3 = 0.0;
  double leaky_slope = 0.2;

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

  // Flat view order: w1, b1, w2, b2, w3, b3.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  friend bool operator==(const DiscriminatorParams&, const DiscriminatorParams&) = default;
};

// All weights zero; the shape of a gradient buffer.
DiscriminatorParams zero_discriminator(std::size_t d, std::size_t hidden, double leaky_slope = 0.2);

// Weights and biases uniform in +-1/sqrt(fan_in).
DiscriminatorParams init_discriminator(std::size_t d, std::size_t hidden, double leaky_slope, Rng& rng);

// p -= lr * grad
void sgd_update(DiscriminatorParams& params, const DiscriminatorParams& grad, double lr);

// One probability per row, clamped to [eps, 1 - eps].
std::vector<double> disc_forward(const DiscriminatorParams& d, const Matrix& x);

struct DiscLossGrad {
  double loss = 0.0;
  DiscriminatorParams grad;
};

// -mean log D(fake) - mean log(1 - D(real)). Inputs are constants.
DiscLossGrad disc_loss_and_grad(const DiscriminatorParams& d, const Matrix& fake, const Matrix& real);

struct MapLossGrad {
  double loss = 0.0;
  Matrix grad;  // for chain[0] only
};

// fake = chain[k-1] * ... * chain[0] * s for each source row s.
// Loss -mean log(1 - D(fake)) - mean log D(real); the second term enters the
// value but has no gradient. Maps after the first are frozen.
MapLossGrad map_adv_loss_and_grad(std::span<const Matrix* const> chain, const DiscriminatorParams& d,
                                  const Matrix& source_batch, const Matrix& real_batch);
MapLossGrad map_adv_loss_and_grad(std::initializer_list<const Matrix*> chain,
                                  const DiscriminatorParams& d, const Matrix& source_batch,
                                  const Matrix& real_batch);

enum class WSchedule {
  EveryIteration,  // W is updated against D1 then D2 in each iteration
  Alternating,     // D1 on even iterations, D2 (through Z) on odd ones
};

struct TrainerConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t steps_per_epoch = 1000;
  std::size_t disc_steps = 1;
  double lr0 = 0.1;
  double lr_decay_per_epoch = 0.95;
  double beta = 0.01;
  std::size_t sample_vocab_limit = kUnlimited;
  std::size_t criterion_k = 10000;
  SimilarityMetric criterion_metric = SimilarityMetric::csls(10);
  double leaky_slope = 0.2;
  std::size_t hidden_dim = 2048;
  WSchedule w_schedule = WSchedule::EveryIteration;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double criterion = 0.0;
  double d1_loss = 0.0;
  double d2_loss = 0.0;
  double w_loss = 0.0;
  double z_loss = 0.0;
};

struct TrainingState {
  Matrix w;
  Matrix z;
  DiscriminatorParams d1;
  DiscriminatorParams d2;
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  double current_lr = 0.1;
  std::vector<EpochRecord> history;
  double initial_criterion = 0.0;
  double best_criterion = 0.0;
  std::size_t best_epoch = 0;
  Matrix best_w;
  Matrix best_z;
};

// W and Z from random_orthogonal on the "init-w" / "init-z" streams, the
// discriminators from the "init" stream.
TrainingState init_training_state(const TrainerConfig& config, std::size_t d);

struct IterationLosses {
  double d1 = 0.0;  // mean over disc_steps
  double d2 = 0.0;
  double w_vs_d1 = 0.0;  // NaN when the schedule skipped the step
  double w_vs_d2 = 0.0;
  double z = 0.0;
  double w_orthogonality_before = 0.0;  // around the final orthogonalization
  double w_orthogonality_after = 0.0;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Draws batch_size source indices, then batch_size target indices, each
// uniform over the first sample_vocab_limit rows; the batches are reused by
// every step of the iteration.
IterationLosses train_iteration(TrainingState& state, const TrainerConfig& config, const Matrix& source,
                                const Matrix& target, Rng& rng);

// Mean over the first k source words (mapped by W) of the score of their
// best target candidate. k is clamped to the source size; the CSLS
// neighborhoods are taken against those k queries.
double mean_similarity_criterion(const Matrix& w, const Matrix& source, const Matrix& target, std::size_t k,
                                 const SimilarityMetric& metric);

struct TrainResult {
  Matrix best_w;
  Matrix best_z;
  std::vector<EpochRecord> history;
  double initial_criterion = 0.0;
  double best_criterion = 0.0;
  std::size_t best_epoch = 0;  // 0 only when no epoch ran
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const IterationLosses&)> on_iteration;
};

// Runs config.epochs epochs and returns the checkpoint with the highest
// criterion. Throws NonFiniteLossError if a loss stops being finite.
TrainResult train(const TrainerConfig& config, const EmbeddingSpace& source, const EmbeddingSpace& target,
                  const TrainHooks& hooks = {});

struct MapCheckpoint {
  Matrix w;
  Matrix z;
};

class CheckpointFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const MapCheckpoint& checkpoint, const std::filesystem::path& path);
MapCheckpoint load_checkpoint(const std::filesystem::path& path);

void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

}  // namespace lexalign
