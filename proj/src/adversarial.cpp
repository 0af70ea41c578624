#include "lexalign/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "lexalign/numerics.hpp"

namespace lexalign {

namespace {

void add_bias_and_activate(Matrix& pre, std::span<const double> bias, Matrix& post, double slope) {
  post = Matrix(pre.rows(), pre.cols());
  for (std::size_t i = 0; i < pre.rows(); ++i) {
    auto a = pre.row(i);
    auto h = post.row(i);
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] += bias[j];
      h[j] = a[j] > 0.0 ? a[j] : slope * a[j];
    }
  }
}

struct Forward {
  Matrix a1, h1, a2, h2;
  std::vector<double> raw;  // unclamped sigmoid
};

Forward forward_pass(const DiscriminatorParams& d, const Matrix& x) {
  if (x.cols() != d.input_dim())
    throw DimensionError("discriminator expects inputs of width " + std::to_string(d.input_dim()) + ", got " +
                         std::to_string(x.cols()));
  Forward f;
  f.a1 = matmul(x, d.w1);
  add_bias_and_activate(f.a1, d.b1, f.h1, d.leaky_slope);
  f.a2 = matmul(f.h1, d.w2);
  add_bias_and_activate(f.a2, d.b2, f.h2, d.leaky_slope);
  f.raw.resize(x.rows());
  const auto w3 = d.w3.data();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = dot(f.h2.row(i), w3) + d.b3;
    f.raw[i] = 1.0 / (1.0 + std::exp(-z));
  }
  return f;
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

bool clamped(double p) { return p < kProbabilityClamp || p > 1.0 - kProbabilityClamp; }

void activation_backward(Matrix& grad, const Matrix& pre, double slope) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (pre.data()[i] <= 0.0) grad.data()[i] *= slope;
}

// Backpropagates dloss/dlogit. Accumulates parameter gradients into `grad`
// when non-null and returns dloss/dx when want_input is set.
Matrix backward_pass(const DiscriminatorParams& d, const Matrix& x, const Forward& f,
                     std::span<const double> dlogit, DiscriminatorParams* grad, bool want_input) {
  const std::size_t b = x.rows();
  const std::size_t h = d.hidden_dim();
  Matrix dh2(b, h);
  for (std::size_t i = 0; i < b; ++i) {
    auto row = dh2.row(i);
    for (std::size_t j = 0; j < h; ++j) row[j] = dlogit[i] * d.w3(j, 0);
  }
  if (grad) {
    for (std::size_t i = 0; i < b; ++i) {
      grad->b3 += dlogit[i];
      const auto h2 = f.h2.row(i);
      for (std::size_t j = 0; j < h; ++j) grad->w3(j, 0) += dlogit[i] * h2[j];
    }
  }
  activation_backward(dh2, f.a2, d.leaky_slope);  // now dL/da2
  if (grad) {
    grad->w2 += matmul_at(f.h1, dh2);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < h; ++j) grad->b2[j] += dh2(i, j);
  }
  Matrix dh1 = matmul_bt(dh2, d.w2);
  activation_backward(dh1, f.a1, d.leaky_slope);  // now dL/da1
  if (grad) {
    grad->w1 += matmul_at(x, dh1);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < h; ++j) grad->b1[j] += dh1(i, j);
  }
  if (!want_input) return {};
  return matmul_bt(dh1, d.w1);
}

void require_nonempty(const Matrix& m, const char* what) {
  if (m.rows() == 0) throw std::invalid_argument(std::string(what) + " batch is empty");
}

void check_finite(double value, const char* what, const TrainingState& state) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << what << " loss became non-finite at epoch " << state.epoch + 1 << ", iteration "
        << state.iteration + 1;
    throw NonFiniteLossError(msg.str());
  }
}

}  // namespace

std::size_t DiscriminatorParams::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + 1;
}

bool DiscriminatorParams::all_finite() const {
  auto finite = [](std::span<const double> v) {
    return std::ranges::all_of(v, [](double x) { return std::isfinite(x); });
  };
  return finite(w1.data()) && finite(b1) && finite(w2.data()) && finite(b2) && finite(w3.data()) &&
         std::isfinite(b3);
}

std::vector<double> DiscriminatorParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  out.insert(out.end(), w1.data().begin(), w1.data().end());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), w2.data().begin(), w2.data().end());
  out.insert(out.end(), b2.begin(), b2.end());
  out.insert(out.end(), w3.data().begin(), w3.data().end());
  out.push_back(b3);
  return out;
}

void DiscriminatorParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw DimensionError("discriminator parameter count mismatch");
  auto it = flat.begin();
  auto take = [&it](std::span<double> dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  take(w1.data());
  take(b1);
  take(w2.data());
  take(b2);
  take(w3.data());
  b3 = *it;
}

DiscriminatorParams zero_discriminator(std::size_t d, std::size_t hidden, double leaky_slope) {
  if (d == 0 || hidden == 0) throw DimensionError("discriminator needs d >= 1 and hidden >= 1");
  DiscriminatorParams p;
  p.w1 = Matrix(d, hidden);
  p.b1.assign(hidden, 0.0);
  p.w2 = Matrix(hidden, hidden);
  p.b2.assign(hidden, 0.0);
  p.w3 = Matrix(hidden, 1);
  p.leaky_slope = leaky_slope;
  return p;
}

DiscriminatorParams init_discriminator(std::size_t d, std::size_t hidden, double leaky_slope, Rng& rng) {
  DiscriminatorParams p = zero_discriminator(d, hidden, leaky_slope);
  auto fill = [&rng](std::span<double> v, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& x : v) x = u(rng);
  };
  fill(p.w1.data(), d);
  fill(p.b1, d);
  fill(p.w2.data(), hidden);
  fill(p.b2, hidden);
  fill(p.w3.data(), hidden);
  fill({&p.b3, 1}, hidden);
  return p;
}

void sgd_update(DiscriminatorParams& params, const DiscriminatorParams& grad, double lr) {
  auto step = [lr](std::span<double> p, std::span<const double> g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  };
  step(params.w1.data(), grad.w1.data());
  step(params.b1, grad.b1);
  step(params.w2.data(), grad.w2.data());
  step(params.b2, grad.b2);
  step(params.w3.data(), grad.w3.data());
  params.b3 -= lr * grad.b3;
}

std::vector<double> disc_forward(const DiscriminatorParams& d, const Matrix& x) {
  Forward f = forward_pass(d, x);
  for (double& p : f.raw) p = clamp_probability(p);
  return f.raw;
}

DiscLossGrad disc_loss_and_grad(const DiscriminatorParams& d, const Matrix& fake, const Matrix& real) {
  require_nonempty(fake, "fake");
  require_nonempty(real, "real");
  DiscLossGrad out{0.0, zero_discriminator(d.input_dim(), d.hidden_dim(), d.leaky_slope)};

  const Forward ff = forward_pass(d, fake);
  const double nf = static_cast<double>(fake.rows());
  std::vector<double> dlogit(fake.rows());
  double fake_term = 0.0;
  for (std::size_t i = 0; i < fake.rows(); ++i) {
    const double p = ff.raw[i];
    fake_term -= std::log(clamp_probability(p));
    dlogit[i] = clamped(p) ? 0.0 : (p - 1.0) / nf;
  }
  backward_pass(d, fake, ff, dlogit, &out.grad, false);

  const Forward fr = forward_pass(d, real);
  const double nr = static_cast<double>(real.rows());
  dlogit.assign(real.rows(), 0.0);
  double real_term = 0.0;
  for (std::size_t i = 0; i < real.rows(); ++i) {
    const double p = fr.raw[i];
    real_term -= std::log(1.0 - clamp_probability(p));
    dlogit[i] = clamped(p) ? 0.0 : p / nr;
  }
  backward_pass(d, real, fr, dlogit, &out.grad, false);

  out.loss = fake_term / nf + real_term / nr;
  return out;
}

MapLossGrad map_adv_loss_and_grad(std::span<const Matrix* const> chain, const DiscriminatorParams& d,
                                  const Matrix& source_batch, const Matrix& real_batch) {
  if (chain.empty() || chain.size() > 2) throw std::invalid_argument("map chain must hold one or two maps");
  require_nonempty(source_batch, "source");
  require_nonempty(real_batch, "real");
  for (const Matrix* m : chain)
    if (!m->square()) throw DimensionError("maps in the chain must be square");
  std::vector<Matrix> images{source_batch};
  for (const Matrix* m : chain) {
    if (m->cols() != images.back().cols()) throw DimensionError("map chain dimensions disagree");
    images.push_back(apply_map(*m, images.back()));
  }
  const Matrix& fake = images.back();

  const Forward ff = forward_pass(d, fake);
  const double nf = static_cast<double>(fake.rows());
  std::vector<double> dlogit(fake.rows());
  double fake_term = 0.0;
  for (std::size_t i = 0; i < fake.rows(); ++i) {
    const double p = ff.raw[i];
    fake_term -= std::log(1.0 - clamp_probability(p));
    dlogit[i] = clamped(p) ? 0.0 : p / nf;
  }
  Matrix dy = backward_pass(d, fake, ff, dlogit, nullptr, true);
  for (std::size_t k = chain.size(); k-- > 1;) dy = matmul(dy, *chain[k]);

  double real_term = 0.0;
  for (double p : disc_forward(d, real_batch)) real_term -= std::log(p);
  return {fake_term / nf + real_term / static_cast<double>(real_batch.rows()), matmul_at(dy, images[0])};
}

MapLossGrad map_adv_loss_and_grad(std::initializer_list<const Matrix*> chain, const DiscriminatorParams& d,
                                  const Matrix& source_batch, const Matrix& real_batch) {
  return map_adv_loss_and_grad(std::span<const Matrix* const>(chain.begin(), chain.size()), d, source_batch,
                               real_batch);
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw std::invalid_argument("trainer config: " + field + " " + rule);
  };
  if (batch_size == 0) fail("batch_size", "must be >= 1");
  if (steps_per_epoch == 0) fail("steps_per_epoch", "must be >= 1");
  if (disc_steps == 0) fail("disc_steps", "must be >= 1");
  if (sample_vocab_limit == 0) fail("sample_vocab_limit", "must be >= 1");
  if (criterion_k == 0) fail("criterion_k", "must be >= 1");
  if (hidden_dim == 0) fail("hidden_dim", "must be >= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) fail("lr0", "must be > 0");
  if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0)) fail("lr_decay_per_epoch", "must be in (0, 1]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail("beta", "must be >= 0");
  if (!std::isfinite(leaky_slope)) fail("leaky_slope", "must be finite");
  if (criterion_metric.is_csls() && criterion_metric.csls_t == 0) fail("criterion_metric", "CSLS needs t >= 1");
}

TrainingState init_training_state(const TrainerConfig& config, std::size_t d) {
  TrainingState s;
  s.w = random_orthogonal(d, stream_seed(config.seed, "init-w"));
  s.z = random_orthogonal(d, stream_seed(config.seed, "init-z"));
  Rng rng = make_stream(config.seed, "init");
  s.d1 = init_discriminator(d, config.hidden_dim, config.leaky_slope, rng);
  s.d2 = init_discriminator(d, config.hidden_dim, config.leaky_slope, rng);
  s.current_lr = config.lr0;
  s.best_w = s.w;
  s.best_z = s.z;
  return s;
}

IterationLosses train_iteration(TrainingState& state, const TrainerConfig& config, const Matrix& source,
                                const Matrix& target, Rng& rng) {
  if (source.cols() != state.w.cols() || target.cols() != state.w.cols())
    throw DimensionError("train_iteration: embedding width differs from the maps");
  if (source.rows() == 0 || target.rows() == 0) throw std::invalid_argument("train_iteration: empty space");
  const std::size_t b = config.batch_size;
  std::vector<std::size_t> si(b), ti(b);
  std::uniform_int_distribution<std::size_t> pick_s(0, std::min(config.sample_vocab_limit, source.rows()) - 1);
  std::uniform_int_distribution<std::size_t> pick_t(0, std::min(config.sample_vocab_limit, target.rows()) - 1);
  for (auto& i : si) i = pick_s(rng);
  for (auto& i : ti) i = pick_t(rng);
  const Matrix s = source.gather_rows(si);
  const Matrix t = target.gather_rows(ti);
  const double lr = state.current_lr;
  IterationLosses out;

  for (std::size_t k = 0; k < config.disc_steps; ++k) {
    const DiscLossGrad g = disc_loss_and_grad(state.d1, apply_map(state.w, s), t);
    check_finite(g.loss, "D1", state);
    sgd_update(state.d1, g.grad, lr);
    out.d1 += g.loss / static_cast<double>(config.disc_steps);
  }
  for (std::size_t k = 0; k < config.disc_steps; ++k) {
    const DiscLossGrad g = disc_loss_and_grad(state.d2, apply_map(state.z, apply_map(state.w, s)), s);
    check_finite(g.loss, "D2", state);
    sgd_update(state.d2, g.grad, lr);
    out.d2 += g.loss / static_cast<double>(config.disc_steps);
  }

  const bool alternate = config.w_schedule == WSchedule::Alternating;
  const bool even = state.iteration % 2 == 0;
  out.w_vs_d1 = out.w_vs_d2 = std::numeric_limits<double>::quiet_NaN();
  if (!alternate || even) {
    MapLossGrad g = map_adv_loss_and_grad({&state.w}, state.d1, s, t);
    check_finite(g.loss, "W (vs D1)", state);
    g.grad *= lr;
    state.w -= g.grad;
    out.w_vs_d1 = g.loss;
  }
  if (!alternate || !even) {
    MapLossGrad g = map_adv_loss_and_grad({&state.w, &state.z}, state.d2, s, s);
    check_finite(g.loss, "W (vs D2)", state);
    g.grad *= lr;
    state.w -= g.grad;
    out.w_vs_d2 = g.loss;
  }
  {
    MapLossGrad g = map_adv_loss_and_grad({&state.z}, state.d2, apply_map(state.w, s), s);
    check_finite(g.loss, "Z", state);
    g.grad *= lr;
    state.z -= g.grad;
    out.z = g.loss;
  }

  out.w_orthogonality_before = orthogonality_error(state.w);
  state.w = orthogonalize_step(state.w, config.beta);
  state.z = orthogonalize_step(state.z, config.beta);
  out.w_orthogonality_after = orthogonality_error(state.w);
  if (!state.w.all_finite() || !state.z.all_finite())
    throw NonFiniteLossError("mapping became non-finite at epoch " + std::to_string(state.epoch + 1) +
                             ", iteration " + std::to_string(state.iteration + 1));
  ++state.iteration;
  return out;
}

double mean_similarity_criterion(const Matrix& w, const Matrix& source, const Matrix& target, std::size_t k,
                                 const SimilarityMetric& metric) {
  const std::size_t m = std::min(k, source.rows());
  if (m == 0 || target.rows() == 0) throw std::invalid_argument("criterion needs nonempty spaces");
  const Matrix queries = apply_map(w, source.row_block(0, m));
  const NeighborLists best = topk(queries, target, metric, 1);
  double sum = 0.0;
  for (const auto& list : best) sum += list.front().score;
  return sum / static_cast<double>(m);
}

TrainResult train(const TrainerConfig& config, const EmbeddingSpace& source, const EmbeddingSpace& target,
                  const TrainHooks& hooks) {
  config.validate();
  if (source.dim() != target.dim()) throw DimensionError("source and target dimensions differ");
  TrainingState state = init_training_state(config, source.dim());
  Rng sampling = make_stream(config.seed, "sampling");
  const Matrix& s = source.vectors();
  const Matrix& t = target.vectors();
  auto criterion = [&](const Matrix& w) {
    return mean_similarity_criterion(w, s, t, config.criterion_k, config.criterion_metric);
  };
  state.initial_criterion = criterion(state.w);
  state.best_criterion = state.initial_criterion;

  for (std::size_t e = 0; e < config.epochs; ++e) {
    state.epoch = e;
    EpochRecord rec;
    rec.epoch = e + 1;
    std::size_t w_count = 0;
    for (std::size_t it = 0; it < config.steps_per_epoch; ++it) {
      const IterationLosses l = train_iteration(state, config, s, t, sampling);
      rec.d1_loss += l.d1;
      rec.d2_loss += l.d2;
      rec.z_loss += l.z;
      for (double v : {l.w_vs_d1, l.w_vs_d2})
        if (!std::isnan(v)) {
          rec.w_loss += v;
          ++w_count;
        }
      if (hooks.on_iteration) hooks.on_iteration(l);
    }
    const double steps = static_cast<double>(config.steps_per_epoch);
    rec.d1_loss /= steps;
    rec.d2_loss /= steps;
    rec.z_loss /= steps;
    rec.w_loss /= static_cast<double>(std::max<std::size_t>(w_count, 1));
    rec.criterion = criterion(state.w);
    if (state.history.empty() || rec.criterion > state.best_criterion) {
      state.best_criterion = rec.criterion;
      state.best_epoch = rec.epoch;
      state.best_w = state.w;
      state.best_z = state.z;
    }
    state.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    state.current_lr *= config.lr_decay_per_epoch;
  }
  return {state.best_w, state.best_z, state.history, state.initial_criterion, state.best_criterion,
          state.best_epoch};
}

void save_checkpoint(const MapCheckpoint& checkpoint, const std::filesystem::path& path) {
  const std::size_t d = checkpoint.w.rows();
  if (!checkpoint.w.square() || checkpoint.z.rows() != d || !checkpoint.z.square())
    throw DimensionError("checkpoint maps must both be d x d");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "LEXALIGN-MAP v1 " << d << '\n';
  char buf[32];
  auto write = [&](const Matrix& m) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << (j ? " " : "") << buf;
      }
      out << '\n';
    }
  };
  write(checkpoint.w);
  out << "Z\n";
  write(checkpoint.z);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

MapCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string magic, version;
  long long d = 0;
  if (!(in >> magic >> version >> d) || magic != "LEXALIGN-MAP" || version != "v1" || d <= 0)
    throw CheckpointFormatError(path.string() + ": missing 'LEXALIGN-MAP v1 <d>' header");
  const auto n = static_cast<std::size_t>(d);
  auto read = [&](const char* which) {
    Matrix m(n, n);
    for (double& x : m.data())
      if (!(in >> x)) throw CheckpointFormatError(path.string() + ": truncated " + which + " block");
    if (!m.all_finite()) throw CheckpointFormatError(path.string() + ": non-finite entry in " + which);
    return m;
  };
  MapCheckpoint c;
  c.w = read("W");
  std::string sep;
  if (!(in >> sep) || sep != "Z") throw CheckpointFormatError(path.string() + ": expected separator line 'Z'");
  c.z = read("Z");
  if (in >> sep) throw CheckpointFormatError(path.string() + ": trailing data after Z block");
  return c;
}

void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,criterion,d1_loss,d2_loss,w_loss,z_loss\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.criterion, r.d1_loss,
                  r.d2_loss, r.w_loss, r.z_loss);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace lexalign
