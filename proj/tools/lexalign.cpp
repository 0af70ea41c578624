// lexalign: unsupervised word translation between two embedding spaces.
//
//   lexalign synth    --n 2000 --d 16 --noise 0.01 --seed 7 --out run
//   lexalign train    --source run/source.vec --target run/target.vec --out run
//   lexalign refine   ... --checkpoint run/maps.txt
//   lexalign evaluate ... --checkpoint run/refined.txt --dict run/dictionary.txt
//   lexalign translate / export
//
// Every option may also come from a flat "key = value" file given with
// --config; command-line flags win.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "lexalign/pipeline.hpp"

using namespace lexalign;

namespace {

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInput = 3,
  kFormat = 4,
  kDimension = 5,
  kTraining = 6,
  kEvaluation = 7,
};

int fail(int code, const char* what, const std::string& message) {
  std::cerr << "lexalign: " << what << " error: " << message << '\n';
  return code;
}

std::size_t unlimited_if_zero(std::size_t v) { return v == 0 ? kUnlimited : v; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised bilingual lexicon induction with two-way adversarial mappings"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key = value file; flags on the command line take precedence");
  std::string dump_config;
  app.add_option("--dump-config", dump_config, "Write the effective configuration to this file")
      ->configurable(false);

  PipelineConfig cfg;
  std::uint64_t seed = 0;
  std::string source, target, dict, checkpoint, words, out = ".";
  std::string metric = "csls", criterion_metric = "csls", shape = "clustered", schedule = "every";
  std::string direction = "forward";
  std::size_t csls_t = 10, criterion_t = 10, max_vocab = 0, sample_limit = 0, target_limit = 0;
  bool no_shuffle = false, no_normalize = false;

  app.add_option("--seed", seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_flag("--quiet", cfg.quiet, "Suppress progress output");

  auto* in = "Inputs";
  app.add_option("--source", source, "Source embeddings (word2vec text)")->group(in);
  app.add_option("--target", target, "Target embeddings (word2vec text)")->group(in);
  app.add_flag("--synthetic", cfg.synthetic, "Generate the pair in memory instead of reading files")->group(in);
  app.add_option("--dict", dict, "Bilingual dictionary for evaluation")->group(in);
  app.add_option("--checkpoint", checkpoint, "Map checkpoint read by refine/translate/evaluate/export")->group(in);
  app.add_option("--max-vocab", max_vocab, "Keep only the most frequent words (0 = all)")->capture_default_str()->group(in);
  app.add_flag("--no-normalize", no_normalize, "Do not unit-normalize loaded vectors")->group(in);

  auto* sy = "Synthetic data";
  app.add_option("--n", cfg.synth.n, "Vocabulary size")->capture_default_str()->group(sy);
  app.add_option("--d", cfg.synth.d, "Dimension")->capture_default_str()->group(sy);
  app.add_option("--noise", cfg.synth.noise_sigma, "Target noise sd")->capture_default_str()->group(sy);
  app.add_option("--shape", shape, "Source distribution")
      ->check(CLI::IsMember({"clustered", "isotropic"}))
      ->capture_default_str()
      ->group(sy);
  app.add_option("--clusters", cfg.synth.clusters, "Mixture components")->capture_default_str()->group(sy);
  app.add_option("--spread", cfg.synth.cluster_spread, "Within-component sd")->capture_default_str()->group(sy);
  app.add_flag("--no-shuffle", no_shuffle, "Keep target rows aligned with source rows")->group(sy);

  auto* tr = "Adversarial training";
  TrainerConfig& t = cfg.trainer;
  app.add_option("--epochs", t.epochs)->capture_default_str()->group(tr);
  app.add_option("--steps", t.steps_per_epoch, "Iterations per epoch")->capture_default_str()->group(tr);
  app.add_option("--batch-size", t.batch_size)->capture_default_str()->group(tr);
  app.add_option("--disc-steps", t.disc_steps, "Discriminator updates per iteration")
      ->capture_default_str()
      ->group(tr);
  app.add_option("--lr", t.lr0, "Initial SGD learning rate")->capture_default_str()->group(tr);
  app.add_option("--lr-decay", t.lr_decay_per_epoch, "Factor applied after each epoch")
      ->capture_default_str()
      ->group(tr);
  app.add_option("--beta", t.beta, "Orthogonalization coefficient")->capture_default_str()->group(tr);
  app.add_option("--hidden", t.hidden_dim, "Discriminator hidden width")->capture_default_str()->group(tr);
  app.add_option("--leaky-slope", t.leaky_slope)->capture_default_str()->group(tr);
  app.add_option("--sample-limit", sample_limit, "Sample batches from the most frequent words (0 = all)")
      ->capture_default_str()
      ->group(tr);
  app.add_option("--criterion-k", t.criterion_k, "Source words scored by the selection criterion")
      ->capture_default_str()
      ->group(tr);
  app.add_option("--criterion-metric", criterion_metric)
      ->check(CLI::IsMember({"ip", "csls"}))
      ->capture_default_str()
      ->group(tr);
  app.add_option("--criterion-csls-t", criterion_t)->capture_default_str()->group(tr);
  app.add_option("--w-schedule", schedule, "every: W meets D1 and D2 each iteration; alternating: one per iteration")
      ->check(CLI::IsMember({"every", "alternating"}))
      ->capture_default_str()
      ->group(tr);

  auto* rs = "Retrieval and refinement";
  app.add_option("--metric", metric)->check(CLI::IsMember({"ip", "csls"}))->capture_default_str()->group(rs);
  app.add_option("--csls-t", csls_t, "CSLS neighborhood size")->capture_default_str()->group(rs);
  app.add_option("--query-limit", cfg.query_limit, "Most frequent words used as refinement queries")
      ->capture_default_str()
      ->group(rs);
  app.add_option("--iterations", cfg.iterations, "Refinement passes")->capture_default_str()->group(rs);
  app.add_option("--target-limit", target_limit, "Restrict refinement candidates (0 = all)")
      ->capture_default_str()
      ->group(rs);
  app.add_flag("--inverse-from-dict", cfg.inverse_from_dictionary,
               "Refine Z on the transposed forward dictionary instead of re-inducing one")
      ->group(rs);
  app.add_option("--direction", direction, "forward uses W, inverse uses Z")
      ->check(CLI::IsMember({"forward", "inverse"}))
      ->capture_default_str()
      ->group(rs);
  app.add_option("--k", cfg.ks, "Precision cutoffs")->capture_default_str()->group(rs);
  app.add_option("--depth", cfg.search_depth, "Rank search depth for error analysis")
      ->capture_default_str()
      ->group(rs);
  app.add_option("--errors", cfg.error_limit, "Error records shown in the table")->capture_default_str()->group(rs);
  app.add_option("--topk", cfg.translate_k, "Candidates printed by translate")->capture_default_str()->group(rs);
  app.add_option("--words", words, "Word list for translate (default: stdin)")->group(rs);
  app.add_option("--export-count", cfg.export_count, "Words exported per language")->capture_default_str()->group(rs);

  auto* c_synth = app.add_subcommand("synth", "Write a synthetic embedding pair, dictionary and rotation");
  auto* c_train = app.add_subcommand("train", "Adversarial training of W and Z");
  auto* c_refine = app.add_subcommand("refine", "Mutual-NN induction plus Procrustes on a checkpoint");
  auto* c_translate = app.add_subcommand("translate", "Print top-k translations of words");
  auto* c_evaluate = app.add_subcommand("evaluate", "P@k against a dictionary");
  auto* c_export = app.add_subcommand("export", "Write original and mapped vectors as CSV");
  for (auto* c : {c_synth, c_train, c_refine, c_translate, c_evaluate, c_export}) c->configurable(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  cfg.synth.seed = seed;
  cfg.trainer.seed = seed;
  cfg.synth.shape = shape == "isotropic" ? SourceShape::Isotropic : SourceShape::Clustered;
  cfg.synth.shuffle_target = !no_shuffle;
  cfg.normalize = !no_normalize;
  cfg.source_path = source;
  cfg.target_path = target;
  cfg.dict_path = dict;
  cfg.checkpoint_path = checkpoint;
  cfg.words_path = words;
  cfg.out_dir = out;
  cfg.max_vocab = unlimited_if_zero(max_vocab);
  cfg.target_limit = unlimited_if_zero(target_limit);
  t.sample_vocab_limit = unlimited_if_zero(sample_limit);
  t.w_schedule = schedule == "alternating" ? WSchedule::Alternating : WSchedule::EveryIteration;
  try {
    cfg.metric = parse_metric_kind(metric) == SimilarityMetric::Kind::Csls ? SimilarityMetric::csls(csls_t)
                                                                           : SimilarityMetric::inner_product();
    t.criterion_metric = parse_metric_kind(criterion_metric) == SimilarityMetric::Kind::Csls
                             ? SimilarityMetric::csls(criterion_t)
                             : SimilarityMetric::inner_product();
    cfg.direction = parse_direction(direction);
    t.validate();
    if (cfg.metric.is_csls() && csls_t == 0) throw std::invalid_argument("--csls-t must be >= 1");
    if (cfg.query_limit == 0) throw std::invalid_argument("--query-limit must be >= 1");
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "usage", e.what());
  }

  if (!dump_config.empty()) {
    std::ofstream f(dump_config);
    f << app.config_to_str(true, false);
    if (!f) return fail(kInput, "input", "cannot write " + dump_config);
  }

  try {
    if (c_synth->parsed()) run_synth(cfg, std::cerr);
    if (c_train->parsed()) run_train(cfg, std::cerr);
    if (c_refine->parsed()) run_refine(cfg, std::cerr);
    if (c_translate->parsed()) run_translate(cfg, std::cin, std::cout);
    if (c_evaluate->parsed()) run_evaluate(cfg, std::cout);
    if (c_export->parsed()) run_export(cfg, std::cerr);
  } catch (const InputError& e) {
    return fail(kInput, "input", e.what());
  } catch (const EmbeddingFormatError& e) {
    return fail(kFormat, "format", e.what());
  } catch (const DictionaryError& e) {
    return fail(kFormat, "format", e.what());
  } catch (const CheckpointFormatError& e) {
    return fail(kFormat, "format", e.what());
  } catch (const DimensionError& e) {
    return fail(kDimension, "dimension", e.what());
  } catch (const NonFiniteLossError& e) {
    return fail(kTraining, "training", e.what());
  } catch (const EvaluationError& e) {
    return fail(kEvaluation, "evaluation", e.what());
  } catch (const EmptyDictionaryError& e) {
    return fail(kEvaluation, "evaluation", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "runtime", e.what());
  }
  return kOk;
}
