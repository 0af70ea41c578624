#include "lexalign/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lexalign {

namespace {

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw InputError(std::string("no ") + what + " given");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw InputError(std::string(what) + " '" + path.string() + "' does not exist or is not a file");
  std::ifstream probe(path);
  if (!probe) throw InputError(std::string(what) + " '" + path.string() + "' is not readable");
}

std::filesystem::path prepare_out(const PipelineConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir))
    throw InputError("cannot create output directory '" + config.out_dir.string() + "'");
  return config.out_dir;
}

MapCheckpoint load_maps(const PipelineConfig& config, std::size_t d) {
  require_file(config.checkpoint_path, "checkpoint");
  MapCheckpoint c = load_checkpoint(config.checkpoint_path);
  if (c.w.rows() != d)
    throw DimensionError("checkpoint is " + std::to_string(c.w.rows()) + "-dimensional but the embeddings are " +
                         std::to_string(d) + "-dimensional");
  return c;
}

TranslationDictionary evaluation_dictionary(const PipelineConfig& config, const Inputs& in) {
  if (!config.dict_path.empty()) {
    require_file(config.dict_path, "dictionary");
    return load_dictionary(config.dict_path);
  }
  if (in.dictionary) return *in.dictionary;
  throw InputError("no evaluation dictionary given (--dict)");
}

}  // namespace

Inputs load_inputs(const PipelineConfig& config) {
  const bool files = !config.source_path.empty() || !config.target_path.empty();
  if (files && config.synthetic) throw InputError("embedding files and --synthetic are mutually exclusive");
  if (config.synthetic) {
    SyntheticPair p = generate_synthetic_pair(config.synth);
    return {std::move(p.source), std::move(p.target), std::move(p.ground_truth_dictionary)};
  }
  require_file(config.source_path, "source embeddings");
  require_file(config.target_path, "target embeddings");
  LoadOptions opts;
  opts.max_vocab = config.max_vocab;
  opts.normalize = config.normalize;
  opts.lang = "src";
  EmbeddingSpace s = load_text_embeddings(config.source_path, opts);
  opts.lang = "tgt";
  EmbeddingSpace t = load_text_embeddings(config.target_path, opts);
  if (s.dim() != t.dim())
    throw DimensionError("source embeddings are " + std::to_string(s.dim()) + "-dimensional, target " +
                         std::to_string(t.dim()));
  return {std::move(s), std::move(t), std::nullopt};
}

SyntheticPair run_synth(const PipelineConfig& config, std::ostream& log) {
  const auto out = prepare_out(config);
  SyntheticPair p = generate_synthetic_pair(config.synth);
  save_text_embeddings(p.source, out / files::kSource);
  save_text_embeddings(p.target, out / files::kTarget);
  save_dictionary(p.ground_truth_dictionary, out / files::kDictionary);
  save_checkpoint({p.ground_truth_rotation, p.ground_truth_rotation.transposed()}, out / files::kRotation);
  if (!config.quiet)
    log << "synth: n=" << config.synth.n << " d=" << config.synth.d << " noise=" << config.synth.noise_sigma
        << " seed=" << config.synth.seed << " -> " << out.string() << '\n';
  return p;
}

TrainResult run_train(const PipelineConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const auto out = prepare_out(config);
  TrainHooks hooks;
  if (!config.quiet)
    hooks.on_epoch = [&log](const EpochRecord& r) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %3zu  criterion %.6f  d1 %.4f  d2 %.4f  w %.4f  z %.4f\n", r.epoch,
                    r.criterion, r.d1_loss, r.d2_loss, r.w_loss, r.z_loss);
      log << buf << std::flush;
    };
  TrainResult r = train(config.trainer, in.source, in.target, hooks);
  save_checkpoint({r.best_w, r.best_z}, out / files::kMaps);
  save_history_csv(r.history, out / files::kHistory);
  if (!config.quiet)
    log << "train: best epoch " << r.best_epoch << " criterion " << r.best_criterion << " (initial "
        << r.initial_criterion << ")\n";
  return r;
}

RefineOutput run_refine(const PipelineConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const MapCheckpoint maps = load_maps(config, in.source.dim());
  const auto out = prepare_out(config);
  const RefineOptions opts{config.metric, config.query_limit, config.iterations, config.target_limit};
  RefineOutput r{refine(maps.w, in.source, in.target, opts), {}};
  if (config.inverse_from_dictionary) {
    if (r.forward.aborted)
      r.inverse = {maps.z, {}, {}, true, "forward refinement aborted; no dictionary to transpose"};
    else
      r.inverse = refine_inverse_from_dictionary(r.forward.dictionary, in.source, in.target);
  } else {
    r.inverse = refine_inverse(maps.z, in.source, in.target, opts);
  }
  save_checkpoint({r.forward.map, r.inverse.map}, out / files::kRefined);
  save_induced_dictionary(r.forward.dictionary, in.source, in.target, out / files::kInducedForward);
  // Inverse pairs are (target, source).
  save_induced_dictionary(r.inverse.dictionary, in.target, in.source, out / files::kInducedInverse);
  if (!config.quiet) {
    auto sizes = [](const RefineResult& x) {
      std::string s;
      for (std::size_t n : x.dictionary_sizes) s += (s.empty() ? "" : ",") + std::to_string(n);
      return s;
    };
    log << "refine: forward dictionary sizes [" << sizes(r.forward) << "], inverse [" << sizes(r.inverse)
        << "]\n";
    for (const RefineResult* x : {&r.forward, &r.inverse})
      if (!x->diagnostic.empty()) log << "refine: " << x->diagnostic << '\n';
  }
  return r;
}

void run_translate(const PipelineConfig& config, std::istream& words, std::ostream& out) {
  const Inputs in = load_inputs(config);
  const MapCheckpoint maps = load_maps(config, in.source.dim());
  const bool forward = config.direction == Direction::Forward;
  const EmbeddingSpace& queries = forward ? in.source : in.target;
  const EmbeddingSpace& candidates = forward ? in.target : in.source;
  const Matrix& map = forward ? maps.w : maps.z;

  std::vector<std::string> tokens;
  auto read_all = [&tokens](std::istream& is) {
    for (std::string w; is >> w;) tokens.push_back(w);
  };
  if (config.words_path.empty()) {
    read_all(words);
  } else {
    require_file(config.words_path, "word list");
    std::ifstream f(config.words_path);
    read_all(f);
  }
  std::vector<std::size_t> rows;
  for (const auto& t : tokens)
    if (auto i = queries.index_of(t)) rows.push_back(*i);

  const std::size_t k = std::min(config.translate_k, candidates.size());
  NeighborLists lists;
  if (!rows.empty()) {
    const Matrix mapped = apply_map(map, queries.vectors());
    if (config.metric.is_csls()) {
      const NeighborhoodCache cache = build_neighborhood_cache(mapped, candidates.vectors(), config.metric.csls_t);
      lists = csls_topk(mapped.gather_rows(rows), candidates.vectors(), cache.select_queries(rows), k);
    } else {
      lists = knn_inner_product(mapped.gather_rows(rows), candidates.vectors(), k);
    }
  }
  std::size_t next = 0;
  char buf[64];
  for (const auto& t : tokens) {
    out << t;
    if (!queries.index_of(t)) {
      out << " <unknown>\n";
      continue;
    }
    for (const Neighbor& n : lists[next]) {
      std::snprintf(buf, sizeof buf, ":%.6f", n.score);
      out << ' ' << candidates.token(n.index) << buf;
    }
    out << '\n';
    ++next;
  }
}

EvalReport run_evaluate(const PipelineConfig& config, std::ostream& out) {
  const Inputs in = load_inputs(config);
  const MapCheckpoint maps = load_maps(config, in.source.dim());
  const TranslationDictionary dict = evaluation_dictionary(config, in);
  const auto dir = prepare_out(config);
  const bool forward = config.direction == Direction::Forward;
  EvalReport r = precision_at_k(forward ? maps.w : maps.z, config.direction, in.source, in.target, dict,
                                config.metric, config.ks, config.search_depth);
  const std::string stem = "report_" + direction_name(config.direction);
  {
    std::ofstream table(dir / (stem + ".txt"));
    write_report_table(r, table, config.error_limit);
    if (!table) throw std::runtime_error("write failed for " + (dir / (stem + ".txt")).string());
  }
  save_report_csv(r, dir / (stem + ".csv"));
  save_errors_csv(r, dir / (stem + "_errors.csv"));
  if (!config.quiet) write_report_table(r, out, config.error_limit);
  return r;
}

void run_export(const PipelineConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const MapCheckpoint maps = load_maps(config, in.source.dim());
  const auto dir = prepare_out(config);
  const Matrix id = Matrix::identity(in.source.dim());
  auto first = [&config](const EmbeddingSpace& s) {
    const auto r = frequency_slice(s, config.export_count);
    return std::vector<std::size_t>(r.begin(), r.end());
  };
  const std::vector<ExportPart> parts{{&in.source, &maps.w, first(in.source)},
                                      {&in.target, &id, first(in.target)}};
  export_vectors(parts, dir / files::kVectors);
  if (!config.quiet)
    log << "export: " << parts[0].rows.size() + parts[1].rows.size() << " rows -> "
        << (dir / files::kVectors).string() << '\n';
}

}  // namespace lexalign
