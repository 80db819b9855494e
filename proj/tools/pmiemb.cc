// pmiemb command-line driver: each pipeline stage as a subcommand, plus the
// full experiment runner.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmiemb/corpus.h"
#include "pmiemb/embed.h"
#include "pmiemb/error.h"
#include "pmiemb/eval.h"
#include "pmiemb/factorize.h"
#include "pmiemb/logging.h"
#include "pmiemb/pipeline.h"
#include "pmiemb/ppmi.h"
#include "pmiemb/sparse_matrix.h"
#include "pmiemb/stats.h"

namespace fs = std::filesystem;
using namespace pmiemb;

namespace {

struct Options {
  std::string corpus, out, ppmi, vocab, factors, embeddings, dataset, scores, config, task;
  std::string method;
  std::vector<std::string> methods;
  std::vector<std::size_t> dims;
  std::size_t window = 2, min_count = 300, dim = 0, jobs = 1, splits = 0, replicates = 0;
  std::uint64_t seed = 0;
  bool emit_plot_data = false, verbose = false;
};

int cmd_build_ppmi(const Options &o) {
  fs::create_directories(o.out);
  const auto tokens = tokenize_file(o.corpus);
  const auto vocab = build_vocabulary(tokens, o.min_count);
  const auto counts = count_cooccurrences(tokens, vocab, o.window, o.jobs);
  const auto ppmi = compute_ppmi(counts);
  const fs::path dir(o.out);
  save_vocabulary(vocab, (dir / "vocab.tsv").string());
  save_counts(counts, (dir / "counts.txt").string());
  save_matrix_binary(ppmi, (dir / "ppmi.bin").string());
  log_event(LogLevel::kInfo, "ppmi_built",
            {{"tokens", std::to_string(tokens.size())},
             {"vocab", std::to_string(vocab.size())},
             {"nnz", std::to_string(ppmi.nnz())},
             {"out", o.out}});
  return 0;
}

int cmd_factorize(const Options &o) {
  const auto a = load_matrix(o.ppmi);
  std::string kind = o.method;
  if (kind == "qr_q" || kind == "qr_r") kind = "qr";
  FactorizationResult f;
  FactorMetadata meta{kind, o.dim, o.seed, 0, 0.0};
  if (kind == "svd") {
    SvdOptions opts;
    opts.seed = o.seed;
    auto svd = truncated_svd(a, o.dim, opts);
    meta.iterations = svd.iterations;
    f = std::move(svd);
  } else if (kind == "qr") {
    f = pivoted_qr(a, o.dim);
  } else if (kind == "nmf") {
    NmfOptions opts;
    opts.svd.seed = o.seed;
    auto w = nmf(a, o.dim, opts);
    meta.iterations = w.iterations;
    meta.final_objective = w.objective_trace.back();
    f = std::move(w);
  } else {
    throw ArgumentError("unknown method '" + o.method + "' (svd, qr, nmf)");
  }
  if (const auto parent = fs::path(o.out).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  save_factors(f, meta, o.out);
  log_event(LogLevel::kInfo, "factorized",
            {{"method", kind},
             {"dim", std::to_string(o.dim)},
             {"error", std::to_string(approximation_error(a, f))},
             {"out", o.out}});
  return 0;
}

int cmd_embed(const Options &o) {
  auto vocab = std::make_shared<const Vocabulary>(load_vocabulary(o.vocab));
  FactorMetadata meta;
  const auto f = load_factors(o.factors, &meta);
  auto e = extract_embeddings(f, parse_embedding_method(o.method), vocab);
  e.metadata().seed = meta.seed;
  if (const auto parent = fs::path(o.out).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  save_embeddings(e, o.out);
  log_event(LogLevel::kInfo, "embedded",
            {{"method", o.method}, {"rows", std::to_string(e.size())},
             {"dim", std::to_string(e.d())}, {"out", o.out}});
  return 0;
}

int cmd_eval(const Options &o) {
  const auto e = load_embeddings(o.embeddings);
  if (o.task == "similarity") {
    const auto ds = load_similarity_dataset(resolve_dataset_path(o.dataset));
    const auto r = eval_similarity(e, ds);
    std::printf("task=similarity score=%.6f used=%zu skipped_oov=%zu\n", r.score, r.n_used,
                r.n_skipped_oov);
  } else if (o.task == "analogy") {
    const auto ds = load_analogy_dataset(resolve_dataset_path(o.dataset));
    const auto r = eval_analogy(e, ds);
    std::printf("task=analogy score=%.6f used=%zu skipped_oov=%zu\n", r.score, r.n_used,
                r.n_skipped_oov);
    for (const auto &[name, s] : r.sections) {
      std::printf("section=\"%s\" correct=%zu used=%zu skipped_oov=%zu\n", name.c_str(),
                  s.correct, s.used, s.skipped_oov);
    }
    const auto neg = negativity_check(e, ds);
    std::printf("negativity_fraction=%.6f triplets=%zu\n", neg.fraction, neg.used);
  } else {
    throw ArgumentError("task must be similarity or analogy");
  }
  return 0;
}

int cmd_anova(const Options &o) {
  std::vector<std::string> tasks;
  if (o.task.empty() || o.task == "both") {
    tasks = {"similarity", "analogy"};
  } else {
    tasks = {o.task};
  }
  for (const auto &task : tasks) {
    const auto report = run_anova(o.scores, task, o.out);
    std::ifstream text(report.text_path);
    std::cout << text.rdbuf() << '\n';
  }
  return 0;
}

int cmd_experiment(const Options &o, const CLI::App &sub) {
  ExperimentConfig c;
  if (!o.config.empty()) c = load_experiment_config(o.config);
  // Flags override the file.
  if (sub.count("--corpus")) c.corpus_path = o.corpus;
  if (sub.count("--window")) c.window = o.window;
  if (sub.count("--min-count")) c.min_count = o.min_count;
  if (sub.count("--method")) {
    c.methods.clear();
    for (const auto &m : o.methods) c.methods.push_back(parse_embedding_method(m));
  }
  if (sub.count("--dim")) c.dimensions = o.dims;
  if (sub.count("--seed")) c.seed = o.seed;
  if (sub.count("--out")) c.output_dir = o.out;
  if (sub.count("--jobs")) c.jobs = o.jobs;
  if (sub.count("--splits")) c.splits = o.splits;
  if (sub.count("--replicates")) c.replicates_per_cell = o.replicates;
  if (sub.count("--similarity")) c.similarity_dataset = o.dataset;
  if (sub.count("--analogy")) c.analogy_dataset = o.vocab;
  if (o.emit_plot_data) c.emit_plot_data = true;

  const auto result = run_pipeline(c);
  for (const auto &f : result.failures) {
    std::fprintf(stderr, "missing cell: method=%s dim=%zu replicate=%zu reason=%s\n",
                 f.method.c_str(), f.dimension, f.replicate, f.reason.c_str());
  }
  std::printf("scores=%s rows=%zu failed=%zu cached=%zu\n", result.scores_csv.c_str(),
              result.rows.size(), result.failures.size(), result.cached_cells);
  return result.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"PPMI word embeddings via low-rank factorization"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-v,--verbose", o.verbose, "Debug logging");

  auto *build = app.add_subcommand("build-ppmi", "Tokenize a corpus and write vocab, counts, PPMI");
  build->add_option("--corpus", o.corpus, "Corpus text file")->required()->check(CLI::ExistingFile);
  build->add_option("--window", o.window, "Symmetric window size")->check(CLI::PositiveNumber);
  build->add_option("--min-count", o.min_count, "Minimum word frequency")->check(CLI::PositiveNumber);
  build->add_option("--jobs", o.jobs, "Counting threads")->check(CLI::PositiveNumber);
  build->add_option("--out", o.out, "Output directory")->required();

  auto *fact = app.add_subcommand("factorize", "Rank-d factorization of a PPMI matrix");
  fact->add_option("--ppmi", o.ppmi, "PPMI matrix file")->required()->check(CLI::ExistingFile);
  fact->add_option("--method", o.method, "svd, qr or nmf")->required();
  fact->add_option("--dim", o.dim, "Rank d")->required()->check(CLI::PositiveNumber);
  fact->add_option("--seed", o.seed, "Random seed");
  fact->add_option("--out", o.out, "Output prefix")->required();

  auto *embed = app.add_subcommand("embed", "Extract word vectors from saved factors");
  embed->add_option("--factors", o.factors, "Factor prefix")->required();
  embed->add_option("--vocab", o.vocab, "Vocabulary TSV")->required()->check(CLI::ExistingFile);
  embed->add_option("--method", o.method, "svd, qr_q, qr_r or nmf")->required();
  embed->add_option("--out", o.out, "Output .vec file")->required();

  auto *eval = app.add_subcommand("eval", "Evaluate embeddings on one task");
  eval->add_option("--embeddings", o.embeddings, "Word2vec text file")->required();
  eval->add_option("--task", o.task, "similarity or analogy")->required();
  eval->add_option("--dataset", o.dataset, "Dataset file (relative to $PMIEMB_DATA_DIR)")
      ->required();

  auto *anova = app.add_subcommand("anova", "Two-way ANOVA on a score table");
  anova->add_option("--scores", o.scores, "CSV method,dimension,replicate,similarity,analogy")
      ->required()
      ->check(CLI::ExistingFile);
  anova->add_option("--task", o.task, "similarity, analogy or both");
  anova->add_option("--out", o.out, "Report directory")->required();

  auto *exp = app.add_subcommand("experiment", "Run the full method x dimension experiment");
  exp->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  exp->add_option("--corpus", o.corpus, "Corpus text file");
  exp->add_option("--window", o.window, "Symmetric window size")->check(CLI::PositiveNumber);
  exp->add_option("--min-count", o.min_count, "Minimum word frequency")->check(CLI::PositiveNumber);
  exp->add_option("--method", o.methods, "Methods (repeatable): svd, nmf, qr_q, qr_r");
  exp->add_option("--dim", o.dims, "Dimensions (repeatable)");
  exp->add_option("--seed", o.seed, "Base seed");
  exp->add_option("--out", o.out, "Output directory");
  exp->add_option("--jobs", o.jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  exp->add_option("--splits", o.splits, "Corpus splits")->check(CLI::PositiveNumber);
  exp->add_option("--replicates", o.replicates, "Replicates per cell")->check(CLI::PositiveNumber);
  exp->add_option("--similarity", o.dataset, "Similarity dataset");
  exp->add_option("--analogy", o.vocab, "Analogy dataset");
  exp->add_flag("--emit-plot-data", o.emit_plot_data, "Write plot_<task>.csv summaries");

  CLI11_PARSE(app, argc, argv);
  if (o.verbose) set_log_level(LogLevel::kDebug);

  try {
    if (*build) return cmd_build_ppmi(o);
    if (*fact) return cmd_factorize(o);
    if (*embed) return cmd_embed(o);
    if (*eval) return cmd_eval(o);
    if (*anova) return cmd_anova(o);
    if (*exp) return cmd_experiment(o, *exp);
  } catch (const std::exception &e) {
    log_event(LogLevel::kError, "failed", {{"reason", e.what()}});
    return 1;
  }
  return 1;
}
