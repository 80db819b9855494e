#include "pmiemb/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pmiemb/corpus.h"
#include "pmiemb/error.h"
#include "pmiemb/eval.h"
#include "pmiemb/factorize.h"
#include "pmiemb/logging.h"
#include "pmiemb/ppmi.h"
#include "pmiemb/sparse_matrix.h"

namespace pmiemb {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (corpus_path.empty()) throw ArgumentError("corpus path is empty");
  if (splits < 1) throw ArgumentError("splits must be >= 1");
  if (window < 1) throw ArgumentError("window must be >= 1");
  if (min_count < 1) throw ArgumentError("min_count must be >= 1");
  if (methods.empty()) throw ArgumentError("no factorization methods given");
  if (dimensions.empty()) throw ArgumentError("no dimensions given");
  for (std::size_t d : dimensions) {
    if (d < 1) throw ArgumentError("dimensions must be >= 1");
  }
  if (replicates_per_cell < 1) throw ArgumentError("replicates_per_cell must be >= 1");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
  if (output_dir.empty()) throw ArgumentError("output directory is empty");
}

ExperimentConfig load_experiment_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ArgumentError("invalid config JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ArgumentError("config must be a JSON object: " + path);
  ExperimentConfig c;
  try {
    if (j.contains("corpus_path")) c.corpus_path = j["corpus_path"].get<std::string>();
    if (j.contains("splits")) c.splits = j["splits"].get<std::size_t>();
    if (j.contains("window")) c.window = j["window"].get<std::size_t>();
    if (j.contains("min_count")) c.min_count = j["min_count"].get<std::size_t>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto &m : j["methods"]) c.methods.push_back(parse_embedding_method(m.get<std::string>()));
    }
    if (j.contains("dimensions")) c.dimensions = j["dimensions"].get<std::vector<std::size_t>>();
    if (j.contains("replicates_per_cell")) {
      c.replicates_per_cell = j["replicates_per_cell"].get<std::size_t>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("similarity_dataset")) {
      c.similarity_dataset = j["similarity_dataset"].get<std::string>();
    }
    if (j.contains("analogy_dataset")) c.analogy_dataset = j["analogy_dataset"].get<std::string>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
    if (j.contains("emit_plot_data")) c.emit_plot_data = j["emit_plot_data"].get<bool>();
  } catch (const json::exception &e) {
    throw ArgumentError("bad config field in " + path + ": " + e.what());
  }
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig &c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  json j = {{"corpus_path", c.corpus_path},
            {"splits", c.splits},
            {"window", c.window},
            {"min_count", c.min_count},
            {"methods", methods},
            {"dimensions", c.dimensions},
            {"replicates_per_cell", c.replicates_per_cell},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"similarity_dataset", c.similarity_dataset},
            {"analogy_dataset", c.analogy_dataset},
            {"jobs", c.jobs},
            {"emit_plot_data", c.emit_plot_data}};
  return j.dump(2);
}

std::string dataset_dir() {
  const char *env = std::getenv("PMIEMB_DATA_DIR");
  return env && *env ? env : "data";
}

std::string resolve_dataset_path(const std::string &path) {
  if (fs::path(path).is_absolute()) return path;
  return (fs::path(dataset_dir()) / path).string();
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::uint64_t h = fnv1a("");
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

namespace {

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

enum class FactorKind { kSvd, kQr, kNmf };

FactorKind kind_of(EmbeddingMethod m) {
  switch (m) {
    case EmbeddingMethod::kSvd: return FactorKind::kSvd;
    case EmbeddingMethod::kNmf: return FactorKind::kNmf;
    case EmbeddingMethod::kQrQ:
    case EmbeddingMethod::kQrR: return FactorKind::kQr;
  }
  return FactorKind::kSvd;
}

const char *kind_name(FactorKind k) {
  switch (k) {
    case FactorKind::kSvd: return "svd";
    case FactorKind::kQr: return "qr";
    case FactorKind::kNmf: return "nmf";
  }
  return "svd";
}

void write_atomically(const fs::path &path, const std::string &content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError(tmp.string(), "cannot write");
    out << content;
    if (!out) throw IoError(tmp.string(), "error writing");
  }
  fs::rename(tmp, path);
}

struct SplitArtifacts {
  std::shared_ptr<const Vocabulary> vocab;
  SparseMatrix ppmi;
  std::uint64_t key = 0;
};

std::uint64_t split_key(std::uint64_t corpus_key, std::size_t split,
                        const ExperimentConfig &config) {
  std::ostringstream key_text;
  key_text << "corpus=" << hex(corpus_key) << ";splits=" << config.splits << ";split=" << split
           << ";window=" << config.window << ";min_count=" << config.min_count
           << ";estimator=pair";
  return fnv1a(key_text.str());
}

SplitArtifacts prepare_split(const TokenSequence &tokens, std::size_t split,
                             const ExperimentConfig &config, std::uint64_t key) {
  SplitArtifacts art;
  art.key = key;
  const fs::path dir = fs::path(config.output_dir) / ("split" + std::to_string(split) + "-" + hex(art.key));
  const fs::path vocab_path = dir / "vocab.tsv", counts_path = dir / "counts.txt",
                 ppmi_path = dir / "ppmi.bin";
  if (fs::exists(vocab_path) && fs::exists(counts_path) && fs::exists(ppmi_path)) {
    art.vocab = std::make_shared<Vocabulary>(load_vocabulary(vocab_path.string()));
    art.ppmi = load_matrix(ppmi_path.string());
    if (art.ppmi.rows() == art.vocab->size()) {
      log_event(LogLevel::kInfo, "split_cached", {{"split", std::to_string(split)},
                                                  {"dir", dir.string()}});
      return art;
    }
  }
  fs::create_directories(dir);
  auto vocab = build_vocabulary(tokens, config.min_count);
  const auto counts = count_cooccurrences(tokens, vocab, config.window, config.jobs);
  art.ppmi = compute_ppmi(counts);
  save_vocabulary(vocab, vocab_path.string());
  save_counts(counts, counts_path.string());
  save_matrix_binary(art.ppmi, ppmi_path.string());
  art.vocab = std::make_shared<Vocabulary>(std::move(vocab));
  log_event(LogLevel::kInfo, "split_built",
            {{"split", std::to_string(split)},
             {"tokens", std::to_string(tokens.size())},
             {"vocab", std::to_string(art.vocab->size())},
             {"ppmi_nnz", std::to_string(art.ppmi.nnz())},
             {"dir", dir.string()}});
  return art;
}

struct Cell {
  EmbeddingMethod method;
  std::size_t dimension;
  std::size_t replicate;  // 1-based
  std::size_t method_order;
  std::size_t dim_order;
  std::optional<ScoreRow> row;
  std::string failure;
  bool cached = false;
};

// One factorization feeding every method that shares it (qr_q and qr_r).
struct FactorJob {
  FactorKind kind;
  std::size_t split;
  std::size_t dimension;
  std::uint64_t seed;
  std::vector<Cell *> cells;
};

std::string cell_key_path(const ExperimentConfig &config, const Cell &cell, std::uint64_t split_key,
                          std::uint64_t seed) {
  std::ostringstream key;
  key << "split=" << hex(split_key) << ";method=" << to_string(cell.method)
      << ";d=" << cell.dimension << ";seed=" << seed;
  return (fs::path(config.output_dir) / "cells" /
          (to_string(cell.method) + "-d" + std::to_string(cell.dimension) + "-r" +
           std::to_string(cell.replicate) + "-" + hex(fnv1a(key.str())) + ".json"))
      .string();
}

std::optional<ScoreRow> read_cached_cell(const std::string &path, const Cell &cell) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    json j;
    in >> j;
    ScoreRow row{to_string(cell.method), static_cast<long>(cell.dimension), cell.replicate,
                 j.at("similarity").get<double>(), j.at("analogy").get<double>()};
    return row;
  } catch (const json::exception &) {
    return std::nullopt;
  }
}

FactorizationResult factorize(const SparseMatrix &ppmi, FactorKind kind, std::size_t d,
                              std::uint64_t seed) {
  switch (kind) {
    case FactorKind::kSvd: {
      SvdOptions opts;
      opts.seed = seed;
      return truncated_svd(ppmi, d, opts);
    }
    case FactorKind::kQr: return pivoted_qr(ppmi, d);
    case FactorKind::kNmf: {
      NmfOptions opts;
      opts.svd.seed = seed;
      return nmf(ppmi, d, opts);
    }
  }
  throw ArgumentError("unknown factorization kind");
}

struct Datasets {
  SimilarityDataset similarity;
  AnalogyDataset analogy;
};

void run_job(FactorJob &job, const SplitArtifacts &split, const Datasets &data,
             const ExperimentConfig &config) {
  const std::string tag = std::string(kind_name(job.kind)) + "-d" + std::to_string(job.dimension) +
                          "-s" + std::to_string(job.seed) + "-split" + std::to_string(job.split);
  std::optional<FactorizationResult> factors;
  try {
    factors = factorize(split.ppmi, job.kind, job.dimension, job.seed);
    FactorMetadata meta{kind_name(job.kind), job.dimension, job.seed, 0, 0.0};
    std::visit(
        [&](const auto &f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, SvdFactors>) meta.iterations = f.iterations;
          if constexpr (std::is_same_v<T, NmfFactors>) {
            meta.iterations = f.iterations;
            meta.final_objective = f.objective_trace.back();
          }
        },
        *factors);
    const fs::path dir = fs::path(config.output_dir) / "factors";
    fs::create_directories(dir);
    save_factors(*factors, meta, (dir / (tag + "-" + hex(split.key))).string());
  } catch (const std::exception &e) {
    for (Cell *cell : job.cells) cell->failure = std::string("factorization: ") + e.what();
    log_event(LogLevel::kError, "factorization_failed", {{"job", tag}, {"reason", e.what()}});
    return;
  }
  for (Cell *cell : job.cells) {
    try {
      auto emb = extract_embeddings(*factors, cell->method, split.vocab);
      emb.metadata().corpus_split = job.split;
      emb.metadata().seed = job.seed;
      const fs::path dir = fs::path(config.output_dir) / "embeddings";
      fs::create_directories(dir);
      save_embeddings(emb, (dir / (to_string(cell->method) + "-d" + std::to_string(cell->dimension) +
                                   "-r" + std::to_string(cell->replicate) + ".vec"))
                               .string());
      const auto sim = eval_similarity(emb, data.similarity);
      const auto ana = eval_analogy(emb, data.analogy);
      cell->row = ScoreRow{to_string(cell->method), static_cast<long>(cell->dimension),
                           cell->replicate, sim.score, ana.score};
      const json record = {{"method", to_string(cell->method)},
                           {"dimension", cell->dimension},
                           {"replicate", cell->replicate},
                           {"split", job.split},
                           {"seed", job.seed},
                           {"similarity", sim.score},
                           {"similarity_used", sim.n_used},
                           {"similarity_skipped_oov", sim.n_skipped_oov},
                           {"analogy", ana.score},
                           {"analogy_used", ana.n_used},
                           {"analogy_skipped_oov", ana.n_skipped_oov}};
      write_atomically(cell_key_path(config, *cell, split.key, job.seed), record.dump(2));
      log_event(LogLevel::kInfo, "cell_done",
                {{"method", to_string(cell->method)},
                 {"dim", std::to_string(cell->dimension)},
                 {"replicate", std::to_string(cell->replicate)},
                 {"similarity", std::to_string(sim.score)},
                 {"analogy", std::to_string(ana.score)}});
    } catch (const std::exception &e) {
      cell->failure = e.what();
      log_event(LogLevel::kError, "cell_failed",
                {{"method", to_string(cell->method)},
                 {"dim", std::to_string(cell->dimension)},
                 {"replicate", std::to_string(cell->replicate)},
                 {"reason", e.what()}});
    }
  }
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig &config) {
  config.validate();
  fs::create_directories(fs::path(config.output_dir) / "cells");
  write_atomically(fs::path(config.output_dir) / "config.json", experiment_config_to_json(config));

  Datasets data;
  data.similarity = load_similarity_dataset(resolve_dataset_path(config.similarity_dataset));
  data.analogy = load_analogy_dataset(resolve_dataset_path(config.analogy_dataset));

  const std::uint64_t corpus_key = file_hash(config.corpus_path);
  log_event(LogLevel::kInfo, "pipeline_start",
            {{"corpus", config.corpus_path}, {"corpus_hash", hex(corpus_key)},
             {"out", config.output_dir}, {"jobs", std::to_string(config.jobs)}});

  // Grid of cells in output order.
  std::vector<Cell> cells;
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    for (std::size_t di = 0; di < config.dimensions.size(); ++di) {
      for (std::size_t r = 1; r <= config.replicates_per_cell; ++r) {
        cells.push_back({config.methods[mi], config.dimensions[di], r, mi, di, std::nullopt, "", false});
      }
    }
  }
  const auto split_of = [&](const Cell &c) { return (c.replicate - 1) % config.splits; };
  const auto seed_of = [&](const Cell &c) { return config.seed + (c.replicate - 1); };

  // Splits are only materialized when some uncached cell needs them; the
  // split key itself is cheap, so check cell caches first.
  std::vector<std::uint64_t> split_keys(config.splits);
  for (std::size_t s = 0; s < config.splits; ++s) split_keys[s] = split_key(corpus_key, s, config);
  PipelineResult result;
  std::vector<bool> split_needed(config.splits, false);
  for (auto &cell : cells) {
    const auto path = cell_key_path(config, cell, split_keys[split_of(cell)], seed_of(cell));
    if (auto row = read_cached_cell(path, cell)) {
      cell.row = row;
      cell.cached = true;
      ++result.cached_cells;
    } else {
      split_needed[split_of(cell)] = true;
    }
  }

  std::vector<SplitArtifacts> splits(config.splits);
  if (std::find(split_needed.begin(), split_needed.end(), true) != split_needed.end()) {
    const auto tokens = tokenize_file(config.corpus_path);
    const auto parts = split_corpus(tokens, config.splits, SplitMode::kSentenceAligned);
    for (std::size_t s = 0; s < config.splits; ++s) {
      if (split_needed[s]) splits[s] = prepare_split(parts[s], s, config, split_keys[s]);
    }
  }

  std::map<std::tuple<int, std::size_t, std::size_t, std::uint64_t>, FactorJob> job_map;
  for (auto &cell : cells) {
    if (cell.cached) continue;
    const FactorKind kind = kind_of(cell.method);
    const auto key = std::make_tuple(static_cast<int>(kind), split_of(cell), cell.dimension, seed_of(cell));
    auto [it, inserted] =
        job_map.try_emplace(key, FactorJob{kind, split_of(cell), cell.dimension, seed_of(cell), {}});
    it->second.cells.push_back(&cell);
  }
  std::vector<FactorJob *> jobs;
  for (auto &[key, job] : job_map) jobs.push_back(&job);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      run_job(*jobs[i], splits[jobs[i]->split], data, config);
    }
  };
  const std::size_t n_threads = std::min(config.jobs, std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto &t : threads) t.join();

  for (const auto &cell : cells) {
    if (cell.row) {
      result.rows.push_back(*cell.row);
    } else {
      result.failures.push_back({to_string(cell.method), cell.dimension, cell.replicate,
                                 cell.failure.empty() ? "not run" : cell.failure});
    }
  }
  result.scores_csv = (fs::path(config.output_dir) / "scores.csv").string();
  save_score_table(result.rows, result.scores_csv);
  if (config.emit_plot_data) write_plot_data(result.rows, config.output_dir);
  log_event(result.failures.empty() ? LogLevel::kInfo : LogLevel::kWarn, "pipeline_done",
            {{"rows", std::to_string(result.rows.size())},
             {"failed", std::to_string(result.failures.size())},
             {"cached", std::to_string(result.cached_cells)},
             {"scores", result.scores_csv}});
  return result;
}

void write_plot_data(const std::vector<ScoreRow> &rows, const std::string &dir) {
  fs::create_directories(dir);
  for (const std::string task : {"similarity", "analogy"}) {
    // Keep first-appearance order of methods; dimensions ascending.
    std::vector<std::string> methods;
    std::map<std::pair<std::string, long>, std::pair<double, std::size_t>> acc;
    for (const auto &row : rows) {
      const auto &score = task == "similarity" ? row.similarity : row.analogy;
      if (!score) continue;
      if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) {
        methods.push_back(row.method);
      }
      auto &[sum, n] = acc[{row.method, row.dimension}];
      sum += *score;
      ++n;
    }
    const auto path = (fs::path(dir) / ("plot_" + task + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw IoError(path, "cannot write plot data");
    out << "method,dimension,mean_score,n\n";
    char buf[32];
    for (const auto &m : methods) {
      for (const auto &[key, v] : acc) {
        if (key.first != m) continue;
        std::snprintf(buf, sizeof buf, "%.6f", v.first / static_cast<double>(v.second));
        out << m << ',' << key.second << ',' << buf << ',' << v.second << '\n';
      }
    }
  }
}

AnovaReport run_anova(const std::string &score_csv, const std::string &task,
                      const std::string &out_dir) {
  const auto rows = load_score_table(score_csv);
  const auto obs = observations_for_task(rows, task);
  AnovaReport report;
  report.anova = two_way_anova(obs);
  report.residuals = residuals(obs);
  report.shapiro = shapiro_wilk(report.residuals);

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  report.json_path = (base / (task + "_anova.json")).string();
  report.text_path = (base / (task + "_anova.txt")).string();
  report.residuals_path = (base / (task + "_residuals.csv")).string();
  report.shapiro_path = (base / (task + "_shapiro.json")).string();

  const std::string title = "Two-way ANOVA, " + task + " task";
  char buf[128];
  std::snprintf(buf, sizeof buf, "\nShapiro-Wilk on residuals: W = %.6f, p = %.4f\n",
                report.shapiro.w, report.shapiro.p);
  write_atomically(report.text_path, format_anova_report(report.anova, title) + buf);
  write_atomically(report.json_path, anova_to_json(report.anova) + "\n");

  std::ostringstream res;
  res << "method,dimension,replicate,score,residual\n";
  for (std::size_t k = 0; k < obs.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g", obs[k].score, report.residuals[k]);
    res << obs[k].method << ',' << obs[k].dimension << ',' << obs[k].replicate << ',' << buf << '\n';
  }
  write_atomically(report.residuals_path, res.str());
  const json sw = {{"test", "shapiro-wilk"},
                   {"n", report.residuals.size()},
                   {"w", report.shapiro.w},
                   {"p", report.shapiro.p}};
  write_atomically(report.shapiro_path, sw.dump(2) + "\n");
  return report;
}

}  // namespace pmiemb
