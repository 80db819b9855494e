// End-to-end experiment: corpus -> PPMI -> factorization -> embeddings ->
// evaluation, over a balanced method x dimension x replicate grid.

#ifndef PMIEMB_PIPELINE_H_
#define PMIEMB_PIPELINE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pmiemb/embed.h"
#include "pmiemb/stats.h"

namespace pmiemb {

struct ExperimentConfig {
  std::string corpus_path;
  std::size_t splits = 2;
  std::size_t window = 2;
  std::size_t min_count = 300;
  std::vector<EmbeddingMethod> methods{EmbeddingMethod::kSvd, EmbeddingMethod::kNmf,
                                       EmbeddingMethod::kQrQ, EmbeddingMethod::kQrR};
  std::vector<std::size_t> dimensions{250, 500};
  std::size_t replicates_per_cell = 2;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  // Relative paths resolve against dataset_dir().
  std::string similarity_dataset = "wordsim353.csv";
  std::string analogy_dataset = "questions-words.txt";
  std::size_t jobs = 1;
  bool emit_plot_data = false;

  // Throws ArgumentError when an invariant fails.
  void validate() const;
};

// JSON object with any subset of the fields above (methods as names).
ExperimentConfig load_experiment_config(const std::string &path);
std::string experiment_config_to_json(const ExperimentConfig &config);

// $PMIEMB_DATA_DIR when set, otherwise "data".
std::string dataset_dir();
std::string resolve_dataset_path(const std::string &path);

struct CellFailure {
  std::string method;
  std::size_t dimension = 0;
  std::size_t replicate = 0;
  std::string reason;
};

struct PipelineResult {
  // Sorted by (method order in config, dimension, replicate).
  std::vector<ScoreRow> rows;
  std::vector<CellFailure> failures;
  std::string scores_csv;
  std::size_t cached_cells = 0;
};

// Replicate r of each (method, dimension) uses split r mod splits and seed
// seed + r. A failing cell is logged and left out of the table.
PipelineResult run_pipeline(const ExperimentConfig &config);

// Mean score per (method, dimension) for each task: plot_<task>.csv.
void write_plot_data(const std::vector<ScoreRow> &rows, const std::string &dir);

struct AnovaReport {
  AnovaResult anova;
  ShapiroWilkResult shapiro;
  std::vector<double> residuals;
  std::string json_path, text_path, residuals_path, shapiro_path;
};

// Writes <task>_anova.json, <task>_anova.txt, <task>_residuals.csv and
// <task>_shapiro.json into out_dir.
AnovaReport run_anova(const std::string &score_csv, const std::string &task,
                      const std::string &out_dir);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t file_hash(const std::string &path);

}  // namespace pmiemb

#endif  // PMIEMB_PIPELINE_H_
