// Balanced two-factor ANOVA with interaction, residual diagnostics and the
// Shapiro-Wilk normality test.

#ifndef PMIEMB_STATS_H_
#define PMIEMB_STATS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pmiemb {

struct Observation {
  std::string method;  // factor A
  long dimension = 0;  // factor B
  std::size_t replicate = 0;
  double score = 0.0;
};

struct AnovaRow {
  std::string source;
  std::size_t df = 0;
  double ss = 0.0;
  std::optional<double> ms;
  std::optional<double> f;
  std::optional<double> p;
};

struct AnovaTable {
  std::vector<AnovaRow> rows;
  double r_squared = 0.0;
  double coeff_var = 0.0;  // percent
  double root_mse = 0.0;
  double grand_mean = 0.0;

  // Throws ArgumentError for an unknown source.
  const AnovaRow &row(const std::string &source) const;
};

struct AnovaResult {
  // Model, Error, Corrected Total.
  AnovaTable overall;
  // Factorization, Dimension, Interaction.
  AnovaTable effects;
  std::vector<std::string> method_levels;
  std::vector<long> dimension_levels;
  std::size_t replicates = 0;
};

// Fixed-effects a x b design with r >= 2 replicates per cell. F and p are
// absent when the error mean square is zero. Throws DesignError for
// unbalanced or incomplete designs.
AnovaResult two_way_anova(std::span<const Observation> obs);

// Score minus its cell mean, in input order.
std::vector<double> residuals(std::span<const Observation> obs);

struct ShapiroWilkResult {
  double w = 0.0;
  double p = 0.0;
};

// Royston's AS R94 approximation; 3 <= n <= 5000.
ShapiroWilkResult shapiro_wilk(std::span<const double> sample);

// Upper-tail probability of the F(df1, df2) distribution.
double f_pvalue(double f, double df1, double df2);

// ---------------------------------------------------------------------------
// Score tables (`method,dimension,replicate,similarity,analogy`)

struct ScoreRow {
  std::string method;
  long dimension = 0;
  std::size_t replicate = 0;
  std::optional<double> similarity;
  std::optional<double> analogy;
};

std::vector<ScoreRow> load_score_table(const std::string &path);
void save_score_table(const std::vector<ScoreRow> &rows, const std::string &path);

// task is "similarity" or "analogy". Rows without a score for the task are
// skipped (leaving the design unbalanced).
std::vector<Observation> observations_for_task(const std::vector<ScoreRow> &rows,
                                               const std::string &task);

// Aligned text in the layout of a SAS GLM report.
std::string format_anova_report(const AnovaResult &result, const std::string &title);
std::string anova_to_json(const AnovaResult &result);

}  // namespace pmiemb

#endif  // PMIEMB_STATS_H_
