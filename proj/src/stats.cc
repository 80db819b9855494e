#include "pmiemb/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "pmiemb/error.h"
#include "pmiemb/special_functions.h"

namespace pmiemb {

const AnovaRow &AnovaTable::row(const std::string &source) const {
  for (const auto &r : rows) {
    if (r.source == source) return r;
  }
  throw ArgumentError("no ANOVA row named '" + source + "'");
}

namespace {

struct Design {
  std::vector<std::string> methods;
  std::vector<long> dims;
  std::size_t replicates = 0;
  // cell_of[k] = method_index * dims.size() + dim_index for observation k.
  std::vector<std::size_t> cell_of;
  std::vector<double> cell_mean;
};

Design analyze_design(std::span<const Observation> obs) {
  Design design;
  for (const auto &o : obs) {
    if (!std::isfinite(o.score)) throw DesignError("non-finite score");
    design.methods.push_back(o.method);
    design.dims.push_back(o.dimension);
  }
  std::sort(design.methods.begin(), design.methods.end());
  design.methods.erase(std::unique(design.methods.begin(), design.methods.end()),
                       design.methods.end());
  std::sort(design.dims.begin(), design.dims.end());
  design.dims.erase(std::unique(design.dims.begin(), design.dims.end()), design.dims.end());

  const std::size_t a = design.methods.size(), b = design.dims.size();
  std::vector<std::size_t> counts(a * b, 0);
  design.cell_of.resize(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const auto i = static_cast<std::size_t>(
        std::lower_bound(design.methods.begin(), design.methods.end(), obs[k].method) -
        design.methods.begin());
    const auto j = static_cast<std::size_t>(
        std::lower_bound(design.dims.begin(), design.dims.end(), obs[k].dimension) -
        design.dims.begin());
    design.cell_of[k] = i * b + j;
    ++counts[i * b + j];
  }
  const bool balanced = std::all_of(counts.begin(), counts.end(),
                                    [&](std::size_t c) { return c == counts.front(); });
  if (obs.empty() || !balanced) {
    std::ostringstream msg;
    msg << "unbalanced design; cell counts:";
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        msg << ' ' << design.methods[i] << '/' << design.dims[j] << '=' << counts[i * b + j];
      }
    }
    throw DesignError(msg.str());
  }
  design.replicates = counts.front();

  // Cell means summed in a canonical (sorted score) order so that permuting
  // the input leaves every result bit-identical.
  std::vector<std::vector<double>> cells(a * b);
  for (std::size_t k = 0; k < obs.size(); ++k) cells[design.cell_of[k]].push_back(obs[k].score);
  design.cell_mean.resize(a * b);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::sort(cells[c].begin(), cells[c].end());
    double s = 0.0;
    for (double v : cells[c]) s += v;
    design.cell_mean[c] = s / static_cast<double>(cells[c].size());
  }
  return design;
}

std::optional<double> safe_ratio(double num, std::optional<double> den) {
  if (!den || *den == 0.0) return std::nullopt;
  return num / *den;
}

}  // namespace

AnovaResult two_way_anova(std::span<const Observation> obs) {
  const Design design = analyze_design(obs);
  const std::size_t a = design.methods.size(), b = design.dims.size(), r = design.replicates;
  if (a < 2 || b < 2) {
    throw DesignError("two-way ANOVA needs at least two levels of each factor (got " +
                      std::to_string(a) + " x " + std::to_string(b) + ")");
  }
  if (r < 2) throw DesignError("zero error degrees of freedom: one replicate per cell");

  const auto &cm = design.cell_mean;
  std::vector<double> method_mean(a, 0.0), dim_mean(b, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      method_mean[i] += cm[i * b + j] / static_cast<double>(b);
      dim_mean[j] += cm[i * b + j] / static_cast<double>(a);
    }
  }
  for (double m : method_mean) grand += m / static_cast<double>(a);

  const double rd = static_cast<double>(r);
  double ss_a = 0.0, ss_b = 0.0, ss_ab = 0.0, ss_cells = 0.0;
  for (std::size_t i = 0; i < a; ++i) ss_a += (method_mean[i] - grand) * (method_mean[i] - grand);
  for (std::size_t j = 0; j < b; ++j) ss_b += (dim_mean[j] - grand) * (dim_mean[j] - grand);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double c = cm[i * b + j];
      const double inter = c - method_mean[i] - dim_mean[j] + grand;
      ss_ab += inter * inter;
      ss_cells += (c - grand) * (c - grand);
    }
  }
  ss_a *= static_cast<double>(b) * rd;
  ss_b *= static_cast<double>(a) * rd;
  ss_ab *= rd;
  const double ss_model = ss_cells * rd;

  // Deviations taken in sorted order per cell for permutation invariance.
  std::vector<std::vector<double>> cell_scores(a * b);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    cell_scores[design.cell_of[k]].push_back(obs[k].score);
  }
  double ss_error = 0.0, ss_total = 0.0;
  for (std::size_t c = 0; c < cell_scores.size(); ++c) {
    std::sort(cell_scores[c].begin(), cell_scores[c].end());
    for (double y : cell_scores[c]) {
      ss_error += (y - cm[c]) * (y - cm[c]);
      ss_total += (y - grand) * (y - grand);
    }
  }

  const std::size_t df_a = a - 1, df_b = b - 1, df_ab = (a - 1) * (b - 1);
  const std::size_t df_model = a * b - 1, df_error = a * b * (r - 1);
  const std::size_t df_total = a * b * r - 1;
  const double ms_error_value = ss_error / static_cast<double>(df_error);
  const std::optional<double> ms_error = ms_error_value;

  const auto effect_row = [&](const std::string &name, std::size_t df, double ss) {
    AnovaRow row{name, df, ss, ss / static_cast<double>(df), std::nullopt, std::nullopt};
    row.f = safe_ratio(*row.ms, ms_error);
    if (row.f) {
      row.p = f_pvalue(*row.f, static_cast<double>(df), static_cast<double>(df_error));
    }
    return row;
  };

  AnovaResult result;
  result.method_levels = design.methods;
  result.dimension_levels = design.dims;
  result.replicates = r;

  result.overall.rows.push_back(effect_row("Model", df_model, ss_model));
  result.overall.rows.push_back(
      AnovaRow{"Error", df_error, ss_error, ms_error_value, std::nullopt, std::nullopt});
  result.overall.rows.push_back(AnovaRow{"Corrected Total", df_total, ss_total,
                                         ss_total / static_cast<double>(df_total), std::nullopt,
                                         std::nullopt});
  result.effects.rows.push_back(effect_row("Factorization", df_a, ss_a));
  result.effects.rows.push_back(effect_row("Dimension", df_b, ss_b));
  result.effects.rows.push_back(effect_row("Interaction", df_ab, ss_ab));

  for (AnovaTable *table : {&result.overall, &result.effects}) {
    table->grand_mean = grand;
    table->root_mse = std::sqrt(ms_error_value);
    table->r_squared = ss_total > 0.0 ? ss_model / ss_total : 0.0;
    table->coeff_var = grand != 0.0 ? 100.0 * table->root_mse / grand : 0.0;
  }
  return result;
}

std::vector<double> residuals(std::span<const Observation> obs) {
  const Design design = analyze_design(obs);
  if (design.replicates < 2) throw DesignError("zero error degrees of freedom");
  std::vector<double> out(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    out[k] = obs[k].score - design.cell_mean[design.cell_of[k]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk (Royston 1995, AS R94)

namespace {

double poly(std::span<const double> coeffs, double x) {
  double result = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) result = result * x + *it;
  return result;
}

}  // namespace

ShapiroWilkResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw ArgumentError("Shapiro-Wilk requires 3 <= n <= 5000");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (!(x.back() - x.front() > 0.0)) throw ArgumentError("Shapiro-Wilk sample has zero variance");

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W is the squared correlation between the sorted sample and the
  // antisymmetric coefficient vector.
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= an;
  double num = 0.0, coef2 = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    num += a[i] * (x[i] - x[n - 1 - i]);
    coef2 += 2.0 * a[i] * a[i];
  }
  for (double v : x) ss += (v - mean) * (v - mean);
  const double w = std::min(1.0, num * num / (coef2 * ss));

  ShapiroWilkResult result;
  result.w = w;
  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = std::numbers::pi / 3.0;
    result.p = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
    return result;
  }
  double y = std::log1p(-w);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) {
      result.p = 1e-99;
      return result;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    const double xx = std::log(an);
    mu = poly(c5, xx);
    sigma = std::exp(poly(c6, xx));
  }
  result.p = normal_upper_tail((y - mu) / sigma);
  return result;
}

double f_pvalue(double f, double df1, double df2) {
  if (!(f >= 0.0)) throw ArgumentError("F statistic must be non-negative");
  if (!(df1 > 0.0 && df2 > 0.0)) throw ArgumentError("F degrees of freedom must be positive");
  if (std::isinf(f)) return 0.0;
  return regularized_incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

// ---------------------------------------------------------------------------
// Score tables and reports

namespace {

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_score(const std::string &field, std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
    return v;
  } catch (const std::logic_error &) {
    throw ParseError(line_no, "invalid score '" + field + "'");
  }
}

std::string format_p(const std::optional<double> &p) {
  if (!p) return "";
  if (*p < 1e-4) return "<.0001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *p);
  return buf;
}

std::string format_opt(const std::optional<double> &v, const char *fmt) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

void append_rows(std::ostringstream &out, const AnovaTable &table, bool blank_total_ms) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %4s %16s %14s %9s %8s\n", "Source", "DF",
                "Sum of Squares", "Mean Square", "F Value", "Pr > F");
  out << buf;
  for (const auto &row : table.rows) {
    const bool total = blank_total_ms && row.source == "Corrected Total";
    std::snprintf(buf, sizeof buf, "%-16s %4zu %16.8f %14s %9s %8s\n", row.source.c_str(),
                  row.df, row.ss, total ? "" : format_opt(row.ms, "%.8f").c_str(),
                  format_opt(row.f, "%.2f").c_str(), format_p(row.p).c_str());
    out << buf;
  }
}

nlohmann::json row_json(const AnovaRow &row) {
  const auto opt = [](const std::optional<double> &v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
  };
  return {{"source", row.source}, {"df", row.df}, {"ss", row.ss},
          {"ms", opt(row.ms)},    {"f", opt(row.f)}, {"p", opt(row.p)}};
}

}  // namespace

std::vector<ScoreRow> load_score_table(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open score table");
  std::string line;
  std::size_t line_no = 0;
  std::vector<ScoreRow> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() >= 1 && fields[0] == "method") continue;
    }
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected method,dimension,replicate,similarity,analogy");
    }
    ScoreRow row;
    row.method = fields[0];
    try {
      row.dimension = std::stol(fields[1]);
      row.replicate = std::stoul(fields[2]);
    } catch (const std::logic_error &) {
      throw ParseError(line_no, "invalid dimension or replicate");
    }
    if (row.method.empty()) throw ParseError(line_no, "empty method");
    row.similarity = parse_score(fields[3], line_no);
    row.analogy = parse_score(fields[4], line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_score_table(const std::vector<ScoreRow> &rows, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write score table");
  out << "method,dimension,replicate,similarity,analogy\n";
  char buf[64];
  for (const auto &row : rows) {
    out << row.method << ',' << row.dimension << ',' << row.replicate << ',';
    if (row.similarity) {
      std::snprintf(buf, sizeof buf, "%.6f", *row.similarity);
      out << buf;
    }
    out << ',';
    if (row.analogy) {
      std::snprintf(buf, sizeof buf, "%.6f", *row.analogy);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "error writing score table");
}

std::vector<Observation> observations_for_task(const std::vector<ScoreRow> &rows,
                                               const std::string &task) {
  if (task != "similarity" && task != "analogy") {
    throw ArgumentError("task must be similarity or analogy");
  }
  std::vector<Observation> out;
  for (const auto &row : rows) {
    const auto &score = task == "similarity" ? row.similarity : row.analogy;
    if (score) out.push_back({row.method, row.dimension, row.replicate, *score});
  }
  return out;
}

std::string format_anova_report(const AnovaResult &result, const std::string &title) {
  std::ostringstream out;
  out << title << "\n\n";
  append_rows(out, result.overall, true);
  char buf[256];
  std::snprintf(buf, sizeof buf, "\n%12s %12s %12s %12s\n%12.6f %12.6f %12.6f %12.6f\n\n",
                "R-Square", "Coeff Var", "Root MSE", "Score Mean", result.overall.r_squared,
                result.overall.coeff_var, result.overall.root_mse, result.overall.grand_mean);
  out << buf;
  append_rows(out, result.effects, false);
  return out.str();
}

std::string anova_to_json(const AnovaResult &result) {
  nlohmann::json j;
  for (const auto &[name, table] :
       {std::pair{"overall", &result.overall}, std::pair{"effects", &result.effects}}) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &row : table->rows) rows.push_back(row_json(row));
    j[name] = {{"rows", rows}};
  }
  j["r_squared"] = result.overall.r_squared;
  j["coeff_var"] = result.overall.coeff_var;
  j["root_mse"] = result.overall.root_mse;
  j["grand_mean"] = result.overall.grand_mean;
  j["method_levels"] = result.method_levels;
  j["dimension_levels"] = result.dimension_levels;
  j["replicates"] = result.replicates;
  return j.dump(2);
}

}  // namespace pmiemb
