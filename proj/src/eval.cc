#include "pmiemb/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pmiemb/error.h"
#include "pmiemb/special_functions.h"

namespace pmiemb {

namespace {

using Eigen::Index;
using Eigen::RowVectorXd;

std::string lowercase(std::string s) {
  for (char &ch : s) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return s;
}

std::string trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

struct QueryIndices {
  std::size_t a, b, c;
};

std::optional<QueryIndices> lookup(const Vocabulary &vocab, const AnalogyQuestion &q) {
  auto a = vocab.index_of(q.a), b = vocab.index_of(q.b), c = vocab.index_of(q.c);
  if (!a || !b || !c) return std::nullopt;
  return QueryIndices{*a, *b, *c};
}

std::size_t solve_indices(const EmbeddingMatrix &e, const QueryIndices &q,
                          AnalogyMetric metric) {
  const auto &vectors = e.vectors();
  const RowVectorXd target = vectors.row(static_cast<Index>(q.b)) -
                             vectors.row(static_cast<Index>(q.a)) +
                             vectors.row(static_cast<Index>(q.c));
  const double target_norm = target.norm();
  std::size_t best = e.size();
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < e.size(); ++w) {
    if (w == q.a || w == q.b || w == q.c) continue;
    const auto row = vectors.row(static_cast<Index>(w));
    double score;
    if (metric == AnalogyMetric::kEuclidean) {
      score = 0.0;
      for (Index k = 0; k < target.size(); ++k) {
        const double diff = target(k) - row(k);
        score += diff * diff;
      }
    } else {
      const double nrm = row.norm();
      score = (nrm == 0.0 || target_norm == 0.0) ? 0.0 : -row.dot(target) / (nrm * target_norm);
    }
    if (score < best_score) {
      best_score = score;
      best = w;
    }
  }
  return best;
}

}  // namespace

SimilarityDataset load_similarity_dataset(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open similarity dataset");
  SimilarityDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, sep)) fields.push_back(trim(field));
    if (fields.size() < 3) throw ParseError(line_no, "expected word1,word2,score");
    double score;
    try {
      std::size_t used = 0;
      score = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error &) {
      if (ds.pairs.empty() && line_no == 1) continue;  // header
      throw ParseError(line_no, "invalid score '" + fields[2] + "'");
    }
    if (!std::isfinite(score)) throw ParseError(line_no, "non-finite score");
    ds.pairs.push_back({lowercase(fields[0]), lowercase(fields[1]), score});
  }
  return ds;
}

AnalogyDataset load_analogy_dataset(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open analogy dataset");
  AnalogyDataset ds;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == ':') {
      section = trim(line.substr(1));
      continue;
    }
    std::istringstream fields(line);
    AnalogyQuestion q;
    std::string extra;
    if (!(fields >> q.a >> q.b >> q.c >> q.d) || (fields >> extra)) {
      throw ParseError(line_no, "expected four words");
    }
    q.a = lowercase(q.a);
    q.b = lowercase(q.b);
    q.c = lowercase(q.c);
    q.d = lowercase(q.d);
    q.section = section;
    ds.questions.push_back(std::move(q));
  }
  return ds;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman inputs differ in length");
  if (x.size() < 2) throw ArgumentError("spearman requires at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("rank variance is zero; correlation undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double cosine(Eigen::Ref<const RowVectorXd> x, Eigen::Ref<const RowVectorXd> y) {
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return x.dot(y) / (nx * ny);
}

EvalResult eval_similarity(const EmbeddingMatrix &e, const SimilarityDataset &ds) {
  EvalResult result;
  result.task = "similarity";
  std::vector<double> model, human;
  for (const auto &pair : ds.pairs) {
    auto i = e.vocab().index_of(pair.word1);
    auto j = e.vocab().index_of(pair.word2);
    if (!i || !j) {
      ++result.n_skipped_oov;
      continue;
    }
    model.push_back(cosine(e.vector(*i), e.vector(*j)));
    human.push_back(pair.human_score);
    ++result.n_used;
  }
  if (result.n_used < 2) {
    throw InsufficientDataError("similarity evaluation needs at least two in-vocabulary pairs");
  }
  result.score = spearman(model, human);
  return result;
}

std::string solve_analogy(const EmbeddingMatrix &e, const std::string &a, const std::string &b,
                          const std::string &c, AnalogyMetric metric) {
  const auto &vocab = e.vocab();
  for (const std::string *w : {&a, &b, &c}) {
    if (!vocab.contains(*w)) throw OovError(*w);
  }
  const QueryIndices q{*vocab.index_of(a), *vocab.index_of(b), *vocab.index_of(c)};
  const std::size_t best = solve_indices(e, q, metric);
  if (best == e.size()) throw InsufficientDataError("no candidate words besides the query");
  return vocab.word(best);
}

AnalogyEvalResult eval_analogy(const EmbeddingMatrix &e, const AnalogyDataset &ds,
                               AnalogyMetric metric) {
  AnalogyEvalResult result;
  result.task = "analogy";
  std::size_t correct = 0;
  for (const auto &q : ds.questions) {
    auto &section = result.sections[q.section];
    const auto idx = lookup(e.vocab(), q);
    const auto answer = e.vocab().index_of(q.d);
    if (!idx || !answer) {
      ++result.n_skipped_oov;
      ++section.skipped_oov;
      continue;
    }
    ++result.n_used;
    ++section.used;
    if (solve_indices(e, *idx, metric) == *answer) {
      ++correct;
      ++section.correct;
    }
  }
  if (result.n_used == 0) {
    throw InsufficientDataError("no analogy question is fully in vocabulary");
  }
  result.score = static_cast<double>(correct) / static_cast<double>(result.n_used);
  return result;
}

NegativityResult negativity_check(const EmbeddingMatrix &e, const AnalogyDataset &ds) {
  NegativityResult result;
  result.input_nonnegative = !(e.vectors().array() < 0.0).any();
  const auto &vectors = e.vectors();
  for (const auto &q : ds.questions) {
    const auto idx = lookup(e.vocab(), q);
    if (!idx) {
      ++result.skipped_oov;
      continue;
    }
    ++result.used;
    const RowVectorXd target = vectors.row(static_cast<Index>(idx->b)) -
                               vectors.row(static_cast<Index>(idx->a)) +
                               vectors.row(static_cast<Index>(idx->c));
    if (target.size() > 0 && target.minCoeff() < -1e-12) ++result.with_negative;
  }
  if (result.used > 0) {
    result.fraction = static_cast<double>(result.with_negative) / static_cast<double>(result.used);
  }
  return result;
}

double gaussian_nonneg_prob(double mean, double variance, std::size_t d) {
  if (!(variance > 0.0)) throw ArgumentError("variance must be positive");
  if (d < 1) throw ArgumentError("dimension must be at least 1");
  const double z = mean / std::sqrt(variance);
  // log Phi(z), accurate in both tails.
  const double log_phi = z > 0.0 ? std::log1p(-normal_upper_tail(z)) : std::log(normal_cdf(z));
  return std::exp(static_cast<double>(d) * log_phi);
}

}  // namespace pmiemb
