// Word similarity and analogy benchmarks, plus the non-negativity analyses
// for NMF vectors.

#ifndef PMIEMB_EVAL_H_
#define PMIEMB_EVAL_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmiemb/embed.h"

namespace pmiemb {

struct SimilarityPair {
  std::string word1;
  std::string word2;
  double human_score = 0.0;
};

struct SimilarityDataset {
  std::vector<SimilarityPair> pairs;
};

struct AnalogyQuestion {
  std::string a, b, c, d;
  std::string section;
};

struct AnalogyDataset {
  std::vector<AnalogyQuestion> questions;
};

// `word1,word2,score` (comma or tab separated); a first line whose score field
// is not numeric is taken as a header. Words are lowercased.
SimilarityDataset load_similarity_dataset(const std::string &path);
// Google analogy format: `: section` labels, then `a b c d` lines. Lowercased.
AnalogyDataset load_analogy_dataset(const std::string &path);

struct EvalResult {
  std::string task;
  double score = 0.0;
  std::size_t n_used = 0;
  std::size_t n_skipped_oov = 0;
};

struct SectionScore {
  std::size_t correct = 0;
  std::size_t used = 0;
  std::size_t skipped_oov = 0;
};

struct AnalogyEvalResult : EvalResult {
  std::map<std::string, SectionScore> sections;
};

// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Cosine similarity; zero when either vector is zero.
double cosine(Eigen::Ref<const Eigen::RowVectorXd> x, Eigen::Ref<const Eigen::RowVectorXd> y);

EvalResult eval_similarity(const EmbeddingMatrix &e, const SimilarityDataset &ds);

enum class AnalogyMetric {
  // argmin_d ||b - a + c - d||.
  kEuclidean,
  // argmax_d cos(d, b - a + c).
  kCosine,
};

// Query words are excluded from the candidates; ties go to the lower word
// index. Throws OovError for an unknown query word.
std::string solve_analogy(const EmbeddingMatrix &e, const std::string &a, const std::string &b,
                          const std::string &c, AnalogyMetric metric = AnalogyMetric::kEuclidean);

AnalogyEvalResult eval_analogy(const EmbeddingMatrix &e, const AnalogyDataset &ds,
                               AnalogyMetric metric = AnalogyMetric::kEuclidean);

struct NegativityResult {
  double fraction = 0.0;
  std::size_t with_negative = 0;
  std::size_t used = 0;
  std::size_t skipped_oov = 0;
  // False when the embeddings already contain negative entries.
  bool input_nonnegative = true;
};

// Fraction of in-vocabulary triplets (a, b, c) for which b - a + c has a
// component below -1e-12.
NegativityResult negativity_check(const EmbeddingMatrix &e, const AnalogyDataset &ds);

// Probability that a N(mean * 1, variance * I) vector in d dimensions is
// entry-wise non-negative: Phi(mean / sigma)^d.
double gaussian_nonneg_prob(double mean, double variance, std::size_t d);

}  // namespace pmiemb

#endif  // PMIEMB_EVAL_H_
