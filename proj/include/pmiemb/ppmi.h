// Pointwise mutual information matrices from co-occurrence counts.

#ifndef PMIEMB_PPMI_H_
#define PMIEMB_PPMI_H_

#include <cstdint>
#include <span>
#include <vector>

#include "pmiemb/corpus.h"
#include "pmiemb/sparse_matrix.h"

namespace pmiemb {

enum class MarginalEstimator {
  // p(i) = row_marginals[i] / total_pairs.
  kPairMarginal,
  // p(i) = unigram count of i / total unigram count over the vocabulary.
  kUnigram,
};

struct PmiOptions {
  MarginalEstimator estimator = MarginalEstimator::kPairMarginal;
  // Required for kUnigram: per-word corpus frequencies in vocabulary order.
  std::span<const std::uint64_t> unigram_counts;
};

// Word and pair probabilities derived from counts.
class ProbabilityModel {
 public:
  ProbabilityModel(const CooccurrenceCounts &counts, const PmiOptions &options = {});

  double p_pair(std::size_t i, std::size_t j) const;
  double p_word(std::size_t i) const { return p_word_[i]; }
  const std::vector<double> &word_probabilities() const { return p_word_; }

 private:
  const CooccurrenceCounts *counts_;
  std::vector<double> p_word_;
};

// PMI over observed pairs only; unobserved pairs are absent.
SparseMatrix compute_pmi(const CooccurrenceCounts &counts, const PmiOptions &options = {});

// max(PMI, 0) with non-positive entries dropped. Square and exactly symmetric.
SparseMatrix compute_ppmi(const CooccurrenceCounts &counts, const PmiOptions &options = {});

}  // namespace pmiemb

#endif  // PMIEMB_PPMI_H_
