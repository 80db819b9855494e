#include "pmiemb/ppmi.h"

#include <algorithm>
#include <cmath>

#include "pmiemb/error.h"

namespace pmiemb {

ProbabilityModel::ProbabilityModel(const CooccurrenceCounts &counts, const PmiOptions &options)
    : counts_(&counts), p_word_(counts.n(), 0.0) {
  if (counts.total_pairs() == 0) throw ArgumentError("co-occurrence counts are empty");
  if (options.estimator == MarginalEstimator::kPairMarginal) {
    const double total = static_cast<double>(counts.total_pairs());
    for (std::size_t i = 0; i < counts.n(); ++i) {
      p_word_[i] = static_cast<double>(counts.row_marginals()[i]) / total;
    }
    return;
  }
  if (options.unigram_counts.size() != counts.n()) {
    throw ArgumentError("unigram counts must cover the vocabulary");
  }
  double total = 0.0;
  for (std::uint64_t c : options.unigram_counts) total += static_cast<double>(c);
  if (total == 0.0) throw ConsistencyError("unigram counts sum to zero");
  for (std::size_t i = 0; i < counts.n(); ++i) {
    p_word_[i] = static_cast<double>(options.unigram_counts[i]) / total;
  }
}

double ProbabilityModel::p_pair(std::size_t i, std::size_t j) const {
  return static_cast<double>(counts_->get(i, j)) / static_cast<double>(counts_->total_pairs());
}

namespace {

// Evaluates each unordered pair once with (lo, hi) argument order and mirrors
// the value, so the result is exactly symmetric.
SparseMatrix pmi_matrix(const CooccurrenceCounts &counts, const PmiOptions &options,
                        bool positive_only) {
  const ProbabilityModel model(counts, options);
  const double total = static_cast<double>(counts.total_pairs());
  const auto offsets = counts.row_offsets();
  const auto cols = counts.col_indices();
  const auto values = counts.values();
  const std::size_t n = counts.n();

  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(counts.nnz());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
      const std::size_t j = cols[p];
      if (j < i) continue;
      const double pi = model.p_word(i);
      const double pj = model.p_word(j);
      if (pi <= 0.0 || pj <= 0.0) {
        throw ConsistencyError("zero marginal probability for word " +
                               std::to_string(pi <= 0.0 ? i : j));
      }
      const double joint = static_cast<double>(values[p]) / total;
      const double pmi = std::log(joint / (pi * pj));
      if (positive_only && !(pmi > 0.0)) continue;
      triplets.push_back({i, j, pmi});
      if (j != i) triplets.push_back({j, i, pmi});
    }
  }
  if (positive_only) return SparseMatrix::from_triplets(n, n, std::move(triplets));

  // Plain PMI may legitimately be exactly zero for an observed pair; keep it.
  std::sort(triplets.begin(), triplets.end(), [](const auto &a, const auto &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_offsets(n + 1, 0);
  std::vector<std::size_t> col_indices;
  std::vector<double> pmi_values;
  col_indices.reserve(triplets.size());
  pmi_values.reserve(triplets.size());
  for (const auto &t : triplets) {
    ++row_offsets[t.row + 1];
    col_indices.push_back(t.col);
    pmi_values.push_back(t.value);
  }
  for (std::size_t i = 0; i < n; ++i) row_offsets[i + 1] += row_offsets[i];
  return SparseMatrix(n, n, std::move(row_offsets), std::move(col_indices),
                      std::move(pmi_values));
}

}  // namespace

SparseMatrix compute_pmi(const CooccurrenceCounts &counts, const PmiOptions &options) {
  return pmi_matrix(counts, options, false);
}

SparseMatrix compute_ppmi(const CooccurrenceCounts &counts, const PmiOptions &options) {
  return pmi_matrix(counts, options, true);
}

}  // namespace pmiemb
