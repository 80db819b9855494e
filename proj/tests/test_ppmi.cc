#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.h"
#include "pmiemb/corpus.h"
#include "pmiemb/error.h"
#include "pmiemb/ppmi.h"
#include "pmiemb/sparse_matrix.h"

using namespace pmiemb;
using E = CooccurrenceCounts::Entry;

namespace {

std::vector<std::vector<std::string>> random_corpus(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> word(0, 24), len(2, 15);
  // Skewed draws so that some pairs fall below independence.
  std::vector<std::vector<std::string>> out(120);
  for (auto &s : out) {
    const int l = len(rng);
    for (int k = 0; k < l; ++k) {
      const int w = std::min(word(rng), word(rng));
      s.push_back("w" + std::to_string(w));
    }
  }
  return out;
}

std::map<std::string, int> index_map(const Vocabulary &v) {
  std::map<std::string, int> m;
  for (std::size_t i = 0; i < v.size(); ++i) m[v.word(i)] = static_cast<int>(i);
  return m;
}

CooccurrenceCounts counts_for(std::uint64_t seed, Vocabulary *vocab_out = nullptr) {
  const auto t = TokenSequence::from_sentences(random_corpus(seed));
  auto v = build_vocabulary(t, 3);
  auto c = count_cooccurrences(t, v, 2);
  if (vocab_out) *vocab_out = v;
  return c;
}

}  // namespace

TEST_CASE("sparse matrix construction and access") {
  const auto m = SparseMatrix::from_triplets(
      3, 4, {{0, 1, 2.0}, {2, 3, -1.0}, {0, 1, 0.5}, {1, 0, 0.0}, {2, 0, 4.0}});
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 4);
  CHECK(m.nnz() == 3);
  CHECK(m.get(0, 1) == 2.5);
  CHECK(m.get(1, 0) == 0.0);
  CHECK(m.get(2, 0) == 4.0);
  CHECK(m.sum() == 5.5);
  CHECK(m.frobenius_norm_squared() == doctest::Approx(2.5 * 2.5 + 1 + 16));
  CHECK(m.transpose().get(3, 2) == -1.0);
  CHECK(m.transpose().transpose() == m);
  CHECK(SparseMatrix::from_dense(m.to_dense()) == m);

  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 1, 1}, {0, 0}, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(SparseMatrix(1, 3, {0, 1}, {1}, {NAN}), ArgumentError);
}

TEST_CASE("sparse products agree with dense arithmetic") {
  const auto a = oracle::random_sparse(17, 11, 0.3, 9);
  const auto x = oracle::random_dense(11, 3, 1);
  const auto y = oracle::random_dense(17, 2, 2);
  CHECK(oracle::max_abs(a.multiply(x) - a.to_dense() * x) < 1e-13);
  CHECK(oracle::max_abs(a.multiply_transpose(y) - a.to_dense().transpose() * y) < 1e-13);
  CHECK_THROWS_AS(a.multiply(y), ArgumentError);
}

TEST_CASE("matrix files reload unchanged and the loader detects the format") {
  const auto dir = std::filesystem::temp_directory_path() / "pmiemb_ppmi_test";
  std::filesystem::create_directories(dir);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = oracle::random_sparse(13, 9, 0.25, seed);
    save_matrix_text(a, (dir / "m.txt").string());
    save_matrix_binary(a, (dir / "m.bin").string());
    CHECK(load_matrix((dir / "m.txt").string()) == a);
    CHECK(load_matrix((dir / "m.bin").string()) == a);
    const auto dense = oracle::random_dense(5, 4, seed);
    save_dense_binary(dense, (dir / "d.bin").string());
    CHECK(load_dense((dir / "d.bin").string()) == dense);
  }
  {
    std::ifstream in(dir / "m.bin", std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "PPMI");
  }
  std::ofstream(dir / "bad.txt") << "2 2 1\n0 5 1.0\n";
  CHECK_THROWS(load_matrix((dir / "bad.txt").string()));
  CHECK_THROWS_AS(load_matrix((dir / "missing.bin").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("PMI is zero under independence") {
  // Every pair once: p(i, j) = 1/4 = p(i) p(j).
  const CooccurrenceCounts c(2, 1, {E{0, 0, 1}, E{0, 1, 1}, E{1, 0, 1}, E{1, 1, 1}});
  const auto pmi = compute_pmi(c);
  CHECK(pmi.nnz() == 4);
  for (double v : pmi.values()) CHECK(v == 0.0);
  CHECK(compute_ppmi(c).nnz() == 0);
}

TEST_CASE("PMI of a single adjacent pair is log 2") {
  const auto t = TokenSequence::from_sentences({{"a", "b"}});
  const auto v = build_vocabulary(t, 1);
  const auto c = count_cooccurrences(t, v, 1);
  const ProbabilityModel model(c);
  CHECK(model.p_pair(0, 1) == 0.5);
  CHECK(model.p_word(0) == 0.5);
  CHECK(model.p_word(1) == 0.5);
  CHECK(compute_pmi(c).get(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const auto ppmi = compute_ppmi(c);
  CHECK(ppmi.get(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(ppmi.get(1, 0) == ppmi.get(0, 1));
}

TEST_CASE("PPMI clamps negative PMI and passes positive values through") {
  const auto c = counts_for(4);
  const auto pmi = compute_pmi(c);
  const auto ppmi = compute_ppmi(c);
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < pmi.rows(); ++i) {
    for (std::size_t j = 0; j < pmi.cols(); ++j) {
      const double v = pmi.get(i, j);
      if (v < 0) {
        ++negatives;
        CHECK(ppmi.get(i, j) == 0.0);
      } else {
        CHECK(ppmi.get(i, j) == v);
      }
    }
  }
  CHECK(negatives > 0);
}

TEST_CASE("PPMI equals the dense oracle on every pair") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto sents = random_corpus(seed);
    const auto t = TokenSequence::from_sentences(sents);
    const auto v = build_vocabulary(t, 3);
    const auto expected = oracle::dense_ppmi(oracle::brute_force_counts(sents, index_map(v), 2));
    const auto ppmi = compute_ppmi(count_cooccurrences(t, v, 2)).to_dense();
    CHECK(oracle::max_abs(ppmi - expected) <= 1e-10);
  }
}

TEST_CASE("probability model normalization") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = counts_for(seed);
    const ProbabilityModel m(c);
    double pairs = 0, words = 0;
    for (std::size_t i = 0; i < c.n(); ++i) {
      words += m.p_word(i);
      for (std::size_t j = 0; j < c.n(); ++j) pairs += m.p_pair(i, j);
    }
    CHECK(std::abs(pairs - 1.0) <= 1e-12);
    CHECK(std::abs(words - 1.0) <= 1e-12);
  }
}

TEST_CASE("PPMI is symmetric, positive and scale invariant") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = counts_for(seed);
    const auto p = compute_ppmi(c);
    CHECK(p.rows() == c.n());
    CHECK(p.cols() == c.n());
    CHECK(p.is_symmetric());
    for (std::size_t i = 0; i < p.rows(); ++i) {
      for (std::size_t j = i; j < p.cols(); ++j) CHECK(p.get(i, j) == p.get(j, i));
    }
    for (double v : p.values()) CHECK(v > 0.0);
    for (std::uint64_t k : {2u, 3u, 1000u}) {
      const auto scaled = compute_ppmi(c.scaled(k));
      REQUIRE(scaled.nnz() == p.nnz());
      CHECK(oracle::max_abs(scaled.to_dense() - p.to_dense()) <= 1e-12);
    }
  }
}

TEST_CASE("empty counts and inconsistent marginals are errors") {
  const CooccurrenceCounts empty(3, 2, {});
  CHECK_THROWS_AS(compute_ppmi(empty), ArgumentError);

  const CooccurrenceCounts c(3, 1, {E{0, 1, 2}, E{1, 0, 2}, E{1, 2, 1}, E{2, 1, 1}});
  const std::vector<std::uint64_t> unigrams{5, 0, 3};
  PmiOptions opts;
  opts.estimator = MarginalEstimator::kUnigram;
  opts.unigram_counts = unigrams;
  CHECK_THROWS_AS(compute_ppmi(c, opts), ConsistencyError);

  const std::vector<std::uint64_t> short_counts{1, 2};
  opts.unigram_counts = short_counts;
  CHECK_THROWS_AS(compute_ppmi(c, opts), ArgumentError);
}

TEST_CASE("unigram estimator uses corpus frequencies") {
  const CooccurrenceCounts c(2, 1, {E{0, 1, 3}, E{1, 0, 3}});
  const std::vector<std::uint64_t> unigrams{1, 3};
  PmiOptions opts;
  opts.estimator = MarginalEstimator::kUnigram;
  opts.unigram_counts = unigrams;
  // p(0,1) = 1/2, p(0) = 1/4, p(1) = 3/4.
  CHECK(compute_pmi(c, opts).get(0, 1) == doctest::Approx(std::log(0.5 / (0.25 * 0.75))));
}
