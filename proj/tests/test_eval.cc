#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "oracles.h"
#include "pmiemb/error.h"
#include "pmiemb/eval.h"

using namespace pmiemb;
using Eigen::MatrixXd;

namespace {

std::shared_ptr<const Vocabulary> vocab_of(std::size_t n) {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back("w" + std::to_string(i));
    counts.push_back(1000 - i);
  }
  return std::make_shared<const Vocabulary>(words, counts, 1);
}

std::string w(std::size_t i) { return "w" + std::to_string(i); }

EmbeddingMatrix random_embeddings(std::size_t n, std::size_t d, std::uint64_t seed,
                                  double lo = -1.0) {
  return EmbeddingMatrix(vocab_of(n),
                         oracle::random_dense(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(d), seed, lo, 1.0),
                         lo < 0 ? EmbeddingMethod::kSvd : EmbeddingMethod::kNmf);
}

SimilarityDataset random_similarity(std::size_t n_words, std::size_t n_pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> word(0, n_words + 3);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  SimilarityDataset ds;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  // Indices past n_words are out of vocabulary. Repeated or self pairs would
  // make cosine ties that rounding can break either way.
  while (ds.pairs.size() < n_pairs) {
    const auto i = word(rng), j = word(rng);
    if (i == j || !seen.insert({std::min(i, j), std::max(i, j)}).second) continue;
    ds.pairs.push_back({w(i), w(j), std::round(score(rng) * 2) / 2});
  }
  return ds;
}

AnalogyDataset random_analogies(std::size_t n_words, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> word(0, n_words + 1);
  AnalogyDataset ds;
  for (std::size_t k = 0; k < n; ++k) {
    ds.questions.push_back({w(word(rng)), w(word(rng)), w(word(rng)), w(word(rng)),
                            k % 2 ? "odd" : "even"});
  }
  return ds;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "pmiemb_eval_test") {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string write(const std::string &name, const std::string &text) const {
    std::ofstream((path / name).string()) << text;
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("spearman examples") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(spearman(x, x) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(x, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(0.8));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{2, 2, 2, 2}), UndefinedCorrelationError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), ArgumentError);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), ArgumentError);
}

TEST_CASE("spearman with ties matches the counting-rank oracle") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(25), y(25);
    for (auto &v : x) v = small(rng);
    for (auto &v : y) v = small(rng) * 0.5;
    const double rho = spearman(x, y);
    CHECK(rho == doctest::Approx(oracle::spearman(x, y)).epsilon(1e-12));
    CHECK(std::abs(rho) <= 1.0);
  }
}

TEST_CASE("cosine") {
  Eigen::RowVectorXd a(3), b(3), z = Eigen::RowVectorXd::Zero(3);
  a << 1, 0, 0;
  b << 1, 1, 0;
  CHECK(cosine(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(cosine(a, -a) == doctest::Approx(-1.0));
  CHECK(cosine(a, z) == 0.0);
}

TEST_CASE("similarity evaluation") {
  SUBCASE("ordered cosines give rho one") {
    MatrixXd v(4, 2);
    v << 1, 0, 1, 0.1, 1, 1, 0, 1;
    const EmbeddingMatrix e(vocab_of(4), v, EmbeddingMethod::kSvd);
    SimilarityDataset ds{{{"w0", "w1", 9.0}, {"w0", "w2", 5.0}, {"w0", "w3", 1.0}, {"w0", "zz", 3.0}}};
    const auto r = eval_similarity(e, ds);
    CHECK(r.task == "similarity");
    CHECK(r.score == doctest::Approx(1.0));
    CHECK(r.n_used == 3);
    CHECK(r.n_skipped_oov == 1);
  }
  SUBCASE("fewer than two usable pairs") {
    const auto e = random_embeddings(5, 3, 1);
    CHECK_THROWS_AS(eval_similarity(e, SimilarityDataset{{{"x", "y", 1.0}, {"w0", "q", 2.0}}}),
                    InsufficientDataError);
    CHECK_THROWS_AS(eval_similarity(e, SimilarityDataset{{{"w0", "w1", 1.0}}}), InsufficientDataError);
  }
  SUBCASE("brute force over random toy sets") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto e = random_embeddings(30, 6, seed);
      const auto ds = random_similarity(30, 40, seed);
      std::vector<double> cos, human;
      std::size_t skipped = 0;
      for (const auto &p : ds.pairs) {
        const auto i = e.vocab().index_of(p.word1), j = e.vocab().index_of(p.word2);
        if (!i || !j) {
          ++skipped;
          continue;
        }
        cos.push_back(oracle::cosine(e.vectors(), static_cast<Eigen::Index>(*i),
                                     static_cast<Eigen::Index>(*j)));
        human.push_back(p.human_score);
      }
      const auto r = eval_similarity(e, ds);
      CHECK(r.n_skipped_oov == skipped);
      CHECK(r.n_used + r.n_skipped_oov == ds.pairs.size());
      CHECK(r.score == doctest::Approx(oracle::spearman(cos, human)).epsilon(1e-12));
    }
  }
}

TEST_CASE("solve_analogy") {
  SUBCASE("an exactly realizable answer is found") {
    MatrixXd v(5, 2);
    v << 0, 0, 1, 0, 0, 1, 1, 1, 5, 5;
    const EmbeddingMatrix e(vocab_of(5), v, EmbeddingMethod::kSvd);
    CHECK(solve_analogy(e, "w0", "w1", "w2") == "w3");
    CHECK(solve_analogy(e, "w0", "w1", "w2", AnalogyMetric::kCosine) == "w3");
  }
  SUBCASE("a == b returns the nearest other word to c") {
    MatrixXd v(4, 1);
    v << 0, 10, 3, 3.5;
    const EmbeddingMatrix e(vocab_of(4), v, EmbeddingMethod::kSvd);
    CHECK(solve_analogy(e, "w0", "w0", "w2") == "w3");
  }
  SUBCASE("ties go to the lower index") {
    MatrixXd v(5, 1);
    v << 0, 0, 0, 1, -1;
    const EmbeddingMatrix e(vocab_of(5), v, EmbeddingMethod::kSvd);
    CHECK(solve_analogy(e, "w0", "w1", "w2") == "w3");
  }
  SUBCASE("out-of-vocabulary query") {
    const auto e = random_embeddings(5, 2, 3);
    try {
      solve_analogy(e, "w0", "nope", "w1");
      FAIL("expected OovError");
    } catch (const OovError &err) {
      CHECK(err.word() == "nope");
    }
  }
  SUBCASE("exhaustive scan on toy sets; the answer is never a query word") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto e = random_embeddings(20, 4, seed);
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<Eigen::Index> pick(0, 19);
      for (int q = 0; q < 30; ++q) {
        const Eigen::Index a = pick(rng), b = pick(rng), c = pick(rng);
        const auto got = solve_analogy(e, w(static_cast<std::size_t>(a)),
                                       w(static_cast<std::size_t>(b)), w(static_cast<std::size_t>(c)));
        CHECK(got == w(static_cast<std::size_t>(oracle::analogy_argmin(e.vectors(), a, b, c))));
        CHECK(got != w(static_cast<std::size_t>(a)));
        CHECK(got != w(static_cast<std::size_t>(b)));
        CHECK(got != w(static_cast<std::size_t>(c)));
      }
    }
  }
}

TEST_CASE("analogy evaluation") {
  SUBCASE("realizable answers give accuracy one") {
    MatrixXd v(6, 2);
    v << 0, 0, 1, 0, 0, 2, 1, 2, 10, 0, 11, 0;
    const EmbeddingMatrix e(vocab_of(6), v, EmbeddingMethod::kSvd);
    AnalogyDataset ds{{{"w0", "w1", "w2", "w3", "s"}, {"w0", "w1", "w4", "w5", "s"},
                       {"w0", "w1", "w2", "oov", "t"}}};
    const auto r = eval_analogy(e, ds);
    CHECK(r.score == 1.0);
    CHECK(r.n_used == 2);
    CHECK(r.n_skipped_oov == 1);
    CHECK(r.sections.at("s").correct == 2);
    CHECK(r.sections.at("t").skipped_oov == 1);
  }
  SUBCASE("nothing usable") {
    const auto e = random_embeddings(5, 2, 3);
    CHECK_THROWS_AS(eval_analogy(e, AnalogyDataset{{{"a", "b", "c", "d", "s"}}}),
                    InsufficientDataError);
  }
  SUBCASE("brute force over 50-question toy sets") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto e = random_embeddings(20, 3, seed);
      const auto ds = random_analogies(20, 50, seed);
      std::size_t used = 0, correct = 0;
      for (const auto &q : ds.questions) {
        const auto a = e.vocab().index_of(q.a), b = e.vocab().index_of(q.b),
                   c = e.vocab().index_of(q.c), d = e.vocab().index_of(q.d);
        if (!a || !b || !c || !d) continue;
        ++used;
        const auto best = oracle::analogy_argmin(e.vectors(), static_cast<Eigen::Index>(*a),
                                                 static_cast<Eigen::Index>(*b),
                                                 static_cast<Eigen::Index>(*c));
        if (best == static_cast<Eigen::Index>(*d)) ++correct;
      }
      const auto r = eval_analogy(e, ds);
      CHECK(r.n_used == used);
      CHECK(r.n_used + r.n_skipped_oov == ds.questions.size());
      CHECK(r.score == static_cast<double>(correct) / static_cast<double>(used));
      std::size_t section_used = 0;
      for (const auto &[name, s] : r.sections) section_used += s.used;
      CHECK(section_used == used);
    }
  }
}

TEST_CASE("scores are invariant under rotation and positive scaling") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto e = random_embeddings(25, 5, seed);
    const MatrixXd rot = oracle::random_orthonormal(5, 5, seed + 100);
    const EmbeddingMatrix rotated(e.vocab_ptr(), 3.5 * e.vectors() * rot, EmbeddingMethod::kSvd);
    const auto sim = random_similarity(25, 40, seed);
    CHECK(eval_similarity(rotated, sim).score ==
          doctest::Approx(eval_similarity(e, sim).score).epsilon(1e-12));
    const auto ana = random_analogies(25, 60, seed);
    CHECK(eval_analogy(rotated, ana).score == eval_analogy(e, ana).score);
  }
}

TEST_CASE("negativity check") {
  AnalogyDataset ds{{{"w0", "w1", "w2", "w3", "s"}, {"w1", "w0", "w2", "oov", "s"},
                     {"oov", "w0", "w1", "w2", "s"}}};
  SUBCASE("all-zero embeddings have no negative component") {
    const EmbeddingMatrix e(vocab_of(4), MatrixXd::Zero(4, 3), EmbeddingMethod::kNmf);
    const auto r = negativity_check(e, ds);
    CHECK(r.fraction == 0.0);
    CHECK(r.used == 2);
    CHECK(r.skipped_oov == 1);
    CHECK(r.input_nonnegative);
  }
  SUBCASE("a dominating entry makes the triplet negative") {
    MatrixXd v = MatrixXd::Constant(4, 3, 1.0);
    v(0, 1) = 5.0;  // w0 as a: b - a + c has -3 in component 1
    const EmbeddingMatrix e(vocab_of(4), v, EmbeddingMethod::kNmf);
    const auto r = negativity_check(e, ds);
    CHECK(r.with_negative == 1);
    CHECK(r.fraction == 0.5);
  }
  SUBCASE("signed input is flagged but still counted") {
    const auto e = random_embeddings(4, 3, 1);
    const auto r = negativity_check(e, ds);
    CHECK_FALSE(r.input_nonnegative);
    CHECK(r.used == 2);
  }
  SUBCASE("sign noise at zero does not count") {
    // b - a + c = (-1e-13, 0).
    MatrixXd v = MatrixXd::Constant(4, 2, 1.0);
    v(0, 0) = 1.0 + 1e-13;
    v.row(2).setZero();
    const EmbeddingMatrix e(vocab_of(4), v, EmbeddingMethod::kNmf);
    CHECK(negativity_check(e, AnalogyDataset{{{"w0", "w1", "w2", "w3", "s"}}}).fraction == 0.0);
  }
}

TEST_CASE("Gaussian non-negativity probability") {
  CHECK(gaussian_nonneg_prob(4.5, 1.0, 500) == doctest::Approx(0.9983).epsilon(3e-4));
  const double p3 = gaussian_nonneg_prob(4.5, 3.0, 500);
  CHECK(p3 >= 0.08);
  CHECK(p3 <= 0.12);
  CHECK(gaussian_nonneg_prob(0.0, 7.0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  // Phi from erfc directly.
  for (double z : {-3.0, -0.5, 0.7, 2.0, 6.0}) {
    const double phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
    CHECK(gaussian_nonneg_prob(z * 2.0, 4.0, 1) == doctest::Approx(phi).epsilon(1e-12));
    double prev = 1.0;
    for (std::size_t d : {1u, 2u, 10u, 100u, 1000u}) {
      const double p = gaussian_nonneg_prob(z * 2.0, 4.0, d);
      CHECK(p < prev);
      CHECK(p == doctest::Approx(std::pow(phi, static_cast<double>(d))).epsilon(1e-10));
      prev = p;
    }
  }
  CHECK_THROWS_AS(gaussian_nonneg_prob(1.0, 0.0, 3), ArgumentError);
  CHECK_THROWS_AS(gaussian_nonneg_prob(1.0, 1.0, 0), ArgumentError);
}

TEST_CASE("dataset loaders") {
  TempDir dir;
  const auto sim = load_similarity_dataset(
      dir.write("sim.csv", "Word 1,Word 2,Human (mean)\nTiger,Cat,7.35\nbook\tpaper\t7.46\n\n"));
  REQUIRE(sim.pairs.size() == 2);
  CHECK(sim.pairs[0].word1 == "tiger");
  CHECK(sim.pairs[0].word2 == "cat");
  CHECK(sim.pairs[0].human_score == 7.35);
  CHECK(sim.pairs[1].word2 == "paper");
  CHECK(load_similarity_dataset(dir.write("nohead.csv", "a,b,1\nc,d,2\n")).pairs.size() == 2);

  try {
    load_similarity_dataset(dir.write("bad.csv", "w1,w2,score\na,b,1\nc,d,high\n"));
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_similarity_dataset(dir.write("short.csv", "a,b,1\nc\n")), ParseError);
  CHECK_THROWS_AS(load_similarity_dataset((dir.path / "missing.csv").string()), IoError);

  const auto ana = load_analogy_dataset(
      dir.write("q.txt", ": capital-common-countries\nAthens Greece Baghdad Iraq\n: family\n"
                         "boy girl brother sister\n"));
  REQUIRE(ana.questions.size() == 2);
  CHECK(ana.questions[0].a == "athens");
  CHECK(ana.questions[0].section == "capital-common-countries");
  CHECK(ana.questions[1].d == "sister");
  CHECK(ana.questions[1].section == "family");
  CHECK_THROWS_AS(load_analogy_dataset(dir.write("bad.txt", ": s\na b c\n")), ParseError);
}
