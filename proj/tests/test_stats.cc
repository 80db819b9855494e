#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include "pmiemb/error.h"
#include "pmiemb/special_functions.h"
#include "pmiemb/stats.h"

using namespace pmiemb;

namespace {

// Residual sum of squares of the least-squares fit of y on X.
double rss(const Eigen::MatrixXd &x, const Eigen::VectorXd &y) {
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  return (y - x * beta).squaredNorm();
}

struct OracleAnova {
  double ss_a, ss_b, ss_ab, ss_error, ss_total;
};

// Sequential dummy-variable regressions: 1, +A, +B, +AB.
OracleAnova regression_anova(const std::vector<Observation> &obs) {
  std::vector<std::string> as;
  std::vector<long> bs;
  for (const auto &o : obs) {
    if (std::find(as.begin(), as.end(), o.method) == as.end()) as.push_back(o.method);
    if (std::find(bs.begin(), bs.end(), o.dimension) == bs.end()) bs.push_back(o.dimension);
  }
  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto a = static_cast<Eigen::Index>(as.size()), b = static_cast<Eigen::Index>(bs.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Ones(n, 1);
  Eigen::MatrixXd xa = Eigen::MatrixXd::Zero(n, a - 1), xb = Eigen::MatrixXd::Zero(n, b - 1);
  Eigen::MatrixXd xab = Eigen::MatrixXd::Zero(n, (a - 1) * (b - 1));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto &o = obs[static_cast<std::size_t>(k)];
    y(k) = o.score;
    const auto i = std::find(as.begin(), as.end(), o.method) - as.begin();
    const auto j = std::find(bs.begin(), bs.end(), o.dimension) - bs.begin();
    if (i > 0) xa(k, i - 1) = 1;
    if (j > 0) xb(k, j - 1) = 1;
    if (i > 0 && j > 0) xab(k, (i - 1) * (b - 1) + (j - 1)) = 1;
  }
  const auto cat = [](std::initializer_list<const Eigen::MatrixXd *> parts) {
    Eigen::Index cols = 0;
    for (auto *p : parts) cols += p->cols();
    Eigen::MatrixXd out((*parts.begin())->rows(), cols);
    Eigen::Index c = 0;
    for (auto *p : parts) {
      out.middleCols(c, p->cols()) = *p;
      c += p->cols();
    }
    return out;
  };
  const double r0 = rss(x0, y);
  const double r1 = rss(cat({&x0, &xa}), y);
  const double r2 = rss(cat({&x0, &xa, &xb}), y);
  const double r3 = rss(cat({&x0, &xa, &xb, &xab}), y);
  return {r0 - r1, r1 - r2, r2 - r3, r3, r0};
}

std::vector<Observation> random_design(std::size_t a, std::size_t b, std::size_t r,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double effect = 0.7 * static_cast<double>(i) - 0.3 * static_cast<double>(j * i);
      for (std::size_t k = 0; k < r; ++k) {
        obs.push_back({"m" + std::to_string(i), static_cast<long>(50 * (j + 1)), k + 1,
                       effect + noise(rng)});
      }
    }
  }
  std::shuffle(obs.begin(), obs.end(), rng);
  return obs;
}

std::vector<ScoreRow> table1() { return load_score_table(PMIEMB_TEST_DATA "/table1.csv"); }

void check_rel(double got, double want, double rel) {
  CHECK(std::abs(got - want) <= rel * std::max(std::abs(want), 1e-300));
}

}  // namespace

TEST_CASE("ANOVA sums of squares match dummy-variable regression") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t a = 2 + seed % 3, b = 2 + seed % 2, r = 2 + seed % 3;
    const auto obs = random_design(a, b, r, seed);
    const auto res = two_way_anova(obs);
    const auto ref = regression_anova(obs);
    check_rel(res.effects.row("Factorization").ss, ref.ss_a, 1e-9);
    check_rel(res.effects.row("Dimension").ss, ref.ss_b, 1e-9);
    check_rel(res.effects.row("Interaction").ss, ref.ss_ab, 1e-9);
    check_rel(res.overall.row("Error").ss, ref.ss_error, 1e-9);
    check_rel(res.overall.row("Corrected Total").ss, ref.ss_total, 1e-9);

    const auto &model = res.overall.row("Model");
    const auto &error = res.overall.row("Error");
    const auto &total = res.overall.row("Corrected Total");
    CHECK(model.df == a * b - 1);
    CHECK(error.df == a * b * (r - 1));
    CHECK(model.df + error.df == total.df);
    check_rel(model.ss + error.ss, total.ss, 1e-9);
    check_rel(res.effects.row("Factorization").ss + res.effects.row("Dimension").ss +
                  res.effects.row("Interaction").ss,
              model.ss, 1e-9);
    for (const auto *table : {&res.overall, &res.effects}) {
      for (const auto &row : table->rows) {
        REQUIRE(row.ms.has_value());
        check_rel(*row.ms, row.ss / static_cast<double>(row.df), 1e-12);
      }
    }
    for (const auto &row : res.effects.rows) {
      const double f = *row.ms / *error.ms;
      check_rel(*row.f, f, 1e-12);
      const boost::math::fisher_f dist(static_cast<double>(row.df), static_cast<double>(error.df));
      CHECK(std::abs(*row.p - boost::math::cdf(boost::math::complement(dist, f))) <= 1e-10);
    }
    check_rel(res.overall.r_squared, model.ss / total.ss, 1e-12);
    check_rel(res.overall.root_mse, std::sqrt(*error.ms), 1e-12);
  }
}

TEST_CASE("ANOVA invariances: shift, scale, order") {
  const auto obs = random_design(4, 2, 3, 99);
  const auto base = two_way_anova(obs);
  auto shifted = obs, scaled = obs, reversed = obs;
  for (auto &o : shifted) o.score += 12.5;
  for (auto &o : scaled) o.score *= 3.0;
  std::reverse(reversed.begin(), reversed.end());
  const auto s = two_way_anova(shifted), k = two_way_anova(scaled), p = two_way_anova(reversed);
  for (std::size_t i = 0; i < base.effects.rows.size(); ++i) {
    const auto &b = base.effects.rows[i];
    check_rel(s.effects.rows[i].ss, b.ss, 1e-9);
    check_rel(*s.effects.rows[i].f, *b.f, 1e-9);
    CHECK(std::abs(*s.effects.rows[i].p - *b.p) <= 1e-9);
    check_rel(k.effects.rows[i].ss, 9.0 * b.ss, 1e-9);
    check_rel(*k.effects.rows[i].f, *b.f, 1e-9);
    CHECK(std::abs(*k.effects.rows[i].p - *b.p) <= 1e-9);
    CHECK(p.effects.rows[i].ss == b.ss);
    CHECK(*p.effects.rows[i].f == *b.f);
  }
  CHECK(std::abs(k.overall.r_squared - base.overall.r_squared) <= 1e-9);
  CHECK(p.overall.r_squared == base.overall.r_squared);
}

TEST_CASE("ANOVA on the published score table") {
  const auto rows = table1();
  REQUIRE(rows.size() == 16);
  SUBCASE("similarity") {
    const auto res = two_way_anova(observations_for_task(rows, "similarity"));
    CHECK(res.method_levels.size() == 4);
    CHECK(res.dimension_levels == std::vector<long>{250, 500});
    CHECK(res.replicates == 2);
    const auto &model = res.overall.row("Model");
    CHECK(model.df == 7);
    CHECK(res.overall.row("Error").df == 8);
    // Published: 0.37055017 / 0.01426728 from unrounded scores.
    CHECK(model.ss == doctest::Approx(0.37055017).epsilon(1e-4));
    CHECK(res.overall.row("Error").ss == doctest::Approx(0.01426728).epsilon(1e-4));
    CHECK(res.overall.r_squared == doctest::Approx(0.962925).epsilon(1e-3));
    CHECK(*model.f == doctest::Approx(29.68).epsilon(0.01));
    CHECK(*model.p < 1e-4);
    CHECK(*res.effects.row("Factorization").f == doctest::Approx(66.23).epsilon(0.01));
    CHECK(*res.effects.row("Dimension").f == doctest::Approx(0.06).epsilon(0.1));
    CHECK(*res.effects.row("Interaction").f == doctest::Approx(3.01).epsilon(0.01));
    CHECK(*res.effects.row("Factorization").p < 1e-4);
    CHECK(std::abs(*res.effects.row("Dimension").p - 0.8088) <= 0.01);
    CHECK(std::abs(*res.effects.row("Interaction").p - 0.0945) <= 0.005);
  }
  SUBCASE("analogy") {
    const auto res = two_way_anova(observations_for_task(rows, "analogy"));
    CHECK(res.overall.row("Model").ss == doctest::Approx(0.30745304).epsilon(1e-4));
    CHECK(*res.overall.row("Model").f == doctest::Approx(424.61).epsilon(0.01));
    CHECK(*res.effects.row("Factorization").f == doctest::Approx(978.52).epsilon(0.01));
    CHECK(*res.effects.row("Dimension").f == doctest::Approx(1.34).epsilon(0.01));
    CHECK(*res.effects.row("Interaction").f == doctest::Approx(11.78).epsilon(0.01));
    CHECK(std::abs(*res.effects.row("Interaction").p - 0.0026) <= 0.0005);
  }
}

TEST_CASE("degenerate and unbalanced designs") {
  std::vector<Observation> same;
  for (const char *m : {"a", "b"}) {
    for (long d : {1, 2}) {
      for (std::size_t r = 1; r <= 2; ++r) same.push_back({m, d, r, 0.5});
    }
  }
  const auto res = two_way_anova(same);
  for (const auto *table : {&res.overall, &res.effects}) {
    for (const auto &row : table->rows) {
      CHECK(row.ss == 0.0);
      CHECK_FALSE(row.f.has_value());
      CHECK_FALSE(row.p.has_value());
    }
  }
  for (double r : residuals(same)) CHECK(r == 0.0);

  auto missing = same;
  missing.pop_back();
  CHECK_THROWS_AS(two_way_anova(missing), DesignError);
  auto one_rep = same;
  one_rep.erase(std::remove_if(one_rep.begin(), one_rep.end(),
                               [](const Observation &o) { return o.replicate == 2; }),
                one_rep.end());
  CHECK_THROWS_AS(two_way_anova(one_rep), DesignError);
  std::vector<Observation> one_level;
  for (std::size_t r = 1; r <= 2; ++r) {
    one_level.push_back({"a", 1, r, 1.0 * r});
    one_level.push_back({"a", 2, r, 2.0 * r});
  }
  CHECK_THROWS_AS(two_way_anova(one_level), DesignError);
  auto nan = same;
  nan[3].score = std::nan("");
  CHECK_THROWS(two_way_anova(nan));
}

TEST_CASE("residuals") {
  std::vector<Observation> obs{{"a", 1, 1, 0.70}, {"a", 1, 2, 0.69}, {"a", 2, 1, 0.1},
                               {"a", 2, 2, 0.3},  {"b", 1, 1, 0.5},  {"b", 1, 2, 0.5},
                               {"b", 2, 1, 0.2},  {"b", 2, 2, 0.2}};
  const auto r = residuals(obs);
  CHECK(r[0] == doctest::Approx(0.005));
  CHECK(r[1] == doctest::Approx(-0.005));
  CHECK(r[4] == 0.0);

  const auto rows = table1();
  const auto obs1 = observations_for_task(rows, "similarity");
  const auto res1 = residuals(obs1);
  double sq = 0.0;
  for (double v : res1) sq += v * v;
  CHECK(sq == doctest::Approx(two_way_anova(obs1).overall.row("Error").ss).epsilon(1e-12));
  CHECK(sq == doctest::Approx(0.0142673).epsilon(1e-4));
  for (std::size_t k = 0; k + 1 < res1.size(); k += 2) CHECK(std::abs(res1[k] + res1[k + 1]) <= 1e-12);
}

TEST_CASE("Shapiro-Wilk agrees with reference values") {
  const auto rows = table1();
  const auto sim = shapiro_wilk(residuals(observations_for_task(rows, "similarity")));
  CHECK(sim.w == doctest::Approx(0.9673018886985001).epsilon(1e-6));
  CHECK(sim.p == doctest::Approx(0.7932369883182844).epsilon(1e-4));
  CHECK(std::abs(sim.p - 0.7923) <= 0.05);
  const auto ana = shapiro_wilk(residuals(observations_for_task(rows, "analogy")));
  CHECK(ana.w == doctest::Approx(0.9081773602118204).epsilon(1e-6));
  CHECK(ana.p == doctest::Approx(0.10876009890558658).epsilon(1e-4));
  CHECK(std::abs(ana.p - 0.112) <= 0.05);

  struct Case {
    std::vector<double> x;
    double w, p;
  };
  // scipy.stats.shapiro on fixed samples.
  const std::vector<Case> cases{
      {{2.0409191213851825, -2.5556650313141818, 0.41809884672577885}, 0.9720130953012235,
       0.6789847334832554},
      {{-0.6517911526116896, -0.17471729232577715, 1.6637239913911968, 0.659147749832255},
       0.9661453762847837, 0.8174878370001486},
      {{-0.8019314252534474, -1.324358995628145, -0.24836162209524854, 0.4204452380655215,
        1.1360465324896427},
       0.982572895002703, 0.9478991985412702},
      {{0.03419276725318417, 1.3597475403099617, 1.2247210785859324, -0.5103070767876675,
        -0.2979695111064471, -0.5273841930334252, 0.5697263575719601, -0.056064439045617594,
        0.7468856162565439, -1.8473247989741095, 1.5665487746995206},
       0.9501823554946216, 0.646284742448254},
      {{-0.006826779865523179, 1.0461432923049026, 0.7415884212884828, 0.7239565416499906,
        1.6187762233340763, -1.2055581426463289, -0.6269554710763733, -1.3206632116051251,
        -0.10775250794802987, 0.9987636553170226, -0.02194788627038025, 0.4958800664642217},
       0.9533552748626146, 0.6864298133455033},
      {{-0.35966845567139044, 1.2036751014877107, 1.3968681196180939, 0.31723592758455404,
        0.41413419203577684, -0.4895498035052234, -0.9141207048308895, -0.9003606290309881,
        -0.9984312679885344, 0.9292048240939573, -0.05629191668093178, 0.1282790949733999,
        -0.6399704392204456, -1.0878172085644096, -1.2019541755133116, -0.8415691844772564,
        0.5991567147195185, 0.01844008196322814, -0.45677163924420827, -0.23927840186540572},
       0.943728456834148, 0.2817285560628176},
  };
  for (const auto &c : cases) {
    const auto r = shapiro_wilk(c.x);
    CHECK(r.w == doctest::Approx(c.w).epsilon(1e-5));
    CHECK(r.p == doctest::Approx(c.p).epsilon(1e-4));
  }
}

TEST_CASE("Shapiro-Wilk on exact normal quantiles and bad input") {
  std::vector<double> q;
  const boost::math::normal n01;
  for (int i = 1; i <= 50; ++i) q.push_back(boost::math::quantile(n01, (i - 0.375) / 50.25));
  const auto r = shapiro_wilk(q);
  CHECK(r.w > 0.99);
  CHECK(r.w <= 1.0);
  CHECK(r.p > 0.99);

  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(10, 3.0)), ArgumentError);
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(5001, 0.0)), ArgumentError);
}

TEST_CASE("special functions against Boost") {
  const boost::math::normal n01;
  for (double x = -37.0; x <= 8.0; x += 0.37) {
    const double want = boost::math::cdf(n01, x);
    CHECK(normal_cdf(x) == doctest::Approx(want).epsilon(1e-13));
    CHECK(normal_upper_tail(-x) == doctest::Approx(want).epsilon(1e-13));
  }
  for (double p : {1e-300, 1e-20, 1e-5, 0.01, 0.2, 0.5, 0.77, 0.999, 1 - 1e-12}) {
    CHECK(normal_quantile(p) ==
          doctest::Approx(boost::math::quantile(n01, p)).epsilon(1e-13));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ab(0.05, 60.0), unit(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const double a = ab(rng), b = ab(rng), x = unit(rng);
    CHECK(std::abs(regularized_incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-12);
  }
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("F distribution upper tail") {
  CHECK(f_pvalue(0.0, 3, 8) == 1.0);
  CHECK(f_pvalue(66.23, 3, 8) < 1e-4);
  CHECK(f_pvalue(11.78, 3, 8) == doctest::Approx(0.0026).epsilon(0.1));
  for (double df1 : {1.0, 3.0, 7.0}) {
    for (double df2 : {1.0, 8.0, 40.0}) {
      const boost::math::fisher_f dist(df1, df2);
      double prev = 1.0 + 1e-12;
      for (double f = 0.0; f < 50.0; f += 0.75) {
        const double p = f_pvalue(f, df1, df2);
        CHECK(std::abs(p - boost::math::cdf(boost::math::complement(dist, f))) <= 1e-10);
        CHECK(p < prev);
        prev = p;
      }
    }
  }
}

TEST_CASE("score tables and reports") {
  const auto dir = std::filesystem::temp_directory_path() / "pmiemb_stats_test";
  std::filesystem::create_directories(dir);
  const auto rows = table1();
  save_score_table(rows, (dir / "s.csv").string());
  const auto back = load_score_table((dir / "s.csv").string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].dimension == rows[i].dimension);
    CHECK(back[i].replicate == rows[i].replicate);
    CHECK(*back[i].similarity == *rows[i].similarity);
    CHECK(*back[i].analogy == *rows[i].analogy);
  }

  std::ofstream(dir / "partial.csv") << "svd,250,1,0.5,\nsvd,250,2,,0.1\n";
  const auto partial = load_score_table((dir / "partial.csv").string());
  CHECK(observations_for_task(partial, "similarity").size() == 1);
  CHECK(observations_for_task(partial, "analogy").size() == 1);
  CHECK_THROWS_AS(observations_for_task(partial, "speed"), ArgumentError);

  std::ofstream(dir / "bad.csv") << "method,dimension,replicate,similarity,analogy\nsvd,250,1,0.5,0.1\nsvd,x,1,0.5,0.1\n";
  try {
    load_score_table((dir / "bad.csv").string());
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }

  const auto res = two_way_anova(observations_for_task(rows, "similarity"));
  const std::string text = format_anova_report(res, "Similarity");
  for (const char *needle : {"Source", "Model", "Error", "Corrected Total", "R-Square",
                             "Coeff Var", "Root MSE", "Factorization", "Dimension",
                             "Interaction", "<.0001", "29.68", "66.23"}) {
    CHECK_MESSAGE(text.find(needle) != std::string::npos, needle);
  }
  const auto json = nlohmann::json::parse(anova_to_json(res));
  CHECK(json["r_squared"].get<double>() == res.overall.r_squared);
  CHECK(json["effects"]["rows"].size() == 3);
  std::filesystem::remove_all(dir);
}
