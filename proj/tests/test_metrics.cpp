#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "ladder/error.hpp"
#include "ladder/metrics.hpp"
#include "oracles.hpp"

using namespace ladder;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& e : v) e = u(rng);
  return v;
}

Matrix random_unit_rows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g;
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i).normalize();
  return m;
}

// Top-K by descending value, lower index first on ties.
std::vector<std::size_t> top_k(const std::vector<double>& s, std::size_t k) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b] || (s[a] == s[b] && a < b); });
  idx.resize(k);
  return idx;
}

std::optional<double> cs_oracle(const std::vector<double>& s, const std::vector<double>& r, std::size_t k) {
  const auto top = top_k(s, k);
  std::vector<double> a, b;
  for (auto i : top) {
    a.push_back(s[i]);
    b.push_back(r[i]);
  }
  const auto c = oracle::count_pairs(a, b);
  if (c.concordant + c.discordant + c.ties_x_only == 0 || c.concordant + c.discordant + c.ties_y_only == 0) {
    return std::nullopt;
  }
  return oracle::tau_b(a, b);
}

}  // namespace

TEST_CASE("kendall_tau examples") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(kendall_tau(x, x) == 1.0);
  CHECK(kendall_tau(x, std::vector<double>{4, 3, 2, 1}) == -1.0);
  CHECK(kendall_tau(x, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(4.0 / 6.0));
  std::vector<double> cubed;
  for (double v : x) cubed.push_back(v * v * v + 7.0);
  CHECK(kendall_tau(x, cubed) == 1.0);
}

TEST_CASE("kendall_tau rejects degenerate input") {
  const std::vector<double> c{2, 2, 2}, x{1, 2, 3};
  for (auto [a, b] : {std::pair{c, x}, std::pair{x, c}, std::pair{std::vector<double>{1}, std::vector<double>{1}}}) {
    try {
      kendall_tau(a, b);
      FAIL("expected DegenerateInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degenerate_input);
    }
  }
  CHECK_THROWS_AS(kendall_tau(x, std::vector<double>{1, 2}), Error);
}

TEST_CASE("kendall_tau equals the pair-count oracle on every permutation up to n=7") {
  for (std::size_t n = 2; n <= 7; ++n) {
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 0.0);
    std::iota(y.begin(), y.end(), 0.0);
    std::size_t count = 0;
    do {
      CHECK(kendall_tau(x, y) == oracle::tau_b(x, y));
      ++count;
    } while (std::next_permutation(y.begin(), y.end()));
    if (n == 7) CHECK(count == 5040);
  }
}

TEST_CASE("kendall_tau equals the oracle on random tied vectors") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> len(2, 60);
  std::uniform_int_distribution<int> levels(2, 6);
  int compared = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = len(rng);
    std::uniform_int_distribution<int> vx(0, levels(rng)), vy(0, levels(rng));
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = vx(rng);
    for (auto& v : y) v = vy(rng);
    const bool constant = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end() ||
                          std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end();
    if (constant) {
      CHECK_THROWS_AS(kendall_tau(x, y), Error);
      continue;
    }
    CHECK(kendall_tau(x, y) == oracle::tau_b(x, y));
    ++compared;
  }
  CHECK(compared > 9000);
}

TEST_CASE("kendall_tau symmetry and negation") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 500; ++t) {
    const auto x = random_vec(rng, 30), y = random_vec(rng, 30);
    std::vector<double> neg(y.size());
    std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
    CHECK(kendall_tau(x, y) == kendall_tau(y, x));
    CHECK(kendall_tau(x, neg) == -kendall_tau(x, y));
  }
}

TEST_CASE("ranking breaks ties by lower index") {
  const std::vector<double> s{0.5, 0.9, 0.5, 0.9, 0.1};
  CHECK(ranking(s, 5) == std::vector<std::size_t>{1, 3, 0, 2, 4});
  CHECK(ranking(s, 2) == std::vector<std::size_t>{1, 3});
  const std::vector<std::size_t> gt{2};
  CHECK(ground_truth_rank(s, gt) == 4);
  const std::vector<std::size_t> gts{2, 3};
  CHECK(ground_truth_rank(s, gts) == 2);
}

TEST_CASE("coherent_score examples") {
  std::mt19937_64 rng(23);
  const auto s = random_vec(rng, 50);
  CHECK(coherent_score(s, s, 10) == 1.0);
  std::vector<double> neg(s.size());
  std::transform(s.begin(), s.end(), neg.begin(), [](double v) { return -v; });
  CHECK(coherent_score(s, neg, 10) == -1.0);
  const std::vector<double> flat(50, 0.3);
  CHECK_FALSE(coherent_score(s, flat, 10).has_value());
}

TEST_CASE("coherent_score matches the top-K oracle and is argsort invariant") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 500; ++t) {
    auto s = random_vec(rng, 40);
    auto r = random_vec(rng, 40);
    if (t % 3 == 0) {
      for (auto& v : s) v = std::round(v * 5) / 5;
      for (auto& v : r) v = std::round(v * 3) / 3;
    }
    const std::size_t k = 2 + t % 39;
    const auto got = coherent_score(s, r, k);
    const auto want = cs_oracle(s, r, k);
    REQUIRE(got.has_value() == want.has_value());
    if (got) CHECK(*got == *want);

    std::vector<double> warped(s.size());
    std::transform(s.begin(), s.end(), warped.begin(), [](double v) { return std::exp(3.0 * v) - 2.0; });
    const auto again = coherent_score(warped, r, k);
    REQUIRE(again.has_value() == got.has_value());
    if (got) CHECK(*again == *got);
  }
}

TEST_CASE("coherent_score of independent random rows is near zero") {
  std::mt19937_64 rng(25);
  double sum = 0.0;
  for (int q = 0; q < 1000; ++q) sum += *coherent_score(random_vec(rng, 1000), random_vec(rng, 1000), 100);
  CHECK(std::abs(sum / 1000.0) < 0.05);
}

TEST_CASE("recall_at_k and mean_rank") {
  const std::vector<std::size_t> ones{1, 1, 1};
  CHECK(recall_at_k(ones, 1) == 100.0);
  CHECK(mean_rank(ones) == 1.0);
  const std::vector<std::size_t> r{1, 6, 2, 11};
  CHECK(recall_at_k(r, 5) == 50.0);
  CHECK(recall_at_k(std::vector<std::size_t>{7, 9}, 5) == 0.0);
  CHECK(mean_rank(std::vector<std::size_t>{1, 3}) == 2.0);
  CHECK(mean_rank(std::vector<std::size_t>{930}) == 930.0);

  std::mt19937_64 rng(26);
  std::uniform_int_distribution<std::size_t> rank(1, 50);
  std::vector<std::size_t> ranks(200);
  for (auto& v : ranks) v = rank(rng);
  double prev = 0.0;
  for (std::size_t k = 1; k <= 50; ++k) {
    const double cur = recall_at_k(ranks, k);
    CHECK(cur >= prev);
    CHECK(cur <= 100.0);
    prev = cur;
  }
  CHECK(prev == 100.0);
}

TEST_CASE("evaluate on an identity structure is perfect") {
  std::mt19937_64 rng(27);
  const auto e = random_unit_rows(rng, 30, 8);
  const Matrix sims = e * e.transpose();
  const std::vector<std::size_t> ks{5, 30};
  const auto report = evaluate({e, e}, sims, ks);
  REQUIRE(report.directions.size() == 2);
  for (const auto& d : report.directions) {
    CHECK(d.r1 == 100.0);
    CHECK(d.mean_rank == 1.0);
    CHECK(d.find(5)->mean == doctest::Approx(1.0));
    CHECK(d.find(30)->mean == doctest::Approx(1.0));
    CHECK(d.n_queries == 30);
  }
}

TEST_CASE("evaluate matches a brute-force 5-query computation") {
  Matrix q(5, 2), c(5, 2);
  q << 1, 0, 0.8, 0.6, 0, 1, -0.6, 0.8, -1, 0;
  c << 0.6, 0.8, 1, 0, 0.8, -0.6, 0, -1, -0.8, 0.6;
  Matrix rel(5, 5);
  rel << 1.0, 0.2, 0.7, 0.4, 0.1,  //
      0.3, 1.0, 0.5, 0.5, 0.9,     //
      0.6, 0.2, 1.0, 0.8, 0.3,     //
      0.1, 0.4, 0.2, 1.0, 0.7,     //
      0.5, 0.3, 0.9, 0.6, 1.0;
  const std::vector<std::size_t> ks{3};
  const auto report = evaluate({q, c}, rel, ks);

  for (int dir = 0; dir < 2; ++dir) {
    std::vector<std::size_t> ranks;
    double cs_sum = 0.0;
    std::size_t cs_n = 0;
    for (int i = 0; i < 5; ++i) {
      std::vector<double> s(5), r(5);
      for (int p = 0; p < 5; ++p) {
        s[p] = dir == 0 ? oracle::dot({q(i, 0), q(i, 1)}, {c(p, 0), c(p, 1)})
                        : oracle::dot({c(i, 0), c(i, 1)}, {q(p, 0), q(p, 1)});
        r[p] = rel(i, p);
      }
      const auto order = top_k(s, 5);
      ranks.push_back(static_cast<std::size_t>(std::find(order.begin(), order.end(), i) - order.begin()) + 1);
      if (auto v = cs_oracle(s, r, 3)) {
        cs_sum += *v;
        ++cs_n;
      }
    }
    const auto& d = report.direction(dir == 0 ? Direction::query_to_candidate : Direction::candidate_to_query);
    CHECK(d.ranks == ranks);
    double r1 = 0, r5 = 0, mr = 0;
    for (auto r : ranks) {
      r1 += r <= 1;
      r5 += r <= 5;
      mr += static_cast<double>(r);
    }
    CHECK(d.r1 == doctest::Approx(100.0 * r1 / 5));
    CHECK(d.r5 == doctest::Approx(100.0 * r5 / 5));
    CHECK(d.mean_rank == doctest::Approx(mr / 5));
    CHECK(d.find(3)->defined == cs_n);
    CHECK(d.find(3)->mean == doctest::Approx(cs_sum / static_cast<double>(cs_n)));
  }
}

TEST_CASE("evaluate on random embeddings: mean rank near N/2") {
  std::mt19937_64 rng(28);
  const auto q = random_unit_rows(rng, 1000, 32), c = random_unit_rows(rng, 1000, 32);
  Matrix rel(1000, 1000);
  std::uniform_real_distribution<double> u(0, 1);
  for (Eigen::Index i = 0; i < rel.size(); ++i) rel.data()[i] = u(rng);
  const std::vector<std::size_t> ks{100, 1000};
  const auto report = evaluate({q, c}, rel, ks);
  for (const auto& d : report.directions) {
    CHECK(d.mean_rank > 450.0);
    CHECK(d.mean_rank < 550.0);
    CHECK(std::abs(d.find(100)->mean) < 0.05);
    CHECK(std::abs(d.find(1000)->mean) < 0.05);
  }
  const auto again = evaluate({q, c}, rel, ks);
  CHECK(report_to_json(again) == report_to_json(report));
}

TEST_CASE("evaluate rejects K outside [2, N]") {
  std::mt19937_64 rng(29);
  const auto e = random_unit_rows(rng, 5, 3);
  const Matrix rel = Matrix::Identity(5, 5);
  CHECK_THROWS_AS(evaluate({e, e}, rel, std::vector<std::size_t>{6}), Error);
  CHECK_THROWS_AS(evaluate({e, e}, rel, std::vector<std::size_t>{1}), Error);
}

TEST_CASE("report serialization") {
  std::mt19937_64 rng(30);
  const auto q = random_unit_rows(rng, 40, 4), c = random_unit_rows(rng, 40, 4);
  Matrix rel(40, 40);
  std::uniform_real_distribution<double> u(0, 1);
  for (Eigen::Index i = 0; i < rel.size(); ++i) rel.data()[i] = u(rng);
  const std::vector<std::size_t> ks{5, 20};
  const auto report = evaluate({q, c}, rel, ks);

  const auto json = nlohmann::json::parse(report_to_json(report));
  REQUIRE(json.is_array());
  REQUIRE(json.size() == 2);
  for (const auto& obj : json) {
    for (const char* key : {"direction", "K", "cs_mean", "r1", "r5", "r10", "mean_rank", "n_queries"}) {
      CHECK(obj.contains(key));
    }
  }
  CHECK(json[0]["direction"] == "x2y");
  CHECK(json[1]["direction"] == "y2x");

  const auto back = report_from_json(report_to_json(report));
  REQUIRE(back.directions.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = report.directions[i];
    const auto& b = back.directions[i];
    CHECK(a.direction == b.direction);
    CHECK(a.r1 == b.r1);
    CHECK(a.r5 == b.r5);
    CHECK(a.r10 == b.r10);
    CHECK(a.mean_rank == b.mean_rank);
    CHECK(a.n_queries == b.n_queries);
    REQUIRE(b.coherent.size() == 2);
    CHECK(a.coherent[0].k == b.coherent[0].k);
    CHECK(a.coherent[1].mean == b.coherent[1].mean);
  }
  CHECK(report_to_json(back) == report_to_json(report));

  const auto text = report_to_text(report);
  CHECK(text.find("direction=x2y K=5 cs_mean=") != std::string::npos);
  CHECK(text.find("n_queries=40") != std::string::npos);
}

TEST_CASE("undefined coherent scores serialize as null") {
  const Matrix e = Matrix::Identity(4, 4);
  const auto report = evaluate({e, e}, Matrix::Zero(4, 4), std::vector<std::size_t>{3});
  CHECK(std::isnan(report.directions[0].coherent[0].mean));
  CHECK(report.directions[0].coherent[0].defined == 0);
  const auto json = nlohmann::json::parse(report_to_json(report));
  CHECK(json[0]["cs_mean"][0].is_null());
  CHECK(std::isnan(report_from_json(report_to_json(report)).directions[0].coherent[0].mean));
}
