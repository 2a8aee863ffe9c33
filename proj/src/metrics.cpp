#include "ladder/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ladder/error.hpp"

namespace ladder {

namespace {

// Sum of t*(t-1)/2 over runs of equal values in an already sorted sequence.
template <typename Key>
std::int64_t tied_pairs(std::span<const std::size_t> order, Key key) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= order.size(); ++i) {
    if (i < order.size() && key(order[i]) == key(order[i - 1])) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Stable merge sort of `order` by y, returning the number of strict inversions.
std::int64_t sort_counting_inversions(std::vector<std::size_t>& order, std::span<const double> y) {
  std::vector<std::size_t> buffer(order.size());
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < order.size(); width *= 2) {
    for (std::size_t lo = 0; lo < order.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, order.size());
      const std::size_t hi = std::min(lo + 2 * width, order.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (y[order[j]] < y[order[i]]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buffer[k++] = order[j++];
        } else {
          buffer[k++] = order[i++];
        }
      }
      while (i < mid) buffer[k++] = order[i++];
      while (j < hi) buffer[k++] = order[j++];
    }
    order.swap(buffer);
  }
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::invalid_argument, "kendall_tau inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorCode::degenerate_input, "kendall_tau needs at least two observations");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) fail(ErrorCode::invalid_argument, "kendall_tau input is NaN");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const auto pairs = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t ties_x = tied_pairs(order, [&](std::size_t i) { return x[i]; });
  const std::int64_t ties_xy =
      tied_pairs(order, [&](std::size_t i) { return std::pair<double, double>(x[i], y[i]); });
  const std::int64_t discordant = sort_counting_inversions(order, y);
  const std::int64_t ties_y = tied_pairs(order, [&](std::size_t i) { return y[i]; });

  // Pairs untied in y and pairs untied in x, i.e. C + D + T_x and C + D + T_y.
  const std::int64_t untied_y = pairs - ties_y;
  const std::int64_t untied_x = pairs - ties_x;
  if (untied_x == 0 || untied_y == 0) fail(ErrorCode::degenerate_input, "kendall_tau input is constant");

  const std::int64_t concordant_minus_discordant = pairs - ties_x - ties_y + ties_xy - 2 * discordant;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_y) * static_cast<double>(untied_x));
}

std::vector<std::size_t> ranking(std::span<const double> similarities, std::size_t k) {
  k = std::min(k, similarities.size());
  std::vector<std::size_t> idx(similarities.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return similarities[a] > similarities[b] ||
                             (similarities[a] == similarities[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

std::size_t ground_truth_rank(std::span<const double> similarities,
                              std::span<const std::size_t> ground_truths) {
  if (ground_truths.empty()) fail(ErrorCode::invalid_argument, "no ground truth given");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t g : ground_truths) {
    if (g >= similarities.size()) fail(ErrorCode::invalid_argument, "ground truth index out of range");
    const double sg = similarities[g];
    std::size_t ahead = 0;
    for (std::size_t p = 0; p < similarities.size(); ++p) {
      if (similarities[p] > sg || (similarities[p] == sg && p < g)) ++ahead;
    }
    best = std::min(best, ahead + 1);
  }
  return best;
}

std::optional<double> coherent_score(std::span<const double> similarities,
                                     std::span<const double> relevance, std::size_t k) {
  if (similarities.size() != relevance.size()) {
    fail(ErrorCode::invalid_argument, "similarity and relevance rows differ in length");
  }
  if (k < 2 || k > similarities.size()) {
    fail(ErrorCode::invalid_argument, "CS@K needs 2 <= K <= number of candidates");
  }
  const auto top = ranking(similarities, k);
  std::vector<double> sim(k), rel(k);
  for (std::size_t i = 0; i < k; ++i) {
    sim[i] = similarities[top[i]];
    rel[i] = relevance[top[i]];
  }
  try {
    return kendall_tau(sim, rel);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::degenerate_input) return std::nullopt;
    throw;
  }
}

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) fail(ErrorCode::invalid_argument, "recall over zero queries");
  std::size_t hits = 0;
  for (std::size_t r : ranks) {
    if (r < 1) fail(ErrorCode::invalid_argument, "ranks are 1-based");
    if (r <= k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) fail(ErrorCode::invalid_argument, "mean rank over zero queries");
  double total = 0.0;
  for (std::size_t r : ranks) {
    if (r < 1) fail(ErrorCode::invalid_argument, "ranks are 1-based");
    total += static_cast<double>(r);
  }
  return total / static_cast<double>(ranks.size());
}

const char* direction_name(Direction d) noexcept {
  return d == Direction::query_to_candidate ? "x2y" : "y2x";
}

const CoherentAggregate* DirectionReport::find(std::size_t k) const {
  for (const auto& c : coherent) {
    if (c.k == k) return &c;
  }
  return nullptr;
}

const DirectionReport& EvalReport::direction(Direction d) const {
  for (const auto& r : directions) {
    if (r.direction == d) return r;
  }
  fail(ErrorCode::invalid_argument, std::string("report has no direction ") + direction_name(d));
}

namespace {

DirectionReport evaluate_direction(Direction dir, const Matrix& sim, const Matrix& relevance,
                                   std::span<const std::size_t> ks) {
  const auto n = static_cast<std::size_t>(sim.rows());
  DirectionReport rep;
  rep.direction = dir;
  rep.n_queries = n;
  rep.ranks.resize(n);
  rep.per_query_cs.assign(ks.size(), std::vector<std::optional<double>>(n));

  std::vector<double> row(n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t p = 0; p < n; ++p) {
      row[p] = dir == Direction::query_to_candidate ? sim(q, p) : sim(p, q);
    }
    const std::size_t gt = q;
    rep.ranks[q] = ground_truth_rank(row, std::span<const std::size_t>(&gt, 1));
    const std::span<const double> rel(relevance.row(static_cast<Eigen::Index>(q)).data(), n);
    for (std::size_t i = 0; i < ks.size(); ++i) rep.per_query_cs[i][q] = coherent_score(row, rel, ks[i]);
  }

  for (std::size_t i = 0; i < ks.size(); ++i) {
    CoherentAggregate agg;
    agg.k = ks[i];
    double total = 0.0;
    for (const auto& v : rep.per_query_cs[i]) {
      if (v) {
        total += *v;
        ++agg.defined;
      }
    }
    agg.mean = agg.defined ? total / static_cast<double>(agg.defined)
                           : std::numeric_limits<double>::quiet_NaN();
    rep.coherent.push_back(agg);
  }
  rep.r1 = recall_at_k(rep.ranks, 1);
  rep.r5 = recall_at_k(rep.ranks, 5);
  rep.r10 = recall_at_k(rep.ranks, 10);
  rep.mean_rank = mean_rank(rep.ranks);
  return rep;
}

}  // namespace

EvalReport evaluate(const EmbeddingSpace& space, const Matrix& relevance,
                    std::span<const std::size_t> ks) {
  const Eigen::Index n = space.query.rows();
  if (space.candidate.rows() != n || space.query.cols() != space.candidate.cols()) {
    fail(ErrorCode::shape_mismatch, "query and candidate embeddings must have the same shape");
  }
  if (relevance.rows() != n || relevance.cols() != n) {
    fail(ErrorCode::shape_mismatch, "relevance must be N x N for N evaluated pairs");
  }
  if (ks.empty()) fail(ErrorCode::invalid_argument, "no K values to evaluate");
  for (std::size_t k : ks) {
    if (k < 2 || k > static_cast<std::size_t>(n)) {
      fail(ErrorCode::invalid_argument, "CS@" + std::to_string(k) + " is undefined for " +
                                            std::to_string(n) + " items");
    }
  }
  const Matrix sim = space.query * space.candidate.transpose();
  EvalReport report;
  report.directions.push_back(evaluate_direction(Direction::query_to_candidate, sim, relevance, ks));
  report.directions.push_back(evaluate_direction(Direction::candidate_to_query, sim, relevance, ks));
  return report;
}

std::string report_to_text(const EvalReport& report) {
  std::string out;
  char line[256];
  for (const auto& d : report.directions) {
    for (const auto& c : d.coherent) {
      std::snprintf(line, sizeof line,
                    "direction=%s K=%zu cs_mean=%.6f r1=%.2f r5=%.2f r10=%.2f mean_rank=%.3f n_queries=%zu\n",
                    direction_name(d.direction), c.k, c.mean, d.r1, d.r5, d.r10, d.mean_rank,
                    d.n_queries);
      out += line;
    }
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  auto doc = nlohmann::json::array();
  for (const auto& d : report.directions) {
    nlohmann::json ks = nlohmann::json::array(), cs = nlohmann::json::array();
    for (const auto& c : d.coherent) {
      ks.push_back(c.k);
      if (std::isfinite(c.mean)) {
        cs.push_back(c.mean);
      } else {
        cs.push_back(nullptr);
      }
    }
    doc.push_back({{"direction", direction_name(d.direction)},
                   {"K", ks},
                   {"cs_mean", cs},
                   {"r1", d.r1},
                   {"r5", d.r5},
                   {"r10", d.r10},
                   {"mean_rank", d.mean_rank},
                   {"n_queries", d.n_queries}});
  }
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport report;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& obj : doc) {
      DirectionReport d;
      const auto name = obj.at("direction").get<std::string>();
      if (name == "x2y") {
        d.direction = Direction::query_to_candidate;
      } else if (name == "y2x") {
        d.direction = Direction::candidate_to_query;
      } else {
        fail(ErrorCode::invalid_argument, "unknown direction '" + name + "'");
      }
      const auto& ks = obj.at("K");
      const auto& cs = obj.at("cs_mean");
      if (ks.size() != cs.size()) fail(ErrorCode::invalid_argument, "K and cs_mean differ in length");
      for (std::size_t i = 0; i < ks.size(); ++i) {
        CoherentAggregate c;
        c.k = ks[i].get<std::size_t>();
        c.mean = cs[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : cs[i].get<double>();
        d.coherent.push_back(c);
      }
      d.r1 = obj.at("r1").get<double>();
      d.r5 = obj.at("r5").get<double>();
      d.r10 = obj.at("r10").get<double>();
      d.mean_rank = obj.at("mean_rank").get<double>();
      d.n_queries = obj.at("n_queries").get<std::size_t>();
      report.directions.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("malformed report: ") + e.what());
  }
  return report;
}

}  // namespace ladder
