#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ladder/types.hpp"

namespace ladder {

// Tau-b. O(n log n) via merge-sort inversion counting; throws DegenerateInput
// when either input is constant or shorter than 2.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Candidate indices ordered by descending similarity, lower index first on ties.
std::vector<std::size_t> ranking(std::span<const double> similarities, std::size_t k);

// 1-based position of the best-ranked ground truth under the ranking() order.
std::size_t ground_truth_rank(std::span<const double> similarities,
                              std::span<const std::size_t> ground_truths);

// CS@K. std::nullopt when the top-K similarity or relevance values are constant.
std::optional<double> coherent_score(std::span<const double> similarities,
                                     std::span<const double> relevance, std::size_t k);

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);
double mean_rank(std::span<const std::size_t> ranks);

enum class Direction { query_to_candidate, candidate_to_query };
const char* direction_name(Direction d) noexcept;

struct CoherentAggregate {
  std::size_t k = 0;
  double mean = 0.0;       // NaN when no query had a defined score
  std::size_t defined = 0;  // queries contributing to the mean
};

struct DirectionReport {
  Direction direction = Direction::query_to_candidate;
  std::size_t n_queries = 0;
  std::vector<CoherentAggregate> coherent;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0;
  double mean_rank = 0.0;
  std::vector<std::size_t> ranks;
  // per_query_cs[i][q] is CS@coherent[i].k for query q, empty when undefined.
  std::vector<std::vector<std::optional<double>>> per_query_cs;

  const CoherentAggregate* find(std::size_t k) const;
};

struct EvalReport {
  std::vector<DirectionReport> directions;

  const DirectionReport& direction(Direction d) const;
};

struct EmbeddingSpace {
  Matrix query;      // unit rows
  Matrix candidate;  // unit rows, index-aligned with query
};

// Both retrieval directions over the index-aligned pairs in `space`. Each K
// must satisfy 2 <= K <= N. Query q in either direction reads relevance row q.
EvalReport evaluate(const EmbeddingSpace& space, const Matrix& relevance,
                    std::span<const std::size_t> ks);

// Flat text: one `key=value ...` line per (direction, K).
std::string report_to_text(const EvalReport& report);
// JSON array with one object per direction; K and cs_mean are parallel arrays.
std::string report_to_json(const EvalReport& report);
// Aggregates only; per-query values are not serialized.
EvalReport report_from_json(const std::string& text);

}  // namespace ladder
