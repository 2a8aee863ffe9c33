#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ladder/relevance.hpp"
#include "ladder/types.hpp"

namespace ladder {

enum class Sampling { full_sum, hard_contrastive };

struct LadderConfig {
  std::size_t levels = 2;
  std::vector<double> thresholds{0.63};
  std::vector<double> margins{0.2, 0.01};
  std::vector<double> weights{1.0, 0.25};
  Sampling sampling = Sampling::full_sum;

  // Throws ConfigError when sizes disagree with `levels` or values are out of range.
  void validate() const;
};

enum class TripletMode { sum, hardest };

// Records every hinge a loss evaluates. Gradient audits use it to reject
// probes whose perturbation flips a hinge or a hard-sample selection.
struct HingeTrace {
  double min_abs_argument = std::numeric_limits<double>::infinity();
  double min_selection_gap = std::numeric_limits<double>::infinity();
  std::uint64_t pattern = 0xcbf29ce484222325ULL;

  void hinge(double argument);
  void select(std::size_t index, double gap);

 private:
  void mix(std::uint64_t value);
};

double cosine_similarity(std::span<const double> x, std::span<const double> y);

// All per-row losses below take a similarity row s(q, .) and, when `grad` is
// non-empty, accumulate d loss / d s into it (same length as the row).

double triplet_loss(std::span<const double> row, std::size_t ground_truth, double margin,
                    TripletMode mode, std::span<double> grad = {},
                    HingeTrace* trace = nullptr);

// Sum of both retrieval directions for the paired item `q`.
double full_triplet_loss(std::span<const double> forward_row, std::span<const double> backward_row,
                         std::size_t ground_truth, double margin, TripletMode mode);

double ladder_loss(std::span<const double> row, const LevelPartition& partition,
                   const LadderConfig& cfg, std::span<double> grad = {},
                   HingeTrace* trace = nullptr);

// Least similar member of N_{level-1} and most similar member of N_{level:L}.
// `level` is 1-based and at least 2. Ties go to the lower index.
std::pair<std::size_t, std::size_t> hard_contrastive_pair(std::span<const double> row,
                                                          const LevelPartition& partition,
                                                          std::size_t level);

double ladder_loss_hc(std::span<const double> row, const LevelPartition& partition,
                      const LadderConfig& cfg, std::span<double> grad = {},
                      HingeTrace* trace = nullptr);

// Dispatches on cfg.sampling.
double ladder_row_loss(std::span<const double> row, const LevelPartition& partition,
                       const LadderConfig& cfg, std::span<double> grad = {},
                       HingeTrace* trace = nullptr);

double full_ladder_loss(std::span<const double> forward_row, const LevelPartition& forward,
                        std::span<const double> backward_row, const LevelPartition& backward,
                        const LadderConfig& cfg);

enum class LossFamily { triplet_sum, triplet_hardest, ladder, ladder_hc };

struct LossSpec {
  LossFamily family = LossFamily::ladder_hc;
  // For triplet families only margins[0] is used.
  LadderConfig ladder;

  bool uses_relevance() const noexcept {
    return family == LossFamily::ladder || family == LossFamily::ladder_hc;
  }
};

struct BatchLoss {
  double value = 0.0;
  Matrix grad_query;      // d value / d (pre-normalization query rows)
  Matrix grad_candidate;  // d value / d (pre-normalization candidate rows)
};

// Full two-direction loss of a mini-batch whose rows are index-aligned pairs.
// `raw_query` and `raw_candidate` are the encoder outputs before L2
// normalization; `relevance` is the batch-restricted relevance block (only read
// for ladder families). Row q of both directions uses relevance row q.
BatchLoss batch_loss(const Matrix& raw_query, const Matrix& raw_candidate,
                     const Matrix& relevance, const LossSpec& spec, bool want_gradient,
                     HingeTrace* trace = nullptr);

// Row-wise L2 normalization; throws ZeroVector on an all-zero row.
Matrix normalize_rows(const Matrix& raw);

}  // namespace ladder
