#include "ladder/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ladder/error.hpp"

namespace ladder {

void LadderConfig::validate() const {
  if (levels < 1) fail(ErrorCode::config_error, "ladder needs at least one level");
  if (thresholds.size() + 1 != levels) {
    fail(ErrorCode::config_error, "ladder with " + std::to_string(levels) + " levels needs " +
                                      std::to_string(levels - 1) + " thresholds, got " +
                                      std::to_string(thresholds.size()));
  }
  if (margins.size() != levels || weights.size() != levels) {
    fail(ErrorCode::config_error, "ladder needs one margin and one weight per level");
  }
  for (double m : margins) {
    if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorCode::config_error, "margins must be positive");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::config_error, "weights must be non-negative");
  }
  if (!(weights[0] > 0.0)) fail(ErrorCode::config_error, "the first ladder weight must be positive");
  check_thresholds(thresholds);
}

void HingeTrace::mix(std::uint64_t value) {
  pattern ^= value;
  pattern *= 0x100000001b3ULL;
}

void HingeTrace::hinge(double argument) {
  min_abs_argument = std::min(min_abs_argument, std::abs(argument));
  mix(argument > 0.0 ? 1 : 2);
}

void HingeTrace::select(std::size_t index, double gap) {
  min_selection_gap = std::min(min_selection_gap, gap);
  mix(static_cast<std::uint64_t>(index) + 3);
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::invalid_argument, "cosine of vectors with different dimension");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) fail(ErrorCode::zero_vector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

namespace {

// One hinge [margin - s(pos) + s(neg)]_+ with its subgradient scaled by `weight`.
double hinge(std::span<const double> row, std::size_t pos, std::size_t neg, double margin,
             std::span<double> grad, double weight, HingeTrace* trace) {
  const double arg = margin - row[pos] + row[neg];
  if (trace) trace->hinge(arg);
  if (arg <= 0.0) return 0.0;
  if (!grad.empty()) {
    grad[pos] -= weight;
    grad[neg] += weight;
  }
  return arg;
}

struct Pick {
  std::size_t index = 0;
  double gap = std::numeric_limits<double>::infinity();
  bool found = false;
};

// Extreme element of `members` under `better` (strict), lowest index on ties,
// plus the distance to the runner-up.
template <typename Range, typename Better>
Pick pick_extreme(std::span<const double> row, const Range& members, Better better) {
  Pick p;
  double best = 0.0, second = 0.0;
  bool has_second = false;
  for (std::size_t idx : members) {
    const double v = row[idx];
    if (!p.found) {
      p = {idx, p.gap, true};
      best = v;
    } else if (better(v, best) || (v == best && idx < p.index)) {
      second = best;
      has_second = true;
      p.index = idx;
      best = v;
    } else if (!has_second || better(v, second)) {
      second = v;
      has_second = true;
    }
  }
  if (has_second) p.gap = std::abs(best - second);
  return p;
}

std::vector<std::size_t> non_ground_truth(std::size_t n, std::size_t gt) {
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (p != gt) out.push_back(p);
  }
  return out;
}

double triplet_weighted(std::span<const double> row, std::size_t gt, double margin,
                        TripletMode mode, std::span<double> grad, double weight,
                        HingeTrace* trace) {
  if (gt >= row.size()) fail(ErrorCode::invalid_argument, "ground truth index out of range");
  if (!grad.empty() && grad.size() != row.size()) {
    fail(ErrorCode::invalid_argument, "gradient buffer does not match the similarity row");
  }
  if (mode == TripletMode::sum) {
    double total = 0.0;
    for (std::size_t p = 0; p < row.size(); ++p) {
      if (p != gt) total += hinge(row, gt, p, margin, grad, weight, trace);
    }
    return total;
  }
  const auto pick = pick_extreme(row, non_ground_truth(row.size(), gt), std::greater<>{});
  if (!pick.found) return 0.0;
  if (trace) trace->select(pick.index, pick.gap);
  return hinge(row, gt, pick.index, margin, grad, weight, trace);
}

std::vector<std::size_t> union_from(const LevelPartition& part, std::size_t first_level) {
  std::vector<std::size_t> out;
  for (std::size_t l = first_level; l < part.levels.size(); ++l) {
    out.insert(out.end(), part.levels[l].begin(), part.levels[l].end());
  }
  return out;
}

void check_partition(std::span<const double> row, const LevelPartition& partition,
                     const LadderConfig& cfg, std::span<double> grad) {
  if (partition.level_count() != cfg.levels) {
    fail(ErrorCode::partition_mismatch, "partition has " + std::to_string(partition.level_count()) +
                                            " levels, config expects " + std::to_string(cfg.levels));
  }
  if (partition.ground_truth >= row.size()) fail(ErrorCode::invalid_argument, "ground truth index out of range");
  if (!grad.empty() && grad.size() != row.size()) {
    fail(ErrorCode::invalid_argument, "gradient buffer does not match the similarity row");
  }
}

}  // namespace

double triplet_loss(std::span<const double> row, std::size_t ground_truth, double margin,
                    TripletMode mode, std::span<double> grad, HingeTrace* trace) {
  return triplet_weighted(row, ground_truth, margin, mode, grad, 1.0, trace);
}

double full_triplet_loss(std::span<const double> forward_row, std::span<const double> backward_row,
                         std::size_t ground_truth, double margin, TripletMode mode) {
  return triplet_loss(forward_row, ground_truth, margin, mode) +
         triplet_loss(backward_row, ground_truth, margin, mode);
}

double ladder_loss(std::span<const double> row, const LevelPartition& partition,
                   const LadderConfig& cfg, std::span<double> grad, HingeTrace* trace) {
  check_partition(row, partition, cfg, grad);
  const std::size_t gt = partition.ground_truth;

  // Level 1 ranges over every non-ground-truth candidate; summing in index
  // order keeps it bit-identical to the triplet loss.
  double total = cfg.weights[0] *
                 triplet_weighted(row, gt, cfg.margins[0], TripletMode::sum, grad, cfg.weights[0], trace);

  for (std::size_t l = 1; l < cfg.levels; ++l) {
    const double w = cfg.weights[l];
    if (w == 0.0) continue;
    const auto& upper = partition.levels[l - 1];
    const auto lower = union_from(partition, l);
    double term = 0.0;
    for (std::size_t i : upper) {
      for (std::size_t j : lower) term += hinge(row, i, j, cfg.margins[l], grad, w, trace);
    }
    total += w * term;
  }
  return total;
}

std::pair<std::size_t, std::size_t> hard_contrastive_pair(std::span<const double> row,
                                                          const LevelPartition& partition,
                                                          std::size_t level) {
  if (level < 2 || level > partition.level_count()) {
    fail(ErrorCode::invalid_argument, "hard contrastive level must be in [2, L]");
  }
  const auto upper = pick_extreme(row, partition.levels[level - 2], std::less<>{});
  const auto lower = pick_extreme(row, union_from(partition, level - 1), std::greater<>{});
  if (!upper.found || !lower.found) {
    fail(ErrorCode::empty_level, "level " + std::to_string(level) + " has an empty side");
  }
  return {upper.index, lower.index};
}

double ladder_loss_hc(std::span<const double> row, const LevelPartition& partition,
                      const LadderConfig& cfg, std::span<double> grad, HingeTrace* trace) {
  check_partition(row, partition, cfg, grad);
  const std::size_t gt = partition.ground_truth;

  double total = cfg.weights[0] * triplet_weighted(row, gt, cfg.margins[0], TripletMode::hardest,
                                                   grad, cfg.weights[0], trace);

  for (std::size_t l = 1; l < cfg.levels; ++l) {
    const double w = cfg.weights[l];
    if (w == 0.0) continue;
    const auto upper = pick_extreme(row, partition.levels[l - 1], std::less<>{});
    const auto lower = pick_extreme(row, union_from(partition, l), std::greater<>{});
    if (!upper.found || !lower.found) continue;
    if (trace) {
      trace->select(upper.index, upper.gap);
      trace->select(lower.index, lower.gap);
    }
    total += w * hinge(row, upper.index, lower.index, cfg.margins[l], grad, w, trace);
  }
  return total;
}

double ladder_row_loss(std::span<const double> row, const LevelPartition& partition,
                       const LadderConfig& cfg, std::span<double> grad, HingeTrace* trace) {
  return cfg.sampling == Sampling::hard_contrastive ? ladder_loss_hc(row, partition, cfg, grad, trace)
                                                    : ladder_loss(row, partition, cfg, grad, trace);
}

double full_ladder_loss(std::span<const double> forward_row, const LevelPartition& forward,
                        std::span<const double> backward_row, const LevelPartition& backward,
                        const LadderConfig& cfg) {
  return ladder_row_loss(forward_row, forward, cfg) + ladder_row_loss(backward_row, backward, cfg);
}

Matrix normalize_rows(const Matrix& raw) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double norm = raw.row(r).norm();
    if (norm == 0.0) fail(ErrorCode::zero_vector, "row " + std::to_string(r) + " is the zero vector");
    out.row(r) = raw.row(r) / norm;
  }
  return out;
}

namespace {

// Chain rule through x -> x / |x| for each row.
Matrix through_normalization(const Matrix& raw, const Matrix& unit, const Matrix& grad_unit) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double norm = raw.row(r).norm();
    const double radial = grad_unit.row(r).dot(unit.row(r));
    out.row(r) = (grad_unit.row(r) - radial * unit.row(r)) / norm;
  }
  return out;
}

}  // namespace

BatchLoss batch_loss(const Matrix& raw_query, const Matrix& raw_candidate,
                     const Matrix& relevance, const LossSpec& spec, bool want_gradient,
                     HingeTrace* trace) {
  const Eigen::Index n = raw_query.rows();
  if (raw_candidate.rows() != n || raw_query.cols() != raw_candidate.cols()) {
    fail(ErrorCode::shape_mismatch, "query and candidate batches must have the same shape");
  }
  if (n < 2) fail(ErrorCode::invalid_argument, "a batch needs at least two pairs");
  const bool ladder = spec.uses_relevance();
  if (ladder) {
    spec.ladder.validate();
    if (relevance.rows() != n || relevance.cols() != n) {
      fail(ErrorCode::shape_mismatch, "batch relevance block must be B x B");
    }
  } else if (spec.ladder.margins.empty()) {
    fail(ErrorCode::config_error, "triplet loss needs a margin");
  }

  const Matrix query = normalize_rows(raw_query);
  const Matrix candidate = normalize_rows(raw_candidate);
  const Matrix sim = query * candidate.transpose();
  const Matrix sim_t = sim.transpose();

  Matrix grad_fwd = Matrix::Zero(n, n);
  Matrix grad_bwd = Matrix::Zero(n, n);

  LadderConfig cfg = spec.ladder;
  cfg.sampling = spec.family == LossFamily::ladder_hc ? Sampling::hard_contrastive : Sampling::full_sum;
  const double margin = spec.ladder.margins.front();
  const TripletMode mode =
      spec.family == LossFamily::triplet_hardest ? TripletMode::hardest : TripletMode::sum;

  BatchLoss out;
  const auto un = static_cast<std::size_t>(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    const std::span<const double> fwd(sim.row(q).data(), un);
    const std::span<const double> bwd(sim_t.row(q).data(), un);
    std::span<double> gf, gb;
    if (want_gradient) {
      gf = std::span<double>(grad_fwd.row(q).data(), un);
      gb = std::span<double>(grad_bwd.row(q).data(), un);
    }
    const auto gt = static_cast<std::size_t>(q);
    if (ladder) {
      const std::span<const double> rel(relevance.row(q).data(), un);
      const auto part = bin_candidates(rel, gt, cfg.thresholds);
      out.value += ladder_row_loss(fwd, part, cfg, gf, trace);
      out.value += ladder_row_loss(bwd, part, cfg, gb, trace);
    } else {
      out.value += triplet_loss(fwd, gt, margin, mode, gf, trace);
      out.value += triplet_loss(bwd, gt, margin, mode, gb, trace);
    }
  }

  if (want_gradient) {
    const Matrix grad_sim = grad_fwd + grad_bwd.transpose();
    const Matrix grad_query_unit = grad_sim * candidate;
    const Matrix grad_candidate_unit = grad_sim.transpose() * query;
    out.grad_query = through_normalization(raw_query, query, grad_query_unit);
    out.grad_candidate = through_normalization(raw_candidate, candidate, grad_candidate_unit);
  }
  return out;
}

}  // namespace ladder
