// Brute-force reference implementations. Deliberately naive: they follow the
// textbook definitions and share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline double hinge(double v) { return v > 0.0 ? v : 0.0; }

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
}

struct PairCounts {
  std::int64_t concordant = 0, discordant = 0, ties_x_only = 0, ties_y_only = 0, ties_both = 0;
};

inline PairCounts count_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  PairCounts c;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) ++c.ties_both;
      else if (dx == 0.0) ++c.ties_x_only;
      else if (dy == 0.0) ++c.ties_y_only;
      else if ((dx > 0) == (dy > 0)) ++c.concordant;
      else ++c.discordant;
    }
  }
  return c;
}

// (C - D) / sqrt((C + D + T_x)(C + D + T_y)).
inline double tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const auto c = count_pairs(x, y);
  const std::int64_t num = c.concordant - c.discordant;
  const std::int64_t dx = c.concordant + c.discordant + c.ties_x_only;
  const std::int64_t dy = c.concordant + c.discordant + c.ties_y_only;
  return static_cast<double>(num) / std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

inline double triplet_sum(const std::vector<double>& s, std::size_t gt, double alpha) {
  double total = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (p != gt) total += hinge(alpha - s[gt] + s[p]);
  }
  return total;
}

inline double triplet_hardest(const std::vector<double>& s, std::size_t gt, double alpha) {
  double worst = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (p != gt) worst = std::max(worst, hinge(alpha - s[gt] + s[p]));
  }
  return worst;
}

using Levels = std::vector<std::vector<std::size_t>>;

inline std::vector<std::size_t> union_from(const Levels& levels, std::size_t from) {
  std::vector<std::size_t> out;
  for (std::size_t l = from; l < levels.size(); ++l) out.insert(out.end(), levels[l].begin(), levels[l].end());
  return out;
}

// Full-sum ladder loss written straight from the level definitions.
inline double ladder_sum(const std::vector<double>& s, std::size_t gt, const Levels& levels,
                         const std::vector<double>& alpha, const std::vector<double>& beta) {
  double total = 0.0;
  double first = 0.0;
  for (std::size_t i : union_from(levels, 0)) first += hinge(alpha[0] - s[gt] + s[i]);
  total += beta[0] * first;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    double term = 0.0;
    for (std::size_t i : levels[l - 1]) {
      for (std::size_t j : union_from(levels, l)) term += hinge(alpha[l] - s[i] + s[j]);
    }
    total += beta[l] * term;
  }
  return total;
}

// Exhaustive pair scan: the pair with the smallest s_i, then the largest s_j,
// lower indices first among equals.
inline std::pair<std::size_t, std::size_t> hardest_pair(const std::vector<double>& s, const Levels& levels,
                                                        std::size_t level) {
  const auto& upper = levels[level - 2];
  const auto lower = union_from(levels, level - 1);
  bool have = false;
  std::pair<std::size_t, std::size_t> best{0, 0};
  auto better = [&](std::size_t i, std::size_t j) {
    const auto [bi, bj] = best;
    if (s[i] != s[bi]) return s[i] < s[bi];
    if (i != bi) return i < bi;
    if (s[j] != s[bj]) return s[j] > s[bj];
    return j < bj;
  };
  for (std::size_t i : upper) {
    for (std::size_t j : lower) {
      if (!have || better(i, j)) {
        best = {i, j};
        have = true;
      }
    }
  }
  return best;
}

inline double ladder_hc(const std::vector<double>& s, std::size_t gt, const Levels& levels,
                        const std::vector<double>& alpha, const std::vector<double>& beta) {
  double total = beta[0] * triplet_hardest(s, gt, alpha[0]);
  for (std::size_t l = 2; l <= levels.size(); ++l) {
    if (levels[l - 2].empty() || union_from(levels, l - 1).empty()) continue;
    const auto [i, j] = hardest_pair(s, levels, l);
    total += beta[l - 1] * hinge(alpha[l - 1] - s[i] + s[j]);
  }
  return total;
}

// Central difference of f along coordinate k of x.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t k, double h) {
  const double saved = x[k];
  x[k] = saved + h;
  const double up = f(x);
  x[k] = saved - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

}  // namespace oracle
