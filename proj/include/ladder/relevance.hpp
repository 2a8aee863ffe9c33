#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ladder/types.hpp"

namespace ladder {

// Lowercase word tokens; never empty once produced by tokenize().
using TokenSequence = std::vector<std::string>;

// Lowercases and splits on runs of non-alphanumeric characters.
TokenSequence tokenize(std::string_view text);

class WordVectorTable {
 public:
  explicit WordVectorTable(std::size_t dimension);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }

  void insert(std::string token, std::vector<double> vec);
  const std::vector<double>* find(const std::string& token) const;

  // Text format: one `token v1 ... vd` entry per line.
  static WordVectorTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

// Cosine of the mean word vectors of `a` and `b`; tokens missing from the
// table are skipped. Throws NoKnownTokens when a side has no known token.
double cbow_relevance(const TokenSequence& a, const TokenSequence& b,
                      const WordVectorTable& table);

enum class FineScoreMode { optional, mandatory };

double coarse_to_fine(double coarse, std::optional<double> fine, double threshold,
                      FineScoreMode mode = FineScoreMode::optional);

// Sparse (query, candidate) -> score lookup, read from `q p score` lines.
class FineScores {
 public:
  void set(std::size_t query, std::size_t candidate, double score);
  std::optional<double> find(std::size_t query, std::size_t candidate) const;
  std::size_t size() const noexcept { return scores_.size(); }

  static FineScores load(const std::filesystem::path& path);

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<std::size_t, std::size_t>& p) const noexcept {
      return std::hash<std::size_t>{}(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
    }
  };
  std::unordered_map<std::pair<std::size_t, std::size_t>, double, PairHash> scores_;
};

struct RelevanceMatrix {
  Matrix values;
  // Free-form tag for the scale the scorer emits; higher is always more relevant.
  std::string scale;
};

struct RelevanceOptions {
  double fine_threshold = 0.8;
  FineScoreMode fine_mode = FineScoreMode::optional;
  const FineScores* fine = nullptr;
};

// `references[n]` holds every reference text of item n (at least one). The
// relevance between items is the best match over their reference texts; the
// diagonal is raised to the row maximum so the paired item is always top.
RelevanceMatrix build_relevance_matrix(std::span<const std::vector<TokenSequence>> references,
                                       const WordVectorTable& table,
                                       const RelevanceOptions& options = {});

// N_1..N_L for one query, ground truth excluded.
struct LevelPartition {
  std::vector<std::vector<std::size_t>> levels;
  std::size_t ground_truth = 0;

  std::size_t level_count() const noexcept { return levels.size(); }
};

// thresholds must be strictly decreasing; a value equal to theta_l lands in N_l.
LevelPartition bin_candidates(std::span<const double> row, std::size_t ground_truth,
                              std::span<const double> thresholds);

void check_thresholds(std::span<const double> thresholds);

}  // namespace ladder
