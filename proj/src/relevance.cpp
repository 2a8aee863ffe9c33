#include "ladder/relevance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ladder/error.hpp"

namespace ladder {

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

WordVectorTable::WordVectorTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) fail(ErrorCode::invalid_argument, "word vector dimension must be positive");
}

void WordVectorTable::insert(std::string token, std::vector<double> vec) {
  if (vec.size() != dimension_) {
    fail(ErrorCode::shape_mismatch, "word vector for '" + token + "' has dimension " +
                                        std::to_string(vec.size()) + ", table declares " +
                                        std::to_string(dimension_));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) fail(ErrorCode::non_finite_value, "word vector for '" + token + "'");
  }
  entries_.insert_or_assign(std::move(token), std::move(vec));
}

const std::vector<double>* WordVectorTable::find(const std::string& token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

WordVectorTable WordVectorTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open word vector file " + path.string());
  std::optional<WordVectorTable> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> vec;
    std::string number;
    while (fields >> number) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(number, &used));
        if (used != number.size()) throw std::invalid_argument(number);
      } catch (const std::exception&) {
        fail(ErrorCode::io_error, path.string() + ":" + std::to_string(line_no) +
                                      ": not a number: '" + number + "'");
      }
    }
    if (!table) {
      if (vec.empty()) {
        fail(ErrorCode::shape_mismatch,
             path.string() + ":" + std::to_string(line_no) + ": token without a vector");
      }
      table.emplace(vec.size());
    }
    try {
      table->insert(token, std::move(vec));
    } catch (const Error& e) {
      fail(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!table || table->size() == 0) fail(ErrorCode::io_error, "empty word vector file " + path.string());
  return std::move(*table);
}

void WordVectorTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write word vector file " + path.string());
  std::vector<const std::string*> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, v] : entries_) keys.push_back(&k);
  std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
  out.precision(17);
  for (const auto* k : keys) {
    out << *k;
    for (double v : entries_.at(*k)) out << ' ' << v;
    out << '\n';
  }
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

namespace {

// Mean of the known token vectors; empty when no token is known.
std::vector<double> mean_vector(const TokenSequence& tokens, const WordVectorTable& table) {
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t known = 0;
  for (const auto& t : tokens) {
    if (const auto* v = table.find(t)) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
      ++known;
    }
  }
  if (known == 0) return {};
  for (double& s : sum) s /= static_cast<double>(known);
  return sum;
}

double mean_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::zero_vector, "mean word vector is zero");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double cbow_relevance(const TokenSequence& a, const TokenSequence& b,
                      const WordVectorTable& table) {
  const auto ma = mean_vector(a, table);
  if (ma.empty()) fail(ErrorCode::no_known_tokens, "first sequence has no token in the table");
  const auto mb = mean_vector(b, table);
  if (mb.empty()) fail(ErrorCode::no_known_tokens, "second sequence has no token in the table");
  return mean_cosine(ma, mb);
}

double coarse_to_fine(double coarse, std::optional<double> fine, double threshold,
                      FineScoreMode mode) {
  if (!std::isfinite(threshold)) fail(ErrorCode::invalid_argument, "fine threshold must be finite");
  if (coarse <= threshold) return coarse;
  if (fine) return *fine;
  if (mode == FineScoreMode::mandatory) {
    fail(ErrorCode::missing_fine_score, "coarse score " + std::to_string(coarse) +
                                            " exceeds threshold and no fine score is available");
  }
  return coarse;
}

void FineScores::set(std::size_t query, std::size_t candidate, double score) {
  scores_.insert_or_assign({query, candidate}, score);
}

std::optional<double> FineScores::find(std::size_t query, std::size_t candidate) const {
  auto it = scores_.find({query, candidate});
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

FineScores FineScores::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open fine score file " + path.string());
  FineScores scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long long q = -1, p = -1;
    double s = 0.0;
    std::string extra;
    if (!(fields >> q >> p >> s) || (fields >> extra) || q < 0 || p < 0 || !std::isfinite(s)) {
      fail(ErrorCode::io_error, path.string() + ":" + std::to_string(line_no) +
                                    ": expected `query_index candidate_index score`");
    }
    scores.set(static_cast<std::size_t>(q), static_cast<std::size_t>(p), s);
  }
  return scores;
}

RelevanceMatrix build_relevance_matrix(std::span<const std::vector<TokenSequence>> references,
                                       const WordVectorTable& table,
                                       const RelevanceOptions& options) {
  const std::size_t n = references.size();
  if (n == 0) fail(ErrorCode::invalid_argument, "no reference texts");

  // Normalized text means, flattened per item.
  std::vector<std::vector<std::vector<double>>> means(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (references[i].empty()) {
      fail(ErrorCode::invalid_argument, "item " + std::to_string(i) + " has no reference text");
    }
    for (const auto& text : references[i]) {
      auto m = mean_vector(text, table);
      if (m.empty()) {
        fail(ErrorCode::no_known_tokens,
             "item " + std::to_string(i) + " has a reference text with no token in the table");
      }
      means[i].push_back(std::move(m));
    }
  }

  RelevanceMatrix out{Matrix(n, n), "cbow-cosine"};
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t p = 0; p < n; ++p) {
      double coarse = -std::numeric_limits<double>::infinity();
      for (const auto& a : means[q]) {
        for (const auto& b : means[p]) coarse = std::max(coarse, mean_cosine(a, b));
      }
      std::optional<double> fine;
      if (options.fine) fine = options.fine->find(q, p);
      try {
        out.values(q, p) = coarse_to_fine(coarse, fine, options.fine_threshold, options.fine_mode);
      } catch (const Error& e) {
        fail(e.code(), std::string(e.what()) + " (query " + std::to_string(q) + ", candidate " +
                           std::to_string(p) + ")");
      }
    }
    out.values(q, q) = out.values.row(q).maxCoeff();
  }
  if (options.fine) out.scale = "cbow-cosine+fine";
  return out;
}

void check_thresholds(std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i])) {
      fail(ErrorCode::non_monotone_thresholds, "threshold " + std::to_string(i + 1) + " is not finite");
    }
    if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
      fail(ErrorCode::non_monotone_thresholds, "thresholds must be strictly decreasing");
    }
  }
}

LevelPartition bin_candidates(std::span<const double> row, std::size_t ground_truth,
                              std::span<const double> thresholds) {
  check_thresholds(thresholds);
  if (ground_truth >= row.size()) fail(ErrorCode::invalid_argument, "ground truth index out of range");
  LevelPartition part;
  part.ground_truth = ground_truth;
  part.levels.resize(thresholds.size() + 1);
  for (std::size_t p = 0; p < row.size(); ++p) {
    if (p == ground_truth) continue;
    // First threshold the value reaches; values below all of them go to N_L.
    std::size_t level = thresholds.size();
    for (std::size_t l = 0; l < thresholds.size(); ++l) {
      if (row[p] >= thresholds[l]) {
        level = l;
        break;
      }
    }
    part.levels[level].push_back(p);
  }
  return part;
}

}  // namespace ladder
