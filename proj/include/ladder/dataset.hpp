#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ladder/relevance.hpp"
#include "ladder/types.hpp"

namespace ladder {

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };
const char* split_name(Split s) noexcept;
Split parse_split(const std::string& name);

struct FeatureDataset {
  FloatMatrix x;  // query modality, N x d_x
  FloatMatrix y;  // candidate modality, N x d_y; row n pairs with x row n
  std::optional<FloatMatrix> relevance;  // N x N
  std::string relevance_scale;
  std::vector<std::vector<std::string>> texts;  // empty, or N lists of reference texts
  std::vector<Split> splits;

  std::size_t size() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::vector<std::size_t> indices(Split s) const;

  void validate() const;
};

bool operator==(const FeatureDataset& a, const FeatureDataset& b);

struct SyntheticSpec {
  std::size_t n = 2000;
  std::size_t latent_dim = 8;
  std::size_t query_dim = 64;
  std::size_t candidate_dim = 64;
  double noise = 0.3;
  std::size_t clusters = 10;
  double cluster_spread = 1.0;
  std::size_t n_validation = 200;
  std::size_t n_test = 1000;
  std::size_t tokens_per_text = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// Everything drawn while generating, for tests that need the hidden structure.
struct SyntheticDraw {
  FeatureDataset dataset;
  Matrix latents;        // N x k
  Matrix query_map;      // d_x x k
  Matrix candidate_map;  // d_y x k
  WordVectorTable vocabulary;
};

SyntheticDraw generate_synthetic_draw(const SyntheticSpec& spec);
FeatureDataset generate_synthetic(const SyntheticSpec& spec);

// (1 + cos(z_q, z_p)) / 2 with each diagonal entry raised to its row maximum.
Matrix planted_relevance(const Matrix& latents);

// Directory layout: `manifest` (JSON), x.bin, y.bin, optional relevance.bin and
// texts. Blobs are row-major little-endian float32.
void save_dataset(const FeatureDataset& dataset, const std::filesystem::path& dir);
FeatureDataset load_dataset(const std::filesystem::path& dir);

// Tokenized reference texts, as consumed by build_relevance_matrix.
std::vector<std::vector<TokenSequence>> tokenized_texts(const FeatureDataset& dataset);

}  // namespace ladder
