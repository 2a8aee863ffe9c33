#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "ladder/dataset.hpp"
#include "ladder/loss.hpp"
#include "ladder/metrics.hpp"
#include "ladder/types.hpp"

namespace ladder {

// Affine map followed by L2 normalization of each output row.
struct LinearEncoder {
  Matrix weight;  // D x d_in
  Vector bias;    // D

  static LinearEncoder initialize(std::size_t out_dim, std::size_t in_dim, std::mt19937_64& rng);

  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(weight.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(weight.cols()); }

  Matrix affine(const Matrix& features) const;
  Matrix encode(const Matrix& features) const;
};

struct LearningRateSchedule {
  double initial = 2e-4;
  int decay_epoch = 15;  // epochs [decay_epoch, ...) use `decayed`
  double decayed = 2e-5;

  double at(int epoch) const noexcept { return epoch < decay_epoch ? initial : decayed; }
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  LossSpec loss;
  std::size_t batch_size = 128;
  int epochs = 30;
  std::size_t embed_dim = 32;
  LearningRateSchedule lr;
  AdamParams adam;
  std::uint64_t seed = 0;
  std::vector<std::size_t> validation_ks{100};

  void validate() const;
};

struct Model {
  LinearEncoder query_encoder;
  LinearEncoder candidate_encoder;
  TrainConfig config;
  int epochs_trained = 0;

  EmbeddingSpace embed(const FeatureDataset& dataset, std::span<const std::size_t> rows) const;
};

bool operator==(const LinearEncoder& a, const LinearEncoder& b);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_loss = 0.0;  // mean batch loss
  double validation_loss = 0.0;
  EvalReport validation;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  Model model;
  TrainLog log;
};

// Deterministic shuffle per (seed, epoch); every index appears exactly once. A
// single leftover item joins the previous batch, since a batch needs two pairs.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, std::uint64_t seed,
                                                   int epoch);

Model initialize_model(const FeatureDataset& dataset, const TrainConfig& config);

TrainResult train(const FeatureDataset& dataset, const TrainConfig& config);

// Loss of one batch evaluated with `model`, plus parameter gradients when asked.
struct ParameterGradient {
  Matrix query_weight;
  Vector query_bias;
  Matrix candidate_weight;
  Vector candidate_bias;
};

double model_batch_loss(const Model& model, const FeatureDataset& dataset,
                        std::span<const std::size_t> batch, ParameterGradient* gradient,
                        HingeTrace* trace = nullptr);

struct AuditOptions {
  std::size_t probes = 100;
  double step = 1e-5;
  std::uint64_t seed = 0;
  // Test hook: the analytic gradient is multiplied by this before comparison.
  double corrupt_scale = 1.0;
  std::size_t batch_size = 0;  // 0 = model's training batch size
};

struct AuditProbe {
  std::size_t parameter = 0;  // flat index over [Wq, bq, Wc, bc]
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct AuditResult {
  double max_relative_error = 0.0;
  std::vector<AuditProbe> probes;
  std::size_t rejected = 0;  // draws discarded because a hinge or selection flipped
};

// Central-difference check of model_batch_loss on the first training batch.
AuditResult finite_difference_audit(const FeatureDataset& dataset, const Model& model,
                                    const AuditOptions& options);

// Relative error with a 1e-6 floor on the denominator so that vanishing
// derivatives compare in absolute terms.
double relative_error(double analytic, double numeric) noexcept;

// Manifest + float64 blobs for both encoders.
void save_checkpoint(const Model& model, const std::filesystem::path& dir);
Model load_checkpoint(const std::filesystem::path& dir);

}  // namespace ladder
