#include "ladder/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ladder/error.hpp"

namespace ladder {

LinearEncoder LinearEncoder::initialize(std::size_t out_dim, std::size_t in_dim, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  LinearEncoder enc{Matrix(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim)),
                    Vector::Zero(static_cast<Eigen::Index>(out_dim))};
  for (Eigen::Index i = 0; i < enc.weight.size(); ++i) enc.weight.data()[i] = uniform(rng);
  return enc;
}

Matrix LinearEncoder::affine(const Matrix& features) const {
  if (features.cols() != weight.cols()) {
    fail(ErrorCode::shape_mismatch, "encoder expects " + std::to_string(weight.cols()) +
                                        "-d features, got " + std::to_string(features.cols()));
  }
  Matrix out = features * weight.transpose();
  out.rowwise() += bias.transpose();
  return out;
}

Matrix LinearEncoder::encode(const Matrix& features) const { return normalize_rows(affine(features)); }

bool operator==(const LinearEncoder& a, const LinearEncoder& b) {
  return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
         a.weight == b.weight && a.bias == b.bias;
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorCode::config_error, why); };
  if (batch_size < 2) bad("batch size must be at least 2");
  if (epochs < 0) bad("epoch count must be non-negative");
  if (embed_dim < 2) bad("embedding dimension must be at least 2");
  if (!(lr.initial >= 0.0) || !(lr.decayed >= 0.0) || !std::isfinite(lr.initial) || !std::isfinite(lr.decayed)) {
    bad("learning rates must be finite and non-negative");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    bad("moment decays must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) bad("optimizer epsilon must be positive");
  if (loss.uses_relevance()) {
    loss.ladder.validate();
  } else if (loss.ladder.margins.empty() || !(loss.ladder.margins.front() > 0.0)) {
    bad("triplet loss needs a positive margin");
  }
}

namespace {

Matrix gather(const FloatMatrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i])).cast<double>();
  }
  return out;
}

Matrix relevance_block(const FeatureDataset& dataset, std::span<const std::size_t> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = (*dataset.relevance)(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]),
                                       static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

}  // namespace

EmbeddingSpace Model::embed(const FeatureDataset& dataset, std::span<const std::size_t> rows) const {
  return {query_encoder.encode(gather(dataset.x, rows)),
          candidate_encoder.encode(gather(dataset.y, rows))};
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, std::uint64_t seed,
                                                   int epoch) {
  if (batch_size < 2) fail(ErrorCode::config_error, "batch size must be at least 2");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  // A lone leftover item cannot form a pair contrast; fold it into the previous batch.
  if (batches.size() > 1 && batches.back().size() < 2) {
    const auto last = batches.back();
    batches.pop_back();
    batches.back().insert(batches.back().end(), last.begin(), last.end());
  } else if (batches.size() == 1 && batches.back().size() < 2) {
    batches.clear();
  }
  return batches;
}

Model initialize_model(const FeatureDataset& dataset, const TrainConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  Model model;
  model.query_encoder = LinearEncoder::initialize(config.embed_dim, static_cast<std::size_t>(dataset.x.cols()), rng);
  model.candidate_encoder =
      LinearEncoder::initialize(config.embed_dim, static_cast<std::size_t>(dataset.y.cols()), rng);
  model.config = config;
  return model;
}

double model_batch_loss(const Model& model, const FeatureDataset& dataset,
                        std::span<const std::size_t> batch, ParameterGradient* gradient,
                        HingeTrace* trace) {
  const Matrix fx = gather(dataset.x, batch);
  const Matrix fy = gather(dataset.y, batch);
  const Matrix raw_query = model.query_encoder.affine(fx);
  const Matrix raw_candidate = model.candidate_encoder.affine(fy);
  Matrix rel;
  if (model.config.loss.uses_relevance()) {
    if (!dataset.relevance) fail(ErrorCode::config_error, "ladder loss needs a relevance matrix");
    rel = relevance_block(dataset, batch);
  }
  const auto bl = batch_loss(raw_query, raw_candidate, rel, model.config.loss, gradient != nullptr, trace);
  if (gradient) {
    gradient->query_weight = bl.grad_query.transpose() * fx;
    gradient->query_bias = bl.grad_query.colwise().sum().transpose();
    gradient->candidate_weight = bl.grad_candidate.transpose() * fy;
    gradient->candidate_bias = bl.grad_candidate.colwise().sum().transpose();
  }
  return bl.value;
}

namespace {

struct AdamState {
  Matrix m_wq, v_wq, m_wc, v_wc;
  Vector m_bq, v_bq, m_bc, v_bc;
  long step = 0;

  explicit AdamState(const Model& model)
      : m_wq(Matrix::Zero(model.query_encoder.weight.rows(), model.query_encoder.weight.cols())),
        v_wq(m_wq),
        m_wc(Matrix::Zero(model.candidate_encoder.weight.rows(), model.candidate_encoder.weight.cols())),
        v_wc(m_wc),
        m_bq(Vector::Zero(model.query_encoder.bias.size())),
        v_bq(m_bq),
        m_bc(Vector::Zero(model.candidate_encoder.bias.size())),
        v_bc(m_bc) {}
};

template <typename Param, typename Grad>
void adam_update(Param& x, const Grad& g, Param& m, Param& v, long step, double lr, const AdamParams& p) {
  m = p.beta1 * m + (1.0 - p.beta1) * g;
  v = p.beta2 * v + (1.0 - p.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
  x.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + p.epsilon);
}

void adam_step(Model& model, const ParameterGradient& g, AdamState& s, double lr, const AdamParams& p) {
  ++s.step;
  adam_update(model.query_encoder.weight, g.query_weight, s.m_wq, s.v_wq, s.step, lr, p);
  adam_update(model.query_encoder.bias, g.query_bias, s.m_bq, s.v_bq, s.step, lr, p);
  adam_update(model.candidate_encoder.weight, g.candidate_weight, s.m_wc, s.v_wc, s.step, lr, p);
  adam_update(model.candidate_encoder.bias, g.candidate_bias, s.m_bc, s.v_bc, s.step, lr, p);
}

std::vector<std::size_t> clamp_ks(std::span<const std::size_t> ks, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k : ks) {
    const std::size_t c = std::min(k, n);
    if (c >= 2 && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  if (out.empty() && n >= 2) out.push_back(n);
  return out;
}

Matrix relevance_or_zero(const FeatureDataset& dataset, std::span<const std::size_t> rows) {
  if (dataset.relevance) return relevance_block(dataset, rows);
  // Without relevance only recall metrics are meaningful; CS comes out undefined.
  return Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
}

}  // namespace

TrainResult train(const FeatureDataset& dataset, const TrainConfig& config) {
  config.validate();
  dataset.validate();
  if (config.loss.uses_relevance() && !dataset.relevance) {
    fail(ErrorCode::config_error, "ladder loss selected but the dataset has no relevance matrix");
  }
  const auto train_rows = dataset.indices(Split::train);
  const auto val_rows = dataset.indices(Split::validation);
  if (train_rows.size() < 2) fail(ErrorCode::config_error, "training split needs at least two items");
  if (val_rows.size() < 2) fail(ErrorCode::config_error, "validation split needs at least two items");

  TrainResult result{initialize_model(dataset, config), {}};
  Model& model = result.model;
  AdamState state(model);

  const auto val_batches = [&] {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < val_rows.size(); s += config.batch_size) {
      const std::size_t e = std::min(s + config.batch_size, val_rows.size());
      out.emplace_back(val_rows.begin() + static_cast<std::ptrdiff_t>(s),
                       val_rows.begin() + static_cast<std::ptrdiff_t>(e));
    }
    if (out.size() > 1 && out.back().size() < 2) {
      const auto last = out.back();
      out.pop_back();
      out.back().insert(out.back().end(), last.begin(), last.end());
    }
    return out;
  }();
  const auto val_ks = clamp_ks(config.validation_ks, val_rows.size());
  const Matrix val_relevance = relevance_or_zero(dataset, val_rows);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.learning_rate = config.lr.at(epoch);

    const auto batches = make_batches(train_rows, config.batch_size, config.seed, epoch);
    double total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      ParameterGradient grad;
      const double loss = model_batch_loss(model, dataset, batches[b], &grad);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::non_finite_loss,
             "non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(b));
      }
      total += loss;
      adam_step(model, grad, state, rec.learning_rate, config.adam);
    }
    rec.train_loss = batches.empty() ? 0.0 : total / static_cast<double>(batches.size());

    double val_total = 0.0;
    for (const auto& b : val_batches) val_total += model_batch_loss(model, dataset, b, nullptr);
    rec.validation_loss = val_total / static_cast<double>(val_batches.size());
    rec.validation = evaluate(model.embed(dataset, val_rows), val_relevance, val_ks);
    model.epochs_trained = epoch + 1;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.epochs.push_back(std::move(rec));
  }
  return result;
}

double relative_error(double analytic, double numeric) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

namespace {

std::size_t parameter_count(const Model& m) {
  return static_cast<std::size_t>(m.query_encoder.weight.size() + m.query_encoder.bias.size() +
                                  m.candidate_encoder.weight.size() + m.candidate_encoder.bias.size());
}

double& parameter_at(Model& m, std::size_t flat) {
  auto take = [&flat](auto& block) -> double* {
    const auto size = static_cast<std::size_t>(block.size());
    if (flat < size) return block.data() + flat;
    flat -= size;
    return nullptr;
  };
  if (auto* p = take(m.query_encoder.weight)) return *p;
  if (auto* p = take(m.query_encoder.bias)) return *p;
  if (auto* p = take(m.candidate_encoder.weight)) return *p;
  if (auto* p = take(m.candidate_encoder.bias)) return *p;
  fail(ErrorCode::invalid_argument, "parameter index out of range");
}

double gradient_at(const ParameterGradient& g, std::size_t flat) {
  auto take = [&flat](const auto& block) -> const double* {
    const auto size = static_cast<std::size_t>(block.size());
    if (flat < size) return block.data() + flat;
    flat -= size;
    return nullptr;
  };
  if (const auto* p = take(g.query_weight)) return *p;
  if (const auto* p = take(g.query_bias)) return *p;
  if (const auto* p = take(g.candidate_weight)) return *p;
  if (const auto* p = take(g.candidate_bias)) return *p;
  fail(ErrorCode::invalid_argument, "parameter index out of range");
}

}  // namespace

AuditResult finite_difference_audit(const FeatureDataset& dataset, const Model& model,
                                    const AuditOptions& options) {
  if (!(options.step > 0.0)) fail(ErrorCode::invalid_argument, "finite-difference step must be positive");
  const auto train_rows = dataset.indices(Split::train);
  const std::size_t bs = options.batch_size ? options.batch_size : model.config.batch_size;
  const auto batches = make_batches(train_rows, bs, options.seed, 0);
  if (batches.empty()) fail(ErrorCode::config_error, "training split is too small to form a batch");
  const auto& batch = batches.front();

  AuditResult result;
  if (options.probes == 0) return result;

  ParameterGradient grad;
  HingeTrace base;
  model_batch_loss(model, dataset, batch, &grad, &base);

  std::mt19937_64 rng(options.seed ^ 0xA0D17ULL);
  std::uniform_int_distribution<std::size_t> pick(0, parameter_count(model) - 1);
  Model probe = model;
  const std::size_t max_draws = 50 * options.probes;
  std::size_t draws = 0;
  while (result.probes.size() < options.probes && draws < max_draws) {
    ++draws;
    const std::size_t idx = pick(rng);
    double& param = parameter_at(probe, idx);
    const double saved = param;
    HingeTrace up_trace, down_trace;
    param = saved + options.step;
    const double up = model_batch_loss(probe, dataset, batch, nullptr, &up_trace);
    param = saved - options.step;
    const double down = model_batch_loss(probe, dataset, batch, nullptr, &down_trace);
    param = saved;
    if (up_trace.pattern != base.pattern || down_trace.pattern != base.pattern) {
      ++result.rejected;
      continue;
    }
    AuditProbe p;
    p.parameter = idx;
    p.analytic = options.corrupt_scale * gradient_at(grad, idx);
    p.numeric = (up - down) / (2.0 * options.step);
    p.relative_error = relative_error(p.analytic, p.numeric);
    result.max_relative_error = std::max(result.max_relative_error, p.relative_error);
    result.probes.push_back(p);
  }
  return result;
}

}  // namespace ladder
