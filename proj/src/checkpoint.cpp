#include "blob_io.hpp"
#include "ladder/config_io.hpp"
#include "ladder/error.hpp"
#include "ladder/trainer.hpp"

namespace ladder {

void save_checkpoint(const Model& model, const std::filesystem::path& dir) {
  detail::ensure_directory(dir);
  const auto& q = model.query_encoder;
  const auto& c = model.candidate_encoder;
  nlohmann::json manifest = {
      {"format", "ladder-checkpoint"},
      {"version", 1},
      {"byte_order", "little-endian"},
      {"value_type", "float64"},
      {"embed_dim", q.weight.rows()},
      {"d_x", q.weight.cols()},
      {"d_y", c.weight.cols()},
      {"epochs_trained", model.epochs_trained},
      {"train_config", nlohmann::json::parse(to_json(model.config))},
      {"query_weight", "query_weight.bin"},
      {"query_bias", "query_bias.bin"},
      {"candidate_weight", "candidate_weight.bin"},
      {"candidate_bias", "candidate_bias.bin"},
  };
  auto span_of = [](const auto& m) { return std::span<const double>(m.data(), static_cast<std::size_t>(m.size())); };
  detail::write_blob<double>(dir / "query_weight.bin", span_of(q.weight));
  detail::write_blob<double>(dir / "query_bias.bin", span_of(q.bias));
  detail::write_blob<double>(dir / "candidate_weight.bin", span_of(c.weight));
  detail::write_blob<double>(dir / "candidate_bias.bin", span_of(c.bias));
  detail::write_manifest(dir, manifest);
}

Model load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest = detail::read_manifest(dir);
  if (detail::manifest_field<std::string>(manifest, "format") != "ladder-checkpoint") {
    fail(ErrorCode::manifest_error, "manifest 'format' is not ladder-checkpoint");
  }
  if (detail::manifest_field<std::string>(manifest, "byte_order") != "little-endian" ||
      detail::manifest_field<std::string>(manifest, "value_type") != "float64") {
    fail(ErrorCode::manifest_error, "checkpoint blobs must be little-endian float64");
  }
  const auto dim = detail::manifest_field<std::size_t>(manifest, "embed_dim");
  const auto dx = detail::manifest_field<std::size_t>(manifest, "d_x");
  const auto dy = detail::manifest_field<std::size_t>(manifest, "d_y");

  Model model;
  try {
    model.config = train_config_from_json(detail::manifest_field<nlohmann::json>(manifest, "train_config").dump());
  } catch (const Error& e) {
    fail(ErrorCode::manifest_error, std::string("checkpoint train_config: ") + e.what());
  }
  if (model.config.embed_dim != dim) fail(ErrorCode::manifest_error, "embed_dim disagrees with train_config");
  model.epochs_trained = detail::manifest_field<int>(manifest, "epochs_trained");

  auto load = [&](const char* key, std::size_t rows, std::size_t cols) {
    const auto file = detail::manifest_field<std::string>(manifest, key);
    const auto values = detail::read_blob<double>(dir / file, rows * cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        fail(ErrorCode::non_finite_value, file + " has a non-finite value at flat index " + std::to_string(i));
      }
    }
    return values;
  };
  auto as_matrix = [](const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::copy(v.begin(), v.end(), m.data());
    return m;
  };
  auto as_vector = [](const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.data());
    return out;
  };
  model.query_encoder = {as_matrix(load("query_weight", dim, dx), dim, dx), as_vector(load("query_bias", dim, 1))};
  model.candidate_encoder = {as_matrix(load("candidate_weight", dim, dy), dim, dy),
                             as_vector(load("candidate_bias", dim, 1))};
  return model;
}

}  // namespace ladder
