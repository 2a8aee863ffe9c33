#include "ladder/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "blob_io.hpp"
#include "ladder/error.hpp"

namespace ladder {

const char* split_name(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "val") return Split::validation;
  if (name == "test") return Split::test;
  fail(ErrorCode::invalid_argument, "unknown split '" + name + "'");
}

std::vector<std::size_t> FeatureDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(i);
  }
  return out;
}

namespace {

void check_finite(const FloatMatrix& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) {
      fail(ErrorCode::non_finite_value, what + " has a non-finite value at flat index " + std::to_string(i));
    }
  }
}

}  // namespace

void FeatureDataset::validate() const {
  const auto n = x.rows();
  if (n < 2) fail(ErrorCode::shape_mismatch, "a dataset needs at least two pairs");
  if (y.rows() != n) fail(ErrorCode::shape_mismatch, "x and y have different item counts");
  if (x.cols() < 1 || y.cols() < 1) fail(ErrorCode::shape_mismatch, "feature dimensions must be positive");
  check_finite(x, "x");
  check_finite(y, "y");
  if (splits.size() != static_cast<std::size_t>(n)) fail(ErrorCode::shape_mismatch, "one split label per item required");
  if (!texts.empty() && texts.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::shape_mismatch, "texts must cover every item");
  }
  if (relevance) {
    if (relevance->rows() != n || relevance->cols() != n) fail(ErrorCode::shape_mismatch, "relevance must be N x N");
    check_finite(*relevance, "relevance");
    for (Eigen::Index q = 0; q < n; ++q) {
      if (relevance->row(q).maxCoeff() > (*relevance)(q, q)) {
        fail(ErrorCode::invalid_argument,
             "relevance row " + std::to_string(q) + " does not peak at its paired item");
      }
    }
  }
}

bool operator==(const FeatureDataset& a, const FeatureDataset& b) {
  auto same = [](const FloatMatrix& p, const FloatMatrix& q) {
    return p.rows() == q.rows() && p.cols() == q.cols() && p == q;
  };
  if (!same(a.x, b.x) || !same(a.y, b.y)) return false;
  if (a.relevance.has_value() != b.relevance.has_value()) return false;
  if (a.relevance && !same(*a.relevance, *b.relevance)) return false;
  return a.relevance_scale == b.relevance_scale && a.texts == b.texts && a.splits == b.splits;
}

void SyntheticSpec::validate() const {
  auto bad = [](const std::string& why) { fail(ErrorCode::invalid_spec, why); };
  if (n < 2) bad("n must be at least 2");
  if (latent_dim < 1) bad("latent dimension must be positive");
  if (latent_dim > std::min(query_dim, candidate_dim)) bad("latent dimension exceeds a feature dimension");
  if (!std::isfinite(noise) || noise < 0.0) bad("noise must be finite and non-negative");
  if (clusters < 1) bad("cluster count must be positive");
  if (!std::isfinite(cluster_spread) || cluster_spread < 0.0) bad("cluster spread must be finite and non-negative");
  if (n_validation + n_test >= n) bad("validation and test splits leave no training items");
  if (tokens_per_text < 1) bad("tokens per text must be positive");
}

Matrix planted_relevance(const Matrix& latents) {
  const Matrix unit = [&] {
    Matrix u = latents;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      const double norm = u.row(r).norm();
      if (norm == 0.0) fail(ErrorCode::zero_vector, "latent " + std::to_string(r) + " is zero");
      u.row(r) /= norm;
    }
    return u;
  }();
  Matrix rel = ((unit * unit.transpose()).array().min(1.0).max(-1.0) + 1.0) / 2.0;
  for (Eigen::Index q = 0; q < rel.rows(); ++q) rel(q, q) = rel.row(q).maxCoeff();
  return rel;
}

namespace {

// Bag of signed axis tokens whose mean vector points along z: |z_i| is spread
// over the token budget by largest remainder.
std::string latent_text(const Eigen::Ref<const Vector>& z, std::size_t budget) {
  const double l1 = z.cwiseAbs().sum();
  const auto k = static_cast<std::size_t>(z.size());
  std::vector<std::size_t> counts(k, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double share = l1 > 0.0 ? std::abs(z[static_cast<Eigen::Index>(i)]) / l1 * static_cast<double>(budget) : 0.0;
    counts[i] = static_cast<std::size_t>(std::floor(share));
    used += counts[i];
    remainders.emplace_back(share - std::floor(share), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; used < budget && r < remainders.size(); ++r, ++used) ++counts[remainders[r].second];

  std::string text;
  for (std::size_t i = 0; i < k; ++i) {
    const char sign = z[static_cast<Eigen::Index>(i)] >= 0.0 ? 'p' : 'n';
    for (std::size_t c = 0; c < counts[i]; ++c) {
      if (!text.empty()) text += ' ';
      text += sign;
      text += std::to_string(i);
    }
  }
  return text;
}

}  // namespace

SyntheticDraw generate_synthetic_draw(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_cluster(0, spec.clusters - 1);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto k = static_cast<Eigen::Index>(spec.latent_dim);

  Matrix centers(static_cast<Eigen::Index>(spec.clusters), k);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = gauss(rng);

  Matrix latents(n, k);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto c = static_cast<Eigen::Index>(pick_cluster(rng));
    for (Eigen::Index j = 0; j < k; ++j) latents(r, j) = centers(c, j) + spec.cluster_spread * gauss(rng);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
  Matrix query_map(static_cast<Eigen::Index>(spec.query_dim), k);
  Matrix candidate_map(static_cast<Eigen::Index>(spec.candidate_dim), k);
  for (Eigen::Index i = 0; i < query_map.size(); ++i) query_map.data()[i] = scale * gauss(rng);
  for (Eigen::Index i = 0; i < candidate_map.size(); ++i) candidate_map.data()[i] = scale * gauss(rng);

  Matrix x = latents * query_map.transpose();
  Matrix y = latents * candidate_map.transpose();
  if (spec.noise > 0.0) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += spec.noise * gauss(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += spec.noise * gauss(rng);
  }

  SyntheticDraw draw{FeatureDataset{}, latents, query_map, candidate_map,
                     WordVectorTable(spec.latent_dim)};
  auto& ds = draw.dataset;
  ds.x = x.cast<float>();
  ds.y = y.cast<float>();
  ds.relevance = planted_relevance(latents).cast<float>();
  ds.relevance_scale = "planted-unit-interval";

  // Items are i.i.d., so contiguous blocks make unbiased splits.
  const std::size_t n_train = spec.n - spec.n_validation - spec.n_test;
  ds.splits.resize(spec.n, Split::train);
  std::fill(ds.splits.begin() + static_cast<std::ptrdiff_t>(n_train),
            ds.splits.begin() + static_cast<std::ptrdiff_t>(n_train + spec.n_validation), Split::validation);
  std::fill(ds.splits.begin() + static_cast<std::ptrdiff_t>(n_train + spec.n_validation), ds.splits.end(),
            Split::test);

  ds.texts.resize(spec.n);
  for (Eigen::Index r = 0; r < n; ++r) {
    ds.texts[static_cast<std::size_t>(r)] = {latent_text(latents.row(r).transpose(), spec.tokens_per_text)};
  }
  for (std::size_t i = 0; i < spec.latent_dim; ++i) {
    std::vector<double> axis(spec.latent_dim, 0.0);
    axis[i] = 1.0;
    draw.vocabulary.insert("p" + std::to_string(i), axis);
    axis[i] = -1.0;
    draw.vocabulary.insert("n" + std::to_string(i), axis);
  }
  return draw;
}

FeatureDataset generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_draw(spec).dataset;
}

std::vector<std::vector<TokenSequence>> tokenized_texts(const FeatureDataset& dataset) {
  if (dataset.texts.empty()) fail(ErrorCode::config_error, "dataset has no reference texts");
  std::vector<std::vector<TokenSequence>> out(dataset.texts.size());
  for (std::size_t i = 0; i < dataset.texts.size(); ++i) {
    for (const auto& t : dataset.texts[i]) out[i].push_back(tokenize(t));
  }
  return out;
}

void save_dataset(const FeatureDataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  detail::ensure_directory(dir);
  const auto n = dataset.size();

  nlohmann::json manifest = {
      {"format", "ladder-dataset"},
      {"version", 1},
      {"n", n},
      {"d_x", dataset.x.cols()},
      {"d_y", dataset.y.cols()},
      {"byte_order", "little-endian"},
      {"value_type", "float32"},
      {"x", "x.bin"},
      {"y", "y.bin"},
  };
  detail::write_blob<float>(dir / "x.bin", {dataset.x.data(), static_cast<std::size_t>(dataset.x.size())});
  detail::write_blob<float>(dir / "y.bin", {dataset.y.data(), static_cast<std::size_t>(dataset.y.size())});
  if (dataset.relevance) {
    manifest["relevance"] = "relevance.bin";
    manifest["relevance_scale"] = dataset.relevance_scale;
    detail::write_blob<float>(dir / "relevance.bin",
                              {dataset.relevance->data(), static_cast<std::size_t>(dataset.relevance->size())});
  }
  if (!dataset.texts.empty()) {
    manifest["texts"] = "texts";
    std::ofstream out(dir / "texts", std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write " + (dir / "texts").string());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dataset.texts[i].size(); ++c) {
        const auto& caption = dataset.texts[i][c];
        if (caption.find_first_of("\t\n\r") != std::string::npos) {
          fail(ErrorCode::invalid_argument, "text of item " + std::to_string(i) + " contains a tab or newline");
        }
        if (c) out << '\t';
        out << caption;
      }
      out << '\n';
    }
    if (!out) fail(ErrorCode::io_error, "write failed for " + (dir / "texts").string());
  }
  auto splits = nlohmann::json::array();
  for (auto s : dataset.splits) splits.push_back(split_name(s));
  manifest["splits"] = std::move(splits);
  detail::write_manifest(dir, manifest);
}

FeatureDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest = detail::read_manifest(dir);
  if (detail::manifest_field<std::string>(manifest, "format") != "ladder-dataset") {
    fail(ErrorCode::manifest_error, "manifest 'format' is not ladder-dataset");
  }
  if (detail::manifest_field<std::string>(manifest, "byte_order") != "little-endian") {
    fail(ErrorCode::manifest_error, "manifest 'byte_order' must be little-endian");
  }
  if (detail::manifest_field<std::string>(manifest, "value_type") != "float32") {
    fail(ErrorCode::manifest_error, "manifest 'value_type' must be float32");
  }
  const auto n = detail::manifest_field<std::size_t>(manifest, "n");
  const auto dx = detail::manifest_field<std::size_t>(manifest, "d_x");
  const auto dy = detail::manifest_field<std::size_t>(manifest, "d_y");
  if (n < 2 || dx < 1 || dy < 1) fail(ErrorCode::manifest_error, "manifest declares an empty shape");

  auto load_matrix = [&](const char* key, std::size_t rows, std::size_t cols) {
    const auto file = detail::manifest_field<std::string>(manifest, key);
    const auto values = detail::read_blob<float>(dir / file, rows * cols);
    FloatMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::copy(values.begin(), values.end(), m.data());
    check_finite(m, file);
    return m;
  };

  FeatureDataset ds;
  ds.x = load_matrix("x", n, dx);
  ds.y = load_matrix("y", n, dy);
  if (manifest.contains("relevance")) {
    ds.relevance = load_matrix("relevance", n, n);
    ds.relevance_scale = manifest.value("relevance_scale", std::string{});
  }
  if (manifest.contains("texts")) {
    const auto path = dir / detail::manifest_field<std::string>(manifest, "texts");
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> captions;
      std::size_t start = 0;
      for (;;) {
        const auto tab = line.find('\t', start);
        captions.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      ds.texts.push_back(std::move(captions));
    }
    if (ds.texts.size() != n) {
      fail(ErrorCode::shape_mismatch, path.filename().string() + " has " + std::to_string(ds.texts.size()) +
                                          " lines, manifest declares " + std::to_string(n) + " items");
    }
  }
  const auto split_names = detail::manifest_field<std::vector<std::string>>(manifest, "splits");
  if (split_names.size() != n) fail(ErrorCode::manifest_error, "manifest 'splits' must list one label per item");
  for (const auto& s : split_names) {
    try {
      ds.splits.push_back(parse_split(s));
    } catch (const Error&) {
      fail(ErrorCode::manifest_error, "manifest 'splits' has unknown label '" + s + "'");
    }
  }
  ds.validate();
  return ds;
}

}  // namespace ladder
