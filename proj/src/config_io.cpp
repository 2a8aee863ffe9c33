#include "ladder/config_io.hpp"

#include <json.hpp>

#include "ladder/error.hpp"

namespace ladder {

using nlohmann::json;

const char* loss_family_name(LossFamily f) noexcept {
  switch (f) {
    case LossFamily::triplet_sum: return "triplet-sum";
    case LossFamily::triplet_hardest: return "triplet-hardest";
    case LossFamily::ladder: return "ladder";
    case LossFamily::ladder_hc: return "ladder-hc";
  }
  return "?";
}

LossFamily parse_loss_family(const std::string& name) {
  if (name == "triplet-sum") return LossFamily::triplet_sum;
  if (name == "triplet-hardest") return LossFamily::triplet_hardest;
  if (name == "ladder") return LossFamily::ladder;
  if (name == "ladder-hc") return LossFamily::ladder_hc;
  fail(ErrorCode::config_error,
       "unknown loss '" + name + "' (expected triplet-sum, triplet-hardest, ladder or ladder-hc)");
}

namespace {

json ladder_json(const LadderConfig& c) {
  return {{"levels", c.levels}, {"thresholds", c.thresholds}, {"margins", c.margins}, {"weights", c.weights}};
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) fail(ErrorCode::config_error, std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorCode::config_error, std::string("unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::config_error, std::string("config key '") + key + "' has the wrong type");
    }
  }
}

json parse(const std::string& text) {
  try {
    return text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, std::string("malformed JSON config: ") + e.what());
  }
}

}  // namespace

std::string to_json(const TrainConfig& c) {
  json doc = {
      {"loss", loss_family_name(c.loss.family)},
      {"ladder", ladder_json(c.loss.ladder)},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"embed_dim", c.embed_dim},
      {"lr", {{"initial", c.lr.initial}, {"decay_epoch", c.lr.decay_epoch}, {"decayed", c.lr.decayed}}},
      {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
      {"seed", c.seed},
      {"validation_ks", c.validation_ks},
  };
  return doc.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) { return train_config_from_json(text, TrainConfig{}); }

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base) {
  const json doc = parse(text);
  check_keys(doc, {"loss", "ladder", "batch_size", "epochs", "embed_dim", "lr", "adam", "seed", "validation_ks"},
             "train config");
  TrainConfig c = base;
  if (doc.contains("loss")) {
    std::string name;
    read(doc, "loss", name);
    c.loss.family = parse_loss_family(name);
  }
  if (auto it = doc.find("ladder"); it != doc.end()) {
    check_keys(*it, {"levels", "thresholds", "margins", "weights"}, "ladder");
    read(*it, "levels", c.loss.ladder.levels);
    read(*it, "thresholds", c.loss.ladder.thresholds);
    read(*it, "margins", c.loss.ladder.margins);
    read(*it, "weights", c.loss.ladder.weights);
  }
  read(doc, "batch_size", c.batch_size);
  read(doc, "epochs", c.epochs);
  read(doc, "embed_dim", c.embed_dim);
  if (auto it = doc.find("lr"); it != doc.end()) {
    check_keys(*it, {"initial", "decay_epoch", "decayed"}, "lr");
    read(*it, "initial", c.lr.initial);
    read(*it, "decay_epoch", c.lr.decay_epoch);
    read(*it, "decayed", c.lr.decayed);
  }
  if (auto it = doc.find("adam"); it != doc.end()) {
    check_keys(*it, {"beta1", "beta2", "epsilon"}, "adam");
    read(*it, "beta1", c.adam.beta1);
    read(*it, "beta2", c.adam.beta2);
    read(*it, "epsilon", c.adam.epsilon);
  }
  read(doc, "seed", c.seed);
  read(doc, "validation_ks", c.validation_ks);
  c.loss.ladder.sampling =
      c.loss.family == LossFamily::ladder_hc ? Sampling::hard_contrastive : Sampling::full_sum;
  c.validate();
  return c;
}

std::string to_json(const SyntheticSpec& s) {
  json doc = {{"n", s.n},
              {"latent_dim", s.latent_dim},
              {"query_dim", s.query_dim},
              {"candidate_dim", s.candidate_dim},
              {"noise", s.noise},
              {"clusters", s.clusters},
              {"cluster_spread", s.cluster_spread},
              {"n_validation", s.n_validation},
              {"n_test", s.n_test},
              {"tokens_per_text", s.tokens_per_text},
              {"seed", s.seed}};
  return doc.dump(2);
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  const json doc = parse(text);
  check_keys(doc,
             {"n", "latent_dim", "query_dim", "candidate_dim", "noise", "clusters", "cluster_spread",
              "n_validation", "n_test", "tokens_per_text", "seed"},
             "synthetic spec");
  SyntheticSpec s;
  read(doc, "n", s.n);
  read(doc, "latent_dim", s.latent_dim);
  read(doc, "query_dim", s.query_dim);
  read(doc, "candidate_dim", s.candidate_dim);
  read(doc, "noise", s.noise);
  read(doc, "clusters", s.clusters);
  read(doc, "cluster_spread", s.cluster_spread);
  read(doc, "n_validation", s.n_validation);
  read(doc, "n_test", s.n_test);
  read(doc, "tokens_per_text", s.tokens_per_text);
  read(doc, "seed", s.seed);
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorCode::invalid_spec, e.what());
  }
  return s;
}

}  // namespace ladder
