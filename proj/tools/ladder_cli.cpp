// ladder: command-line driver over the C API.
//
// Exit status: 0 success, 1 a check failed (gradcheck tolerance), 2 usage or
// configuration error, 3 runtime failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ladder/ladder.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(ladder_status s) {
  switch (s) {
    case LADDER_ERR_INVALID_ARGUMENT:
    case LADDER_ERR_CONFIG:
    case LADDER_ERR_INVALID_SPEC:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void check(ladder_status s, const std::string& what) {
  if (s == LADDER_OK) return;
  throw Failure{exit_code_for(s), what + ": " + ladder_status_name(s) + ": " + ladder_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{kExitUsage, message}; }

// RAII for C handles and strings.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : ptr(std::exchange(o.ptr, nullptr)) {}
  Handle& operator=(Handle&& o) noexcept {
    std::swap(ptr, o.ptr);
    return *this;
  }
  ~Handle() {
    if (ptr) Free(ptr);
  }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};
using Dataset = Handle<ladder_dataset, ladder_dataset_free>;
using Model = Handle<ladder_model, ladder_model_free>;
using TrainLog = Handle<ladder_train_log, ladder_train_log_free>;
using Report = Handle<ladder_report, ladder_report_free>;

std::string take_string(char* s) {
  std::string out(s ? s : "");
  ladder_string_free(s);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    usage_error("config file " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw Failure{kExitRuntime, "cannot write " + path.string()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kExitRuntime, "cannot create " + dir.string() + ": " + ec.message()};
}

// Config file layout: {"synthetic": {...}, "train": {...}, "ks": [...],
// "arms": [{"name": ..., "train": {...}}]}. Each verb reads its sections.
struct ConfigFile {
  json doc = json::object();

  json section(const char* key) const { return doc.contains(key) ? doc[key] : json::object(); }
};

ConfigFile load_config(const std::string& path) {
  ConfigFile c;
  if (path.empty()) return c;
  c.doc = read_json_file(path);
  if (!c.doc.is_object()) usage_error("config file must hold a JSON object");
  for (const auto& [key, value] : c.doc.items()) {
    if (key != "synthetic" && key != "train" && key != "ks" && key != "arms" && key != "data") {
      usage_error("config file: unknown key '" + key + "'");
    }
  }
  return c;
}

// ---- synthetic spec flags --------------------------------------------------

struct SpecFlags {
  std::optional<std::size_t> n, latent_dim, query_dim, candidate_dim, clusters, n_validation, n_test, tokens;
  std::optional<double> noise, spread;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "number of pairs");
    app->add_option("--latent-dim", latent_dim, "latent dimension k");
    app->add_option("--query-dim", query_dim, "query feature dimension d_x");
    app->add_option("--candidate-dim", candidate_dim, "candidate feature dimension d_y");
    app->add_option("--noise", noise, "feature noise level");
    app->add_option("--clusters", clusters, "latent cluster count");
    app->add_option("--cluster-spread", spread, "latent spread around cluster centers");
    app->add_option("--n-validation", n_validation, "validation split size");
    app->add_option("--n-test", n_test, "test split size");
    app->add_option("--tokens-per-text", tokens, "tokens in each generated reference text");
  }

  void apply(json& spec) const {
    auto set = [&spec](const char* key, const auto& v) {
      if (v) spec[key] = *v;
    };
    set("n", n);
    set("latent_dim", latent_dim);
    set("query_dim", query_dim);
    set("candidate_dim", candidate_dim);
    set("noise", noise);
    set("clusters", clusters);
    set("cluster_spread", spread);
    set("n_validation", n_validation);
    set("n_test", n_test);
    set("tokens_per_text", tokens);
  }
};

// ---- train config flags ----------------------------------------------------

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error("not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_list(text)) {
    if (v < 1 || v != std::floor(v)) usage_error("K values must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) usage_error("at least one K is required");
  return out;
}

// Ladder settings for L in {1, 2, 3}.
json ladder_for_levels(int levels) {
  switch (levels) {
    case 1: return {{"levels", 1}, {"thresholds", json::array()}, {"margins", {0.2}}, {"weights", {1.0}}};
    case 2: return {{"levels", 2}, {"thresholds", {0.63}}, {"margins", {0.2, 0.01}}, {"weights", {1.0, 0.25}}};
    case 3:
      return {{"levels", 3},
              {"thresholds", {0.63, 0.56}},
              {"margins", {0.2, 0.01, 0.01}},
              {"weights", {1.0, 0.25, 0.125}}};
    default: usage_error("ladder count must be 1, 2 or 3");
  }
}

struct TrainFlags {
  std::optional<std::string> loss;
  std::optional<std::size_t> batch_size, embed_dim;
  std::optional<int> epochs, decay_epoch, levels;
  std::optional<double> lr, lr_decayed, beta2;

  void attach(CLI::App* app) {
    app->add_option("--loss", loss, "triplet-sum | triplet-hardest | ladder | ladder-hc")
        ->check(CLI::IsMember({"triplet-sum", "triplet-hardest", "ladder", "ladder-hc"}));
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch-size", batch_size, "mini-batch size");
    app->add_option("--embed-dim", embed_dim, "embedding dimension D");
    app->add_option("--lr", lr, "initial learning rate");
    app->add_option("--lr-decay-epoch", decay_epoch, "epoch at which the decayed rate starts");
    app->add_option("--lr-decayed", lr_decayed, "learning rate after decay");
    app->add_option("--levels", levels, "ladder count L (1-3, preset thresholds)");
    app->add_option("--beta2", beta2, "weight of the second ladder level");
  }

  void apply(json& cfg) const {
    if (loss) cfg["loss"] = *loss;
    if (epochs) cfg["epochs"] = *epochs;
    if (batch_size) cfg["batch_size"] = *batch_size;
    if (embed_dim) cfg["embed_dim"] = *embed_dim;
    if (lr) cfg["lr"]["initial"] = *lr;
    if (decay_epoch) cfg["lr"]["decay_epoch"] = *decay_epoch;
    if (lr_decayed) cfg["lr"]["decayed"] = *lr_decayed;
    if (levels) cfg["ladder"] = ladder_for_levels(*levels);
    if (beta2) {
      if (!cfg.contains("ladder")) cfg["ladder"] = ladder_for_levels(2);
      auto& w = cfg["ladder"]["weights"];
      if (w.size() < 2) usage_error("--beta2 needs at least two ladder levels");
      w[1] = *beta2;
    }
  }
};

// Normalized effective train config as the library sees it.
json effective_train_config(const ladder_dataset* ds, const json& cfg) {
  Model m;
  check(ladder_model_init(ds, cfg.dump().c_str(), m.out()), "train config");
  char* text = nullptr;
  check(ladder_model_config(m.get(), &text), "train config");
  return json::parse(take_string(text));
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  check(ladder_dataset_load(dir.c_str(), ds.out()), "loading dataset " + dir);
  return ds;
}

std::vector<std::size_t> clamp_ks(std::vector<std::size_t> ks, std::size_t n) {
  for (auto& k : ks) {
    if (k > n) {
      std::cerr << "warning: K=" << k << " exceeds the " << n << " evaluated items; using " << n << "\n";
      k = n;
    }
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

std::size_t split_size(const ladder_dataset* ds, const char* split) {
  char* text = nullptr;
  check(ladder_dataset_describe(ds, &text), "describe dataset");
  return json::parse(take_string(text))[split].get<std::size_t>();
}

// ---- verbs -----------------------------------------------------------------

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--config", c.config_path, "JSON experiment config; flags override it");
  auto* o = app->add_option("--out", c.out, "output directory");
  if (out_required) o->required();
  app->add_option("--seed", c.seed, "random seed");
}

struct GenArgs {
  Common common;
  SpecFlags spec;
  std::string relevance = "planted";
  std::string fine_scores;
  double fine_threshold = 0.8;
  bool fine_mandatory = false;
};

int cmd_gen(const GenArgs& a) {
  const auto cfg = load_config(a.common.config_path);
  json spec = cfg.section("synthetic");
  a.spec.apply(spec);
  if (a.common.seed) spec["seed"] = *a.common.seed;

  const fs::path out(a.common.out);
  ensure_dir(out);
  const auto wv_path = (out / "word_vectors.txt").string();
  Dataset ds;
  check(ladder_dataset_generate(spec.dump().c_str(), wv_path.c_str(), ds.out()), "generating dataset");
  if (a.relevance == "cbow") {
    check(ladder_dataset_build_relevance(ds.get(), wv_path.c_str(), a.fine_scores.empty() ? nullptr : a.fine_scores.c_str(),
                                         a.fine_threshold, a.fine_mandatory ? 1 : 0),
          "building relevance");
  } else if (a.relevance == "none") {
    check(ladder_dataset_drop_relevance(ds.get()), "dropping relevance");
  }
  check(ladder_dataset_save(ds.get(), out.string().c_str()), "saving dataset");

  json effective = {{"synthetic", spec},
                    {"relevance", a.relevance},
                    {"fine_scores", a.fine_scores},
                    {"fine_threshold", a.fine_threshold},
                    {"fine_mandatory", a.fine_mandatory}};
  write_text(out / "gen_config.json", effective.dump(2) + "\n");
  char* desc = nullptr;
  check(ladder_dataset_describe(ds.get(), &desc), "describe dataset");
  std::cout << take_string(desc) << "\n";
  return kExitOk;
}

struct TrainArgs {
  Common common;
  TrainFlags train;
  std::string data;
};

int cmd_train(const TrainArgs& a) {
  const auto cfg = load_config(a.common.config_path);
  json train_cfg = cfg.section("train");
  a.train.apply(train_cfg);
  if (a.common.seed) train_cfg["seed"] = *a.common.seed;
  const auto ds = load_dataset(a.data);
  const auto effective = effective_train_config(ds.get(), train_cfg);

  Model model;
  TrainLog log;
  check(ladder_train(ds.get(), effective.dump().c_str(), model.out(), log.out()), "training");
  const fs::path out(a.common.out);
  ensure_dir(out);
  check(ladder_model_save(model.get(), (out / "checkpoint").string().c_str()), "saving checkpoint");
  char* csv = nullptr;
  check(ladder_train_log_csv(log.get(), &csv), "train log");
  write_text(out / "log.csv", take_string(csv));
  check(ladder_train_log_timing_csv(log.get(), &csv), "train log");
  write_text(out / "timing.csv", take_string(csv));
  write_text(out / "config.json", json{{"data", a.data}, {"train", effective}}.dump(2) + "\n");

  const std::size_t epochs = ladder_train_log_epochs(log.get());
  if (epochs > 0) {
    double tl = 0.0, vl = 0.0;
    check(ladder_train_log_loss(log.get(), epochs - 1, &tl, &vl), "train log");
    std::printf("epochs=%zu train_loss=%.6f val_loss=%.6f\n", epochs, tl, vl);
  }
  return kExitOk;
}

struct EvalArgs {
  Common common;
  std::string data, checkpoint, ks = "100,1000", split = "test";
};

ladder_split parse_split(const std::string& s) {
  if (s == "train") return LADDER_SPLIT_TRAIN;
  if (s == "validation") return LADDER_SPLIT_VALIDATION;
  return LADDER_SPLIT_TEST;
}

int cmd_eval(const EvalArgs& a) {
  const auto cfg = load_config(a.common.config_path);
  const auto ds = load_dataset(a.data);
  Model model;
  check(ladder_model_load(a.checkpoint.c_str(), model.out()), "loading checkpoint " + a.checkpoint);
  auto ks = parse_ks(a.ks);
  if (a.ks == "100,1000" && cfg.doc.contains("ks")) ks = cfg.doc["ks"].get<std::vector<std::size_t>>();
  ks = clamp_ks(ks, split_size(ds.get(), a.split.c_str()));

  Report report;
  check(ladder_evaluate(model.get(), ds.get(), parse_split(a.split), ks.data(), ks.size(), report.out()), "evaluating");
  char* text = nullptr;
  check(ladder_report_text(report.get(), &text), "report");
  const auto txt = take_string(text);
  check(ladder_report_json(report.get(), &text), "report");
  const auto js = take_string(text);
  const fs::path out(a.common.out);
  ensure_dir(out);
  write_text(out / "report.txt", txt);
  write_text(out / "report.json", js + "\n");
  write_text(out / "eval_config.json",
             json{{"data", a.data}, {"checkpoint", a.checkpoint}, {"split", a.split}, {"ks", ks}}.dump(2) + "\n");
  std::cout << txt;
  return kExitOk;
}

struct SweepArgs {
  Common common;
  TrainFlags train;
  SpecFlags spec;
  std::string data;
  std::string arm_beta2, arm_levels;
  std::string ks = "100,200,1000";
  std::size_t seeds = 10;
  std::size_t jobs = 1;
};

struct Arm {
  std::string name;
  json train;
};

struct ArmResult {
  std::vector<double> cs;  // mean over directions, per K
  double r1 = 0, r5 = 0, r10 = 0, mean_rank = 0;
  std::optional<Failure> error;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_sweep(const SweepArgs& a) {
  const auto cfg = load_config(a.common.config_path);
  json base = cfg.section("train");
  a.train.apply(base);
  json spec = cfg.section("synthetic");
  a.spec.apply(spec);
  const std::uint64_t first_seed = a.common.seed.value_or(0);
  if (a.seeds == 0) usage_error("--seeds must be positive");

  std::vector<Arm> arms;
  if (!a.arm_beta2.empty()) {
    for (double b : parse_list(a.arm_beta2)) {
      json t = base;
      if (!t.contains("ladder")) t["ladder"] = ladder_for_levels(2);
      if (t["ladder"]["weights"].size() < 2) usage_error("beta2 arms need at least two ladder levels");
      t["ladder"]["weights"][1] = b;
      std::ostringstream name;
      name << "beta2=" << b;
      arms.push_back({name.str(), t});
    }
  }
  if (!a.arm_levels.empty()) {
    for (double l : parse_list(a.arm_levels)) {
      json t = base;
      t["ladder"] = ladder_for_levels(static_cast<int>(l));
      arms.push_back({"L=" + std::to_string(static_cast<int>(l)), t});
    }
  }
  if (cfg.doc.contains("arms")) {
    for (const auto& arm : cfg.doc["arms"]) {
      json t = base;
      t.merge_patch(arm.value("train", json::object()));
      arms.push_back({arm.value("name", "arm" + std::to_string(arms.size())), t});
    }
  }
  if (arms.empty()) arms.push_back({"base", base});

  auto ks = parse_ks(a.ks);
  if (a.ks == "100,200,1000" && cfg.doc.contains("ks")) ks = cfg.doc["ks"].get<std::vector<std::size_t>>();

  // One dataset per seed, shared by every arm.
  std::vector<Dataset> datasets(a.seeds);
  for (std::size_t s = 0; s < a.seeds; ++s) {
    if (!a.data.empty()) {
      datasets[s] = load_dataset(a.data);
    } else {
      json sp = spec;
      sp["seed"] = first_seed + s;
      check(ladder_dataset_generate(sp.dump().c_str(), nullptr, datasets[s].out()), "generating dataset");
    }
  }
  ks = clamp_ks(ks, split_size(datasets[0].get(), "test"));

  // Validate every arm up front so configuration errors exit before training.
  std::vector<json> effective(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    arms[i].train["seed"] = first_seed;
    effective[i] = effective_train_config(datasets[0].get(), arms[i].train);
  }

  const std::size_t total = arms.size() * a.seeds;
  std::vector<ArmResult> results(total);
  auto run = [&](std::size_t job) {
    const std::size_t arm = job / a.seeds, s = job % a.seeds;
    json t = effective[arm];
    t["seed"] = first_seed + s;
    ArmResult& r = results[job];
    try {
      Model model;
      check(ladder_train(datasets[s].get(), t.dump().c_str(), model.out(), nullptr), "training arm " + arms[arm].name);
      Report report;
      check(ladder_evaluate(model.get(), datasets[s].get(), LADDER_SPLIT_TEST, ks.data(), ks.size(), report.out()),
            "evaluating arm " + arms[arm].name);
      auto both = [&](auto getter) {
        double x = 0, y = 0;
        check(getter(LADDER_X2Y, &x), "report");
        check(getter(LADDER_Y2X, &y), "report");
        return (x + y) / 2.0;
      };
      for (std::size_t k : ks) {
        r.cs.push_back(both([&](ladder_direction d, double* o) { return ladder_report_cs(report.get(), d, k, o); }));
      }
      r.r1 = both([&](ladder_direction d, double* o) { return ladder_report_recall(report.get(), d, 1, o); });
      r.r5 = both([&](ladder_direction d, double* o) { return ladder_report_recall(report.get(), d, 5, o); });
      r.r10 = both([&](ladder_direction d, double* o) { return ladder_report_recall(report.get(), d, 10, o); });
      r.mean_rank = both([&](ladder_direction d, double* o) { return ladder_report_mean_rank(report.get(), d, o); });
    } catch (const Failure& f) {
      r.error = f;
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(a.jobs, total));
  if (workers == 1) {
    for (std::size_t j = 0; j < total; ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < total; j = next++) run(j);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& r : results) {
    if (r.error) throw *r.error;
  }

  std::string header = "arm,seed";
  for (std::size_t k : ks) header += ",cs@" + std::to_string(k);
  header += ",r1,r5,r10,mean_rank\n";
  std::string rows = header, summary = "arm,seeds";
  for (std::size_t k : ks) summary += ",cs@" + std::to_string(k);
  summary += ",r1,r5,r10,mean_rank\n";
  for (std::size_t arm = 0; arm < arms.size(); ++arm) {
    std::vector<double> sum(ks.size() + 4, 0.0);
    for (std::size_t s = 0; s < a.seeds; ++s) {
      const auto& r = results[arm * a.seeds + s];
      rows += arms[arm].name + "," + std::to_string(first_seed + s);
      for (std::size_t i = 0; i < ks.size(); ++i) {
        rows += "," + fmt(r.cs[i]);
        sum[i] += r.cs[i];
      }
      const double tail[4] = {r.r1, r.r5, r.r10, r.mean_rank};
      for (int i = 0; i < 4; ++i) {
        rows += "," + fmt(tail[i]);
        sum[ks.size() + static_cast<std::size_t>(i)] += tail[i];
      }
      rows += "\n";
    }
    summary += arms[arm].name + "," + std::to_string(a.seeds);
    for (double v : sum) summary += "," + fmt(v / static_cast<double>(a.seeds));
    summary += "\n";
  }

  const fs::path out(a.common.out);
  ensure_dir(out);
  write_text(out / "sweep.csv", rows);
  write_text(out / "summary.csv", summary);
  json echo = {{"ks", ks}, {"seeds", a.seeds}, {"first_seed", first_seed}, {"arms", json::array()}};
  if (a.data.empty()) echo["synthetic"] = spec;
  else echo["data"] = a.data;
  for (std::size_t i = 0; i < arms.size(); ++i) echo["arms"].push_back({{"name", arms[i].name}, {"train", effective[i]}});
  write_text(out / "config.json", echo.dump(2) + "\n");
  std::cout << summary;
  return kExitOk;
}

struct GradcheckArgs {
  Common common;
  TrainFlags train;
  std::string data, checkpoint;
  std::size_t probes = 100;
  std::size_t batch_size = 0;
  double step = 1e-5, tolerance = 1e-4, corrupt_scale = 1.0;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const auto cfg = load_config(a.common.config_path);
  const auto ds = load_dataset(a.data);
  Model model;
  json effective;
  if (!a.checkpoint.empty()) {
    check(ladder_model_load(a.checkpoint.c_str(), model.out()), "loading checkpoint " + a.checkpoint);
    char* text = nullptr;
    check(ladder_model_config(model.get(), &text), "checkpoint config");
    effective = json::parse(take_string(text));
  } else {
    json train_cfg = cfg.section("train");
    a.train.apply(train_cfg);
    if (a.common.seed) train_cfg["seed"] = *a.common.seed;
    effective = effective_train_config(ds.get(), train_cfg);
    check(ladder_model_init(ds.get(), effective.dump().c_str(), model.out()), "initializing model");
  }

  if (a.probes == 0) std::cerr << "warning: zero probes requested; the audit passes vacuously\n";
  ladder_audit_result res{};
  check(ladder_gradcheck(model.get(), ds.get(), a.probes, a.step, a.common.seed.value_or(0), a.batch_size,
                         a.corrupt_scale, &res),
        "gradient audit");
  const bool pass = res.max_relative_error < a.tolerance;
  json report = {{"probes", res.probes},
                 {"rejected", res.rejected},
                 {"max_relative_error", res.max_relative_error},
                 {"tolerance", a.tolerance},
                 {"step", a.step},
                 {"pass", pass},
                 {"vacuous", a.probes == 0}};
  if (res.probes < a.probes) {
    std::cerr << "warning: only " << res.probes << " of " << a.probes << " probes avoided hinge boundaries\n";
  }
  if (!a.common.out.empty()) {
    const fs::path out(a.common.out);
    ensure_dir(out);
    write_text(out / "gradcheck.json", report.dump(2) + "\n");
    write_text(out / "config.json",
               json{{"data", a.data}, {"checkpoint", a.checkpoint}, {"train", effective}}.dump(2) + "\n");
  }
  std::printf("probes=%zu rejected=%zu max_relative_error=%.3e tolerance=%.3e %s\n", res.probes, res.rejected,
              res.max_relative_error, a.tolerance, pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ladder-loss joint embeddings: generate data, train, evaluate, sweep, audit gradients"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ladder_version()));

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(g, gen.common, true);
  gen.spec.attach(g);
  g->add_option("--relevance", gen.relevance, "planted | cbow | none")->check(CLI::IsMember({"planted", "cbow", "none"}));
  g->add_option("--fine-scores", gen.fine_scores, "precomputed `q p score` file refining cbow scores");
  g->add_option("--fine-threshold", gen.fine_threshold, "coarse score above which fine scores apply");
  g->add_flag("--fine-mandatory", gen.fine_mandatory, "fail when a pair above the threshold has no fine score");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train both encoders");
  add_common(t, tr.common, true);
  tr.train.attach(t);
  t->add_option("--data", tr.data, "dataset directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(e, ev.common, true);
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint directory")->required();
  e->add_option("--ks", ev.ks, "comma-separated CS@K cut-offs")->capture_default_str();
  e->add_option("--split", ev.split, "split to evaluate")->check(CLI::IsMember({"train", "validation", "test"}));

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "train and evaluate arms over shared seeds");
  add_common(s, sw.common, true);
  sw.train.attach(s);
  sw.spec.attach(s);
  s->add_option("--data", sw.data, "dataset directory (default: synthetic data per seed)");
  s->add_option("--arm-beta2", sw.arm_beta2, "comma-separated beta_2 values, one arm each");
  s->add_option("--arm-levels", sw.arm_levels, "comma-separated ladder counts, one arm each");
  s->add_option("--seeds", sw.seeds, "number of seeds, starting at --seed")->capture_default_str();
  s->add_option("--ks", sw.ks, "comma-separated CS@K cut-offs")->capture_default_str();
  s->add_option("--jobs", sw.jobs, "arms trained concurrently (results are identical to --jobs 1)");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  add_common(c, gc.common, false);
  gc.train.attach(c);
  c->add_option("--data", gc.data, "dataset directory")->required();
  c->add_option("--checkpoint", gc.checkpoint, "audit this checkpoint instead of a fresh initialization");
  c->add_option("--probes", gc.probes, "random parameter coordinates to probe")->capture_default_str();
  c->add_option("--step", gc.step, "central-difference step")->capture_default_str();
  c->add_option("--tolerance", gc.tolerance, "maximum accepted relative error")->capture_default_str();
  c->add_option("--corrupt-scale", gc.corrupt_scale, "multiply the analytic gradient (test hook)");
  c->add_option("--audit-batch-size", gc.batch_size, "batch size of the audited batch (0: from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_sweep(sw);
    if (*c) return cmd_gradcheck(gc);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
