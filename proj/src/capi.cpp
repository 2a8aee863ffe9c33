#include "ladder/ladder.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "ladder/config_io.hpp"
#include "ladder/dataset.hpp"
#include "ladder/error.hpp"
#include "ladder/metrics.hpp"
#include "ladder/relevance.hpp"
#include "ladder/trainer.hpp"

struct ladder_dataset {
  ladder::FeatureDataset value;
};

struct ladder_model {
  ladder::Model value;
};

struct ladder_train_log {
  ladder::TrainLog value;
};

struct ladder_report {
  ladder::EvalReport value;
};

namespace {

thread_local std::string last_error;

ladder_status status_of(ladder::ErrorCode code) {
  using ladder::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return LADDER_ERR_INVALID_ARGUMENT;
    case ErrorCode::config_error:
    case ErrorCode::non_monotone_thresholds: return LADDER_ERR_CONFIG;
    case ErrorCode::invalid_spec: return LADDER_ERR_INVALID_SPEC;
    case ErrorCode::io_error: return LADDER_ERR_IO;
    case ErrorCode::manifest_error: return LADDER_ERR_MANIFEST;
    case ErrorCode::shape_mismatch: return LADDER_ERR_SHAPE_MISMATCH;
    case ErrorCode::non_finite_value: return LADDER_ERR_NON_FINITE_VALUE;
    case ErrorCode::non_finite_loss: return LADDER_ERR_NON_FINITE_LOSS;
    case ErrorCode::no_known_tokens: return LADDER_ERR_NO_KNOWN_TOKENS;
    case ErrorCode::missing_fine_score: return LADDER_ERR_MISSING_FINE_SCORE;
    case ErrorCode::partition_mismatch:
    case ErrorCode::empty_level:
    case ErrorCode::zero_vector:
    case ErrorCode::degenerate_input: return LADDER_ERR_NUMERIC;
  }
  return LADDER_ERR_INTERNAL;
}

// Runs `body`, translating any exception into a status and last_error.
template <typename F>
ladder_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return LADDER_OK;
  } catch (const ladder::Error& e) {
    last_error = std::string(ladder::to_string(e.code())) + ": " + e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return LADDER_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return LADDER_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return LADDER_ERR_INTERNAL;
  }
}

template <typename T>
void require(const T* p, const char* what) {
  if (!p) ladder::fail(ladder::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

char* duplicate(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ladder::Direction direction_of(ladder_direction d) {
  if (d == LADDER_X2Y) return ladder::Direction::query_to_candidate;
  if (d == LADDER_Y2X) return ladder::Direction::candidate_to_query;
  ladder::fail(ladder::ErrorCode::invalid_argument, "unknown direction");
}

std::string log_csv(const ladder::TrainLog& log) {
  std::string out = "epoch,lr,train_loss,val_loss";
  if (!log.epochs.empty()) {
    for (const auto& d : log.epochs.front().validation.directions) {
      const std::string p = ladder::direction_name(d.direction);
      for (const auto& c : d.coherent) out += "," + p + "_cs@" + std::to_string(c.k);
      out += "," + p + "_r1," + p + "_r5," + p + "_r10," + p + "_mean_rank";
    }
  }
  out += '\n';
  for (const auto& e : log.epochs) {
    out += std::to_string(e.epoch) + "," + number(e.learning_rate) + "," + number(e.train_loss) + "," +
           number(e.validation_loss);
    for (const auto& d : e.validation.directions) {
      for (const auto& c : d.coherent) out += "," + number(c.mean);
      out += "," + number(d.r1) + "," + number(d.r5) + "," + number(d.r10) + "," + number(d.mean_rank);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

extern "C" {

const char* ladder_version(void) { return "1.0.0"; }

const char* ladder_status_name(ladder_status status) {
  switch (status) {
    case LADDER_OK: return "ok";
    case LADDER_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LADDER_ERR_CONFIG: return "config error";
    case LADDER_ERR_INVALID_SPEC: return "invalid spec";
    case LADDER_ERR_IO: return "I/O error";
    case LADDER_ERR_MANIFEST: return "manifest error";
    case LADDER_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case LADDER_ERR_NON_FINITE_VALUE: return "non-finite value";
    case LADDER_ERR_NON_FINITE_LOSS: return "non-finite loss";
    case LADDER_ERR_NO_KNOWN_TOKENS: return "no known tokens";
    case LADDER_ERR_MISSING_FINE_SCORE: return "missing fine score";
    case LADDER_ERR_NUMERIC: return "numeric error";
    case LADDER_ERR_OUT_OF_MEMORY: return "out of memory";
    case LADDER_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ladder_last_error(void) { return last_error.c_str(); }

void ladder_string_free(char* s) { std::free(s); }

ladder_status ladder_dataset_generate(const char* spec_json, const char* word_vectors_path, ladder_dataset** out) {
  return guarded([&] {
    require(out, "out");
    const auto spec = ladder::synthetic_spec_from_json(spec_json ? spec_json : "");
    auto draw = ladder::generate_synthetic_draw(spec);
    if (word_vectors_path) draw.vocabulary.save(word_vectors_path);
    *out = new ladder_dataset{std::move(draw.dataset)};
  });
}

ladder_status ladder_dataset_load(const char* dir, ladder_dataset** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new ladder_dataset{ladder::load_dataset(dir)};
  });
}

ladder_status ladder_dataset_save(const ladder_dataset* dataset, const char* dir) {
  return guarded([&] {
    require(dataset, "dataset");
    require(dir, "dir");
    ladder::save_dataset(dataset->value, dir);
  });
}

void ladder_dataset_free(ladder_dataset* dataset) { delete dataset; }

ladder_status ladder_dataset_describe(const ladder_dataset* dataset, char** json_out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(json_out, "json_out");
    const auto& ds = dataset->value;
    nlohmann::json doc = {
        {"n", ds.size()},
        {"d_x", ds.x.cols()},
        {"d_y", ds.y.cols()},
        {"train", ds.indices(ladder::Split::train).size()},
        {"validation", ds.indices(ladder::Split::validation).size()},
        {"test", ds.indices(ladder::Split::test).size()},
        {"has_relevance", ds.relevance.has_value()},
        {"relevance_scale", ds.relevance_scale},
        {"has_texts", !ds.texts.empty()},
    };
    *json_out = duplicate(doc.dump(2));
  });
}

ladder_status ladder_dataset_build_relevance(ladder_dataset* dataset, const char* word_vectors_path,
                                             const char* fine_scores_path, double fine_threshold,
                                             int fine_mandatory) {
  return guarded([&] {
    require(dataset, "dataset");
    require(word_vectors_path, "word_vectors_path");
    const auto table = ladder::WordVectorTable::load(word_vectors_path);
    std::optional<ladder::FineScores> fine;
    if (fine_scores_path) fine = ladder::FineScores::load(fine_scores_path);
    ladder::RelevanceOptions options;
    options.fine_threshold = fine_threshold;
    options.fine_mode = fine_mandatory ? ladder::FineScoreMode::mandatory : ladder::FineScoreMode::optional;
    options.fine = fine ? &*fine : nullptr;
    const auto refs = ladder::tokenized_texts(dataset->value);
    auto rel = ladder::build_relevance_matrix(refs, table, options);
    dataset->value.relevance = rel.values.cast<float>();
    dataset->value.relevance_scale = rel.scale;
  });
}

ladder_status ladder_dataset_drop_relevance(ladder_dataset* dataset) {
  return guarded([&] {
    require(dataset, "dataset");
    dataset->value.relevance.reset();
    dataset->value.relevance_scale.clear();
  });
}

ladder_status ladder_train(const ladder_dataset* dataset, const char* config_json, ladder_model** model_out,
                           ladder_train_log** log_out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(model_out, "model_out");
    const auto cfg = ladder::train_config_from_json(config_json ? config_json : "");
    auto result = ladder::train(dataset->value, cfg);
    auto* model = new ladder_model{std::move(result.model)};
    if (log_out) {
      try {
        *log_out = new ladder_train_log{std::move(result.log)};
      } catch (...) {
        delete model;
        throw;
      }
    }
    *model_out = model;
  });
}

ladder_status ladder_model_init(const ladder_dataset* dataset, const char* config_json, ladder_model** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const auto cfg = ladder::train_config_from_json(config_json ? config_json : "");
    *out = new ladder_model{ladder::initialize_model(dataset->value, cfg)};
  });
}

ladder_status ladder_model_save(const ladder_model* model, const char* dir) {
  return guarded([&] {
    require(model, "model");
    require(dir, "dir");
    ladder::save_checkpoint(model->value, dir);
  });
}

ladder_status ladder_model_load(const char* dir, ladder_model** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new ladder_model{ladder::load_checkpoint(dir)};
  });
}

ladder_status ladder_model_config(const ladder_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    *json_out = duplicate(ladder::to_json(model->value.config));
  });
}

void ladder_model_free(ladder_model* model) { delete model; }

size_t ladder_train_log_epochs(const ladder_train_log* log) { return log ? log->value.epochs.size() : 0; }

ladder_status ladder_train_log_loss(const ladder_train_log* log, size_t epoch_index, double* train_loss,
                                    double* validation_loss) {
  return guarded([&] {
    require(log, "log");
    if (epoch_index >= log->value.epochs.size()) {
      ladder::fail(ladder::ErrorCode::invalid_argument, "epoch index out of range");
    }
    const auto& e = log->value.epochs[epoch_index];
    if (train_loss) *train_loss = e.train_loss;
    if (validation_loss) *validation_loss = e.validation_loss;
  });
}

ladder_status ladder_train_log_csv(const ladder_train_log* log, char** csv_out) {
  return guarded([&] {
    require(log, "log");
    require(csv_out, "csv_out");
    *csv_out = duplicate(log_csv(log->value));
  });
}

ladder_status ladder_train_log_timing_csv(const ladder_train_log* log, char** csv_out) {
  return guarded([&] {
    require(log, "log");
    require(csv_out, "csv_out");
    std::string out = "epoch,seconds\n";
    for (const auto& e : log->value.epochs) out += std::to_string(e.epoch) + "," + number(e.seconds) + "\n";
    *csv_out = duplicate(out);
  });
}

void ladder_train_log_free(ladder_train_log* log) { delete log; }

ladder_status ladder_evaluate(const ladder_model* model, const ladder_dataset* dataset, ladder_split split,
                              const size_t* ks, size_t n_ks, ladder_report** out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(ks, "ks");
    require(out, "out");
    if (split < LADDER_SPLIT_TRAIN || split > LADDER_SPLIT_TEST) {
      ladder::fail(ladder::ErrorCode::invalid_argument, "unknown split");
    }
    const auto& ds = dataset->value;
    if (!ds.relevance) ladder::fail(ladder::ErrorCode::config_error, "evaluation needs a relevance matrix");
    const auto rows = ds.indices(static_cast<ladder::Split>(split));
    if (rows.size() < 2) ladder::fail(ladder::ErrorCode::invalid_argument, "split has fewer than two items");
    const auto space = model->value.embed(ds, rows);
    ladder::Matrix rel(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows.size(); ++j) {
        rel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            (*ds.relevance)(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(rows[j]));
      }
    }
    auto report = ladder::evaluate(space, rel, std::span<const std::size_t>(ks, n_ks));
    *out = new ladder_report{std::move(report)};
  });
}

ladder_status ladder_evaluate_embeddings(const double* query, const double* candidate, size_t n, size_t dim,
                                         const double* relevance, const size_t* ks, size_t n_ks,
                                         ladder_report** out) {
  return guarded([&] {
    require(query, "query");
    require(candidate, "candidate");
    require(relevance, "relevance");
    require(ks, "ks");
    require(out, "out");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(dim);
    ladder::EmbeddingSpace space{Eigen::Map<const ladder::Matrix>(query, rows, cols),
                                 Eigen::Map<const ladder::Matrix>(candidate, rows, cols)};
    const ladder::Matrix rel = Eigen::Map<const ladder::Matrix>(relevance, rows, rows);
    auto report = ladder::evaluate(space, rel, std::span<const std::size_t>(ks, n_ks));
    *out = new ladder_report{std::move(report)};
  });
}

ladder_status ladder_report_text(const ladder_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = duplicate(ladder::report_to_text(report->value));
  });
}

ladder_status ladder_report_json(const ladder_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = duplicate(ladder::report_to_json(report->value));
  });
}

ladder_status ladder_report_parse_json(const char* json, ladder_report** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new ladder_report{ladder::report_from_json(json)};
  });
}

ladder_status ladder_report_cs(const ladder_report* report, ladder_direction direction, size_t k, double* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    const auto* agg = report->value.direction(direction_of(direction)).find(k);
    if (!agg) ladder::fail(ladder::ErrorCode::invalid_argument, "report has no CS@" + std::to_string(k));
    *out = agg->mean;
  });
}

ladder_status ladder_report_recall(const ladder_report* report, ladder_direction direction, size_t k,
                                   double* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    const auto& d = report->value.direction(direction_of(direction));
    if (k == 1) {
      *out = d.r1;
    } else if (k == 5) {
      *out = d.r5;
    } else if (k == 10) {
      *out = d.r10;
    } else {
      ladder::fail(ladder::ErrorCode::invalid_argument, "reports carry R@1, R@5 and R@10 only");
    }
  });
}

ladder_status ladder_report_mean_rank(const ladder_report* report, ladder_direction direction, double* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = report->value.direction(direction_of(direction)).mean_rank;
  });
}

void ladder_report_free(ladder_report* report) { delete report; }

ladder_status ladder_gradcheck(const ladder_model* model, const ladder_dataset* dataset, size_t probes, double step,
                               uint64_t seed, size_t batch_size, double corrupt_scale, ladder_audit_result* out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    ladder::AuditOptions options;
    options.probes = probes;
    options.step = step;
    options.seed = seed;
    options.batch_size = batch_size;
    options.corrupt_scale = corrupt_scale;
    const auto result = ladder::finite_difference_audit(dataset->value, model->value, options);
    out->max_relative_error = result.max_relative_error;
    out->probes = result.probes.size();
    out->rejected = result.rejected;
  });
}

}  // extern "C"
