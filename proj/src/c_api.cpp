// Copyright (c) 2026 The synthasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "synthasr/synthasr.h"

#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "synthasr/log.hpp"
#include "synthasr/parallel.hpp"
#include "synthasr/pipeline/experiment.hpp"

struct synthasr_config {
  synthasr::pipeline::ExperimentConfig cfg;
};

struct synthasr_experiment {
  std::unique_ptr<synthasr::pipeline::Experiment> exp;
  std::string work_dir;
};

namespace {

using namespace synthasr;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

synthasr_status Status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument:
      return SYNTHASR_ERR_INVALID_ARGUMENT;
    case ErrorCode::kShapeMismatch:
      return SYNTHASR_ERR_SHAPE;
    case ErrorCode::kIo:
      return SYNTHASR_ERR_IO;
    case ErrorCode::kFormat:
      return SYNTHASR_ERR_FORMAT;
    case ErrorCode::kInfeasible:
      return SYNTHASR_ERR_INFEASIBLE;
    case ErrorCode::kConfig:
      return SYNTHASR_ERR_CONFIG;
    case ErrorCode::kStage:
      return SYNTHASR_ERR_STAGE;
  }
  return SYNTHASR_ERR_INTERNAL;
}

template <typename F>
synthasr_status Guard(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SYNTHASR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return Status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return SYNTHASR_ERR_INTERNAL;
}

void NotNull(const void* p, const char* what) {
  Require(p != nullptr, std::string(what) + " must not be null");
}

int Workers(int workers) { return workers > 0 ? workers : DefaultWorkers(); }

}  // namespace

extern "C" {

const char* synthasr_version(void) { return "0.1.0"; }

const char* synthasr_status_name(synthasr_status status) {
  switch (status) {
    case SYNTHASR_OK:
      return "ok";
    case SYNTHASR_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SYNTHASR_ERR_SHAPE:
      return "shape mismatch";
    case SYNTHASR_ERR_IO:
      return "i/o error";
    case SYNTHASR_ERR_FORMAT:
      return "format error";
    case SYNTHASR_ERR_INFEASIBLE:
      return "infeasible";
    case SYNTHASR_ERR_CONFIG:
      return "config error";
    case SYNTHASR_ERR_STAGE:
      return "stage failure";
    case SYNTHASR_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* synthasr_last_error(void) { return g_last_error.c_str(); }

int synthasr_default_workers(void) { return DefaultWorkers(); }

void synthasr_set_log_level(synthasr_log_level level) { SetLogLevel(static_cast<LogLevel>(level)); }

synthasr_status synthasr_config_load(const char* path, synthasr_config** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = nullptr;
    auto c = std::make_unique<synthasr_config>();
    c->cfg = pipeline::LoadExperimentConfig(path);
    *out = c.release();
  });
}

synthasr_status synthasr_config_toy(synthasr_config** out) {
  return Guard([&] {
    NotNull(out, "out");
    auto c = std::make_unique<synthasr_config>();
    c->cfg = pipeline::ToyExperimentConfig();
    c->cfg.corpora.generate_toy = true;
    *out = c.release();
  });
}

synthasr_status synthasr_config_save(const synthasr_config* cfg, const char* path) {
  return Guard([&] {
    NotNull(cfg, "config");
    NotNull(path, "path");
    pipeline::SaveExperimentConfig(path, cfg->cfg);
  });
}

synthasr_status synthasr_config_set_work_dir(synthasr_config* cfg, const char* work_dir) {
  return Guard([&] {
    NotNull(cfg, "config");
    NotNull(work_dir, "work_dir");
    Require(*work_dir != '\0', "work_dir must not be empty", ErrorCode::kConfig);
    cfg->cfg.work_dir = work_dir;
  });
}

synthasr_status synthasr_config_set_seed(synthasr_config* cfg, unsigned long long seed) {
  return Guard([&] {
    NotNull(cfg, "config");
    cfg->cfg.seed = seed;
  });
}

void synthasr_config_free(synthasr_config* cfg) { delete cfg; }

synthasr_status synthasr_experiment_open(const synthasr_config* cfg, int workers, synthasr_experiment** out) {
  return Guard([&] {
    NotNull(cfg, "config");
    NotNull(out, "out");
    *out = nullptr;
    auto e = std::make_unique<synthasr_experiment>();
    e->exp = std::make_unique<pipeline::Experiment>(cfg->cfg, Workers(workers));
    e->work_dir = e->exp->work_dir().string();
    *out = e.release();
  });
}

synthasr_status synthasr_experiment_stage(synthasr_experiment* exp, const char* stage) {
  return Guard([&] {
    NotNull(exp, "experiment");
    NotNull(stage, "stage");
    exp->exp->RunStage(stage);
  });
}

synthasr_status synthasr_experiment_run(synthasr_experiment* exp) {
  return Guard([&] {
    NotNull(exp, "experiment");
    exp->exp->Run();
  });
}

const char* synthasr_experiment_work_dir(const synthasr_experiment* exp) {
  return exp != nullptr ? exp->work_dir.c_str() : "";
}

void synthasr_experiment_free(synthasr_experiment* exp) { delete exp; }

synthasr_status synthasr_featurize(const synthasr_config* cfg, const char* manifest, const char* kind,
                                   const char* out_dir, int normalize, const char* stats_path, int workers) {
  return Guard([&] {
    NotNull(manifest, "manifest");
    NotNull(kind, "kind");
    NotNull(out_dir, "out_dir");
    const std::string k = kind;
    dsp::FeatureKind fk;
    if (k == "logmel") {
      fk = dsp::FeatureKind::kLogMel;
    } else if (k == "linear") {
      fk = dsp::FeatureKind::kLinearMag;
    } else if (k == "mfcc") {
      fk = dsp::FeatureKind::kMfcc;
    } else {
      throw Error(ErrorCode::kConfig, "unknown feature kind '" + k + "' (logmel, linear, mfcc)");
    }
    const pipeline::FeatureConfig fc = cfg != nullptr ? cfg->cfg.features : pipeline::FeatureConfig{};
    std::optional<dsp::NormStats> stats;
    if (stats_path != nullptr) stats = dsp::ReadNormStats(stats_path);
    const auto m = pipeline::ReadManifest(manifest);
    pipeline::Featurize(m, fk, fc, out_dir, normalize != 0, stats ? &*stats : nullptr, Workers(workers));
  });
}

synthasr_status synthasr_augment_audio(const char* manifest, const char* out_dir, const double* speeds,
                                       size_t n_speeds, int remove_silence, double silence_db, int workers) {
  return Guard([&] {
    NotNull(manifest, "manifest");
    NotNull(out_dir, "out_dir");
    Require(n_speeds == 0 || speeds != nullptr, "speeds must not be null");
    pipeline::AudioAugmentOptions opts;
    opts.speeds.assign(speeds, speeds + n_speeds);
    if (remove_silence != 0) opts.silence_threshold_db = silence_db;
    const auto m = pipeline::AugmentAudio(pipeline::ReadManifest(manifest), opts, out_dir, Workers(workers));
    pipeline::WriteManifest(fs::path(out_dir) / "augmented.jsonl", m);
  });
}

synthasr_status synthasr_augment_features(const synthasr_config* cfg, const char* manifest, const char* in_dir,
                                          const char* out_dir, unsigned long long seed, int workers) {
  return Guard([&] {
    NotNull(manifest, "manifest");
    NotNull(in_dir, "in_dir");
    NotNull(out_dir, "out_dir");
    const augment::SpecAugmentParams p = cfg != nullptr ? cfg->cfg.spec_augment : augment::SpecAugmentParams{};
    pipeline::SpecAugmentFeatures(pipeline::ReadManifest(manifest), in_dir, p, seed, out_dir, Workers(workers));
  });
}

}  // extern "C"
