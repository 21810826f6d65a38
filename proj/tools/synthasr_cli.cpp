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


// Command-line front end. Uses only the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synthasr/synthasr.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;

int Fail(synthasr_status s) {
  std::cerr << "synthasr: " << synthasr_status_name(s) << ": " << synthasr_last_error() << "\n";
  return s == SYNTHASR_ERR_CONFIG || s == SYNTHASR_ERR_INVALID_ARGUMENT ? kExitConfig : kExitStage;
}

struct ExperimentArgs {
  std::string config;
  bool toy = false;
  std::string work_dir;
  std::optional<unsigned long long> seed;
};

void AddExperimentOptions(CLI::App* cmd, ExperimentArgs& a) {
  auto* cfg = cmd->add_option("-c,--config", a.config, "experiment config (JSON)");
  auto* toy = cmd->add_flag("--toy", a.toy, "built-in toy setup with a generated corpus");
  cfg->excludes(toy);
  cmd->add_option("-w,--work-dir", a.work_dir, "override the config's work directory");
  cmd->add_option("--seed", a.seed, "override the config's seed");
}

// Loads or builds the config; config problems exit with 1.
int OpenExperiment(const ExperimentArgs& a, int workers, synthasr_experiment** exp) {
  if (a.config.empty() && !a.toy) {
    std::cerr << "synthasr: one of --config or --toy is required\n";
    return kExitConfig;
  }
  synthasr_config* cfg = nullptr;
  synthasr_status s = a.toy ? synthasr_config_toy(&cfg) : synthasr_config_load(a.config.c_str(), &cfg);
  if (s == SYNTHASR_OK && !a.work_dir.empty()) s = synthasr_config_set_work_dir(cfg, a.work_dir.c_str());
  if (s == SYNTHASR_OK && a.seed) s = synthasr_config_set_seed(cfg, *a.seed);
  if (s == SYNTHASR_OK) s = synthasr_experiment_open(cfg, workers, exp);
  synthasr_config_free(cfg);
  if (s != SYNTHASR_OK) {
    std::cerr << "synthasr: " << synthasr_status_name(s) << ": " << synthasr_last_error() << "\n";
    return s == SYNTHASR_ERR_STAGE || s == SYNTHASR_ERR_INTERNAL ? kExitStage : kExitConfig;
  }
  return kExitOk;
}

void PrintFile(const std::string& path) {
  std::ifstream in(path);
  if (in) std::cout << in.rdbuf();
}

int RunStages(const ExperimentArgs& a, int workers, const std::vector<std::string>& stages, bool print_report) {
  synthasr_experiment* exp = nullptr;
  if (const int rc = OpenExperiment(a, workers, &exp); rc != kExitOk) return rc;
  int rc = kExitOk;
  for (const auto& st : stages) {
    const synthasr_status s =
        st == "run" ? synthasr_experiment_run(exp) : synthasr_experiment_stage(exp, st.c_str());
    if (s != SYNTHASR_OK) {
      rc = Fail(s);
      break;
    }
  }
  if (rc == kExitOk && print_report) PrintFile(std::string(synthasr_experiment_work_dir(exp)) + "/report.txt");
  synthasr_experiment_free(exp);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthasr: TTS-based synthetic data for attention ASR"};
  app.require_subcommand(1);
  int workers = 0;
  bool quiet = false, verbose = false;
  app.add_option("-j,--workers", workers, "worker threads (default: SYNTHASR_WORKERS or core count)");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  // featurize
  auto* feat = app.add_subcommand("featurize", "extract features for a manifest");
  std::string f_manifest, f_kind = "mfcc", f_out, f_stats, f_config;
  bool f_raw = false;
  feat->add_option("-m,--manifest", f_manifest, "input manifest (JSONL)")->required();
  feat->add_option("-k,--kind", f_kind, "logmel, linear or mfcc")->check(CLI::IsMember({"logmel", "linear", "mfcc"}));
  feat->add_option("-o,--out", f_out, "output directory")->required();
  feat->add_option("--stats", f_stats, "normalization statistics to apply");
  feat->add_option("-c,--config", f_config, "experiment config for analysis settings");
  feat->add_flag("--no-normalize", f_raw, "write unnormalized features");

  // augment
  auto* aug = app.add_subcommand("augment", "speed perturbation, silence removal or SpecAugment");
  std::string a_manifest, a_out, a_features, a_config;
  std::vector<double> a_speeds;
  std::optional<double> a_silence;
  unsigned long long a_seed = 1;
  aug->add_option("-m,--manifest", a_manifest, "input manifest (JSONL)")->required();
  aug->add_option("-o,--out", a_out, "output directory")->required();
  aug->add_option("-s,--speed", a_speeds, "speed factor; repeat for several copies");
  aug->add_option("--silence-db", a_silence, "remove silences below this level (dBFS)");
  aug->add_option("--features", a_features, "apply SpecAugment to the .fea files in this directory");
  aug->add_option("-c,--config", a_config, "experiment config for SpecAugment settings");
  aug->add_option("--seed", a_seed, "SpecAugment seed");

  struct StageCmd {
    const char* name;
    const char* help;
    std::vector<std::string> stages;
    bool print_report;
  };
  const std::vector<StageCmd> stage_cmds = {
      {"train-tts", "ingest corpora and train the TTS model", {"ingest", "featurize-tts", "train-tts"}, false},
      {"train-mel2lin", "train the mel-to-linear network", {"train-mel2lin"}, false},
      {"synthesize", "synthesize the text-only corpus", {"synthesize"}, false},
      {"mix", "build the real/synthetic training schedule", {"mix"}, false},
      {"train-asr", "train the ASR models for every condition", {"featurize-asr", "train-asr"}, false},
      {"decode", "decode the evaluation sets", {"decode"}, false},
      {"report", "write and print the WER table", {"report"}, true},
      {"run", "run the whole pipeline", {"run"}, true},
  };
  std::vector<ExperimentArgs> exp_args(stage_cmds.size());
  std::vector<CLI::App*> exp_cmds;
  for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
    auto* cmd = app.add_subcommand(stage_cmds[i].name, stage_cmds[i].help);
    AddExperimentOptions(cmd, exp_args[i]);
    exp_cmds.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (workers < 0) {
    std::cerr << "synthasr: --workers must be positive\n";
    return kExitConfig;
  }
  synthasr_set_log_level(quiet ? SYNTHASR_LOG_WARN : verbose ? SYNTHASR_LOG_DEBUG : SYNTHASR_LOG_INFO);
  if (workers == 0) workers = synthasr_default_workers();

  if (feat->parsed()) {
    synthasr_config* cfg = nullptr;
    if (!f_config.empty()) {
      if (const auto s = synthasr_config_load(f_config.c_str(), &cfg); s != SYNTHASR_OK) return Fail(s);
    }
    const auto s = synthasr_featurize(cfg, f_manifest.c_str(), f_kind.c_str(), f_out.c_str(), f_raw ? 0 : 1,
                                      f_stats.empty() ? nullptr : f_stats.c_str(), workers);
    synthasr_config_free(cfg);
    return s == SYNTHASR_OK ? kExitOk : Fail(s);
  }
  if (aug->parsed()) {
    if (!a_features.empty()) {
      synthasr_config* cfg = nullptr;
      if (!a_config.empty()) {
        if (const auto s = synthasr_config_load(a_config.c_str(), &cfg); s != SYNTHASR_OK) return Fail(s);
      }
      const auto s = synthasr_augment_features(cfg, a_manifest.c_str(), a_features.c_str(), a_out.c_str(), a_seed,
                                               workers);
      synthasr_config_free(cfg);
      return s == SYNTHASR_OK ? kExitOk : Fail(s);
    }
    const auto s = synthasr_augment_audio(a_manifest.c_str(), a_out.c_str(), a_speeds.data(), a_speeds.size(),
                                          a_silence ? 1 : 0, a_silence.value_or(0.0), workers);
    return s == SYNTHASR_OK ? kExitOk : Fail(s);
  }
  for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
    if (exp_cmds[i]->parsed()) {
      return RunStages(exp_args[i], workers, stage_cmds[i].stages, stage_cmds[i].print_report);
    }
  }
  return kExitConfig;
}
