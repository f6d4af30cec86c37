#pragma once

#include <string>
#include <vector>

#include "eled/dataset.hpp"
#include "eled/model_config.hpp"
#include "eled/trainer.hpp"

namespace eled {

struct AblationRow {
  std::string name;
  ModelConfig config;
  int64_t params = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  // reference numbers reported by the original study, printed for context;
  // < 0 when no reference exists
  double reference_psnr = -1.0;
  double reference_params_m = -1.0;
};

// Configurations only, a pure function of (suite, base); params untouched.
// Suites: "edtfa" (Ver.1..Ver.4), "sfcmfe" (component toggles),
// "lpf-branch" (low-pass branch off/sigma sweep), "fusion-alt"
// (none / conv1x1 / sfcm).
std::vector<AblationRow> ablation_suite(const std::string& suite, const ModelConfig& base);

struct AblationResult {
  std::string suite;
  std::vector<AblationRow> rows;
  std::string table;
};

// Trains every configuration under the same budget, evaluates, renders the
// table and writes rows + table under out_dir.
AblationResult run_ablation(const std::string& suite, const data::Dataset& ds,
                            const TrainConfig& tcfg, const ModelConfig& base,
                            const std::string& out_dir);

std::string ablation_table(const std::string& suite, const std::vector<AblationRow>& rows);

}  // namespace eled
