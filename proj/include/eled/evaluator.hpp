#pragma once

#include <string>
#include <vector>

#include "eled/dataset.hpp"
#include "eled/network.hpp"

namespace eled {

struct EvalSample {
  std::string scene;
  int64_t index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalSample> samples;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::string split;
  std::string config_hash;
  std::string provenance;
  // < 0 means omitted; wall clock is excluded in deterministic mode so the
  // serialized report is byte-reproducible
  double runtime_seconds = -1.0;
};

// Runs the model over a split and scores S_0 against the sharp target.
EvalReport evaluate(const Network& net, const data::Dataset& ds, const std::string& split,
                    bool deterministic);

// Identity baseline: scores the raw center blur frame instead of the model.
EvalReport evaluate_identity(const data::Dataset& ds, const std::string& split,
                             bool deterministic);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);
void write_report(const std::string& path, const EvalReport& report);
EvalReport report_from_json_file(const std::string& path);

}  // namespace eled
