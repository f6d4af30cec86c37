#pragma once

#include <array>
#include <string>
#include <vector>

#include "eled/dataset.hpp"
#include "eled/network.hpp"
#include "eled/optim.hpp"

namespace eled {

struct TrainConfig {
  double lr = 2e-4;
  double lr_min = 1e-6;
  std::string schedule = "cosine";  // "cosine" or "const"
  int64_t batch_size = 1;
  int64_t crop = 64;  // divisible by 4; capped at the frame size
  int64_t steps = 500;
  std::array<double, 3> loss_lambda = {1.0, 0.5, 0.25};
  double charbonnier_eps = 1e-3;
  double grad_clip = 1.0;
  int64_t eval_interval = 50;
  // when > 0, stop as soon as train PSNR(S_0) beats the identity baseline by
  // this margin (the overfit-probe contract)
  double early_stop_gain_db = 0.0;
  uint64_t seed = 1;
  bool deterministic = false;
  std::string split = "train";

  void validate() const;
};

struct CurvePoint {
  int64_t step;
  double loss;
  double lr;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double identity_psnr = 0.0;     // mean PSNR(center blur, sharp) on the split
  double final_train_psnr = 0.0;  // mean PSNR(S_0, sharp) at the last eval
  double best_train_psnr = 0.0;
  int64_t steps_run = 0;
  std::string checkpoint_path;    // best checkpoint, written under out_dir
  std::string curve_path;         // loss curve CSV (step,loss,lr)
};

// Optimizer loop with gradient clipping, periodic evaluation on the training
// split, best-checkpoint tracking and an optional early-stop margin. A NaN
// loss dumps the step state under out_dir and aborts.
TrainResult train(Network& net, const data::Dataset& ds, const TrainConfig& cfg,
                  const std::string& out_dir);

// Mean PSNR of the raw center blur frame against the sharp target — the
// identity baseline referenced by the overfit probe.
double identity_baseline_psnr(const data::Dataset& ds, const std::string& split);

}  // namespace eled
