#pragma once

#include <array>
#include <memory>

#include "eled/model_config.hpp"
#include "eled/nn.hpp"

namespace eled {

using ag::Var;

/*
 * One fusion level: concat(event, aligned, upsampled previous) -> shared
 * feature -> two branches; branch (a) goes through the Gaussian low-pass
 * spectral filter and a predicted per-pixel dynamic filter, branch (b)
 * stays spatial; spatial-attention fusion and a CAB stack produce G(X)_s.
 * The sfcm_use_* switches disable individual pieces for ablations.
 */
class SfcmFeLevel : public nn::Module {
public:
  SfcmFeLevel(int scale, const ModelConfig& cfg, Rng& rng);

  // prev is the enhanced feature from scale s+1 (nullptr only at s=2)
  Var forward(const Var& aligned, const Var& event, const Var* prev) const;

  double sigma_for(int64_t h, int64_t w) const;

  int scale_;
  bool use_cab_, use_sa_, use_lpf_;
  double sigma_divisor_, sigma_fixed_;
  std::unique_ptr<nn::ConvT2d> prev_up;
  nn::Conv2d merge_conv;   // concat -> C
  nn::Conv2d branch_a, branch_b;
  nn::SpectralFilter spectral;
  nn::DynamicFilterPredictor kernel_pred;
  nn::SpatialAttentionFuse fuse;
  std::vector<std::unique_ptr<nn::ChannelAttentionBlock>> cabs;
};

// Plain 1x1 substitution used by the ablation baseline; with use_event off
// it ignores the event pyramid entirely ("w/o fusion" configuration).
class Conv1x1FusionLevel : public nn::Module {
public:
  Conv1x1FusionLevel(int scale, const ModelConfig& cfg, bool use_event, Rng& rng);
  Var forward(const Var& aligned, const Var& event, const Var* prev) const;

  int scale_;
  bool use_event_;
  std::unique_ptr<nn::ConvT2d> prev_up;
  nn::Conv2d conv;
};

// Coarse-to-fine fusion over scales 2 -> 1 -> 0; returns {G(X)_s}, s=0,1,2.
class SfcmFeStack : public nn::Module {
public:
  SfcmFeStack(const ModelConfig& cfg, Rng& rng);

  std::array<Var, 3> forward(const std::array<Var, 3>& aligned_pyramid,
                             const std::array<Var, 3>& event_pyramid) const;

  std::string fusion_kind_;
  std::array<std::unique_ptr<SfcmFeLevel>, 3> sfcm_levels;
  std::array<std::unique_ptr<Conv1x1FusionLevel>, 3> conv_levels;
};

}  // namespace eled
