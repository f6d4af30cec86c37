#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace eled {

/*
 * Every architectural knob in one place. The `fusion`/`use_edtfa`/sfcm_*
 * switches exist for the ablation harness; defaults give the full model.
 */
struct ModelConfig {
  int64_t base_channels = 32;  // C; per-scale channels are {C, 2C, 4C}
  int64_t voxel_bins = 16;     // B
  std::array<int, 3> encoder_depths = {2, 2, 2};  // attention blocks per scale
  std::array<int, 3> heads = {1, 2, 4};
  int n_cab = 4;                 // channel attention blocks per fusion level
  int dynamic_kernel_size = 3;   // f_k
  int offset_groups = 8;         // deformable offset groups G
  double sigma_divisor = 4.0;    // sigma_s = max(H_s, W_s) / divisor
  std::array<double, 3> sigma_fixed = {0.0, 0.0, 0.0};  // >0 overrides divisor
  int cnn_blocks_per_scale = 2;
  int decoder_blocks_per_scale = 2;
  double ffn_expansion = 2.0;
  bool tie_event_blur_encoders = false;
  std::string variant = "full";  // "full" or "small"
  uint64_t init_seed = 7;

  // ablation switches
  bool use_edtfa = true;
  std::string fusion = "sfcm";  // "sfcm", "conv1x1" or "none"
  bool sfcm_use_cab = true;
  bool sfcm_use_sa = true;
  bool sfcm_use_lpf = true;

  int64_t channels_at(int scale) const { return base_channels << scale; }

  static ModelConfig full_config();
  static ModelConfig small_config();

  // canonical JSON of every field; equal configs hash equally
  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
  std::string hash() const;

  void validate() const;
};

}  // namespace eled
