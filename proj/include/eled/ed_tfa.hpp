#pragma once

#include <array>
#include <memory>
#include <optional>

#include "eled/model_config.hpp"
#include "eled/nn.hpp"

namespace eled {

using ag::Var;

// Blur/event feature pyramids for the three timestamps; index order is
// [timestamp t-1, t, t+1] x [scale 0, 1, 2].
struct PyramidBundle {
  std::array<std::array<Var, 3>, 3> blur;   // blur[k][s]
  std::array<std::array<Var, 3>, 3> event;  // event[k][s]
};

struct AlignState {
  int scale = -1;
  Var aligned;      // F(A)^t_s
  Var offset_fwd;   // F(O)^{t-1 -> t}_s
  Var offset_bwd;   // F(O)^{t+1 -> t}_s
};

struct EdtfaProbe {
  // predicted deformable offsets per (scale, direction) in call order
  std::vector<Tensor> offsets;
  std::vector<Tensor> masks;
};

/*
 * One alignment direction at one scale: template synthesis from four feature
 * maps, offset-feature estimation (optionally fed by the upsampled offset
 * feature of the coarser scale), deformable convolution of the template.
 * Offset and mask heads are zero-initialized, so at initialization the
 * predicted offsets are exactly zero and the masks are 0.5 everywhere.
 */
class AlignDirection : public nn::Module {
public:
  AlignDirection(int64_t channels, int64_t coarser_channels, bool has_prev,
                 int offset_groups, Rng& rng);

  struct Result {
    Var aligned;
    Var offset_feature;
  };
  Result forward(const Var& blur_t, const Var& blur_other, const Var& event_t,
                 const Var& event_other, const Var* prev_offset_feature,
                 EdtfaProbe* probe = nullptr) const;

  nn::Conv2d template_conv;   // 4C -> C
  nn::Conv2d template_feat;   // C -> C
  std::unique_ptr<nn::ConvT2d> prev_up;  // coarser offset feature upsampler
  nn::Conv2d offset_feat;     // concat -> C
  nn::Conv2d offset_head;     // C -> 2*G*k*k, zero-init
  nn::Conv2d mask_head;       // C -> G*k*k, zero-init
  nn::Conv2d dcn_weights;     // holds the deformable conv taps (C -> C)
  int offset_groups_;
};

// One pyramid level: forward + backward alignment and residual fusion onto
// the upsampled coarser aligned feature (or a projection of F(B)^t at s=2).
class EdtfaLevel : public nn::Module {
public:
  EdtfaLevel(int scale, const ModelConfig& cfg, Rng& rng);

  AlignState forward(const PyramidBundle& bundle, const AlignState* prev,
                     EdtfaProbe* probe = nullptr) const;

  int scale_;
  AlignDirection fwd_dir, bwd_dir;
  nn::Conv2d fuse_conv;                  // 2C -> C residual estimator
  std::unique_ptr<nn::Conv2d> base_proj; // s=2 residual base
  std::unique_ptr<nn::ConvT2d> base_up;  // s<2 upsampler of F(A)_{s+1}
};

// Coarse-to-fine stack over scales 2 -> 1 -> 0.
class EdtfaStack : public nn::Module {
public:
  EdtfaStack(const ModelConfig& cfg, Rng& rng);
  // returns the aligned feature at full resolution, F(A)^t_0
  Var forward(const PyramidBundle& bundle, EdtfaProbe* probe = nullptr) const;

  std::array<std::unique_ptr<EdtfaLevel>, 3> levels;  // index = scale
};

}  // namespace eled
