#pragma once

#include <array>
#include <memory>
#include <vector>

#include "eled/ed_tfa.hpp"
#include "eled/model_config.hpp"
#include "eled/nn.hpp"
#include "eled/sfcm_fe.hpp"

namespace eled {

using ag::Var;

// Multi-scale restored frames; S[s] is (3, H/2^s, W/2^s) in [0,1].
struct MultiScaleOutput {
  std::array<Var, 3> frames;
};

struct NetworkProbe {
  EdtfaProbe edtfa;
};

// Two 3x3 convs with a leaky rectifier; lifts raw frames/voxels to C channels.
class ShallowExtractor : public nn::Module {
public:
  ShallowExtractor(int64_t cin, int64_t cout, Rng& rng);
  Var forward(const Var& x) const;
  nn::Conv2d conv1, conv2;
};

// Transposed-attention transformer encoder; emits a 3-scale pyramid with
// channels {C, 2C, 4C} and spatial dims halving per scale.
class TransformerEncoder : public nn::Module {
public:
  TransformerEncoder(const ModelConfig& cfg, Rng& rng);
  std::array<Var, 3> forward(const Var& x) const;

  std::array<std::vector<std::unique_ptr<nn::AttentionBlock>>, 3> blocks;
  std::array<std::unique_ptr<nn::Conv2d>, 2> down;
};

// Residual-block CNN encoder with the same pyramid contract.
class CnnEncoder : public nn::Module {
public:
  CnnEncoder(const ModelConfig& cfg, Rng& rng);
  std::array<Var, 3> forward(const Var& x) const;

  std::array<std::vector<std::unique_ptr<nn::ResidualBlock>>, 3> blocks;
  std::array<std::unique_ptr<nn::Conv2d>, 2> down;
};

/*
 * UNet-style decoder over the enhanced pyramid. Residual heads are
 * zero-initialized, so at initialization every scale emits exactly the
 * (bilinearly downsampled) center blur frame.
 */
class Decoder : public nn::Module {
public:
  Decoder(const ModelConfig& cfg, Rng& rng);
  MultiScaleOutput forward(const std::array<Var, 3>& gx, const Var& blur_center) const;

  std::array<std::vector<std::unique_ptr<nn::ResidualBlock>>, 3> blocks;
  nn::ConvT2d up2, up1;
  nn::Conv2d skip1, skip0;
  std::array<std::unique_ptr<nn::Conv2d>, 3> heads;  // zero-init C_s -> 3
};

class Network : public nn::Module {
public:
  explicit Network(const ModelConfig& cfg);

  // blurs: three (3,H,W) frames; voxels: three (B,H,W) grids; H, W
  // divisible by 4. Errors carry the failing stage's name.
  MultiScaleOutput forward(const std::array<Var, 3>& blurs, const std::array<Var, 3>& voxels,
                           NetworkProbe* probe = nullptr) const;

  int64_t count_params() const { return param_count(); }
  const ModelConfig& config() const { return cfg_; }

private:
  ModelConfig cfg_;
  std::unique_ptr<ShallowExtractor> blur_shallow_, event_shallow_;
  std::unique_ptr<TransformerEncoder> blur_encoder_, event_encoder_;
  std::unique_ptr<EdtfaStack> edtfa_;
  std::unique_ptr<CnnEncoder> aligned_encoder_, event_cnn_;
  std::unique_ptr<SfcmFeStack> fusion_;
  std::unique_ptr<Decoder> decoder_;
};

}  // namespace eled
