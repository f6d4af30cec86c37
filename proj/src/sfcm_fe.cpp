#include "eled/sfcm_fe.hpp"

namespace eled {

using namespace eled::ag;

SfcmFeLevel::SfcmFeLevel(int scale, const ModelConfig& cfg, Rng& rng)
    : scale_(scale),
      use_cab_(cfg.sfcm_use_cab),
      use_sa_(cfg.sfcm_use_sa),
      use_lpf_(cfg.sfcm_use_lpf),
      sigma_divisor_(cfg.sigma_divisor),
      sigma_fixed_(cfg.sigma_fixed[static_cast<size_t>(scale)]),
      merge_conv((scale < 2 ? 3 : 2) * cfg.channels_at(scale), cfg.channels_at(scale), 3, 1, 1, rng),
      branch_a(cfg.channels_at(scale), cfg.channels_at(scale), 3, 1, 1, rng),
      branch_b(cfg.channels_at(scale), cfg.channels_at(scale), 3, 1, 1, rng),
      spectral(cfg.channels_at(scale), rng),
      kernel_pred(cfg.channels_at(scale), cfg.dynamic_kernel_size, rng),
      fuse(cfg.channels_at(scale), rng) {
  ELED_CHECK(sigma_divisor_ > 0.0, "SFCM-FE: sigma divisor must be positive");
  if (scale < 2) {
    prev_up = std::make_unique<nn::ConvT2d>(cfg.channels_at(scale + 1),
                                            cfg.channels_at(scale), rng);
    add_child("prev_up", prev_up.get());
  }
  add_child("merge_conv", &merge_conv);
  add_child("branch_a", &branch_a);
  add_child("branch_b", &branch_b);
  add_child("spectral", &spectral);
  add_child("kernel_pred", &kernel_pred);
  add_child("fuse", &fuse);
  for (int i = 0; i < cfg.n_cab; ++i) {
    cabs.push_back(std::make_unique<nn::ChannelAttentionBlock>(cfg.channels_at(scale), rng));
    add_child("cab" + std::to_string(i), cabs.back().get());
  }
}

double SfcmFeLevel::sigma_for(int64_t h, int64_t w) const {
  if (sigma_fixed_ > 0.0) return sigma_fixed_;
  return static_cast<double>(std::max(h, w)) / sigma_divisor_;
}

Var SfcmFeLevel::forward(const Var& aligned, const Var& event, const Var* prev) const {
  ELED_CHECK_SHAPE(aligned->value.same_shape(event->value),
                   "SFCM-FE: aligned/event shapes differ: ", shape_str(aligned->value),
                   " vs ", shape_str(event->value));
  if (scale_ < 2) {
    ELED_CHECK(prev != nullptr, "SFCM-FE: scale ", scale_,
               " requires the previous-scale enhanced feature");
  } else {
    ELED_CHECK(prev == nullptr, "SFCM-FE: scale 2 takes no previous-scale feature");
  }

  std::vector<Var> inputs = {event, aligned};
  if (prev_up) {
    Var up = prev_up->forward(*prev);
    ELED_CHECK_SHAPE(up->value.dim(1) == aligned->value.dim(1) &&
                     up->value.dim(2) == aligned->value.dim(2),
                     "SFCM-FE: upsampled previous feature has the wrong scale");
    inputs.push_back(up);
  }
  Var merged = leaky_relu(merge_conv.forward(concat_ch(inputs)));

  Var xa = branch_a.forward(merged);
  Var xb = branch_b.forward(merged);

  if (use_lpf_) {
    const int64_t h = xa->value.dim(1), w = xa->value.dim(2);
    const nn::SpectralMask mask = nn::gaussian_lowpass_mask(h, w, sigma_for(h, w));
    Var low = spectral.forward(xa, mask);
    Var kernels = kernel_pred.forward(low);
    xa = dynamic_filter(low, kernels);
  }

  Var fused = use_sa_ ? fuse.forward(xa, xb) : add(xa, xb);

  for (const auto& cab : cabs) {
    if (!use_cab_) break;
    fused = cab->forward(fused);
  }
  return fused;
}

Conv1x1FusionLevel::Conv1x1FusionLevel(int scale, const ModelConfig& cfg, bool use_event, Rng& rng)
    : scale_(scale),
      use_event_(use_event),
      conv(((scale < 2 ? 1 : 0) + (use_event ? 1 : 0) + 1) * cfg.channels_at(scale),
           cfg.channels_at(scale), 1, 1, 0, rng) {
  if (scale < 2) {
    prev_up = std::make_unique<nn::ConvT2d>(cfg.channels_at(scale + 1),
                                            cfg.channels_at(scale), rng);
    add_child("prev_up", prev_up.get());
  }
  add_child("conv", &conv);
}

Var Conv1x1FusionLevel::forward(const Var& aligned, const Var& event, const Var* prev) const {
  std::vector<Var> inputs = {aligned};
  if (use_event_) inputs.push_back(event);
  if (prev_up) {
    ELED_CHECK(prev != nullptr, "fusion: scale ", scale_, " requires the previous feature");
    inputs.push_back(prev_up->forward(*prev));
  }
  return leaky_relu(conv.forward(concat_ch(inputs)));
}

SfcmFeStack::SfcmFeStack(const ModelConfig& cfg, Rng& rng) : fusion_kind_(cfg.fusion) {
  ELED_CHECK(cfg.fusion == "sfcm" || cfg.fusion == "conv1x1" || cfg.fusion == "none",
             "unknown fusion kind: ", cfg.fusion);
  for (int s = 0; s < 3; ++s) {
    if (cfg.fusion == "sfcm") {
      sfcm_levels[static_cast<size_t>(s)] = std::make_unique<SfcmFeLevel>(s, cfg, rng);
      add_child("s" + std::to_string(s), sfcm_levels[static_cast<size_t>(s)].get());
    } else {
      conv_levels[static_cast<size_t>(s)] = std::make_unique<Conv1x1FusionLevel>(
          s, cfg, cfg.fusion == "conv1x1", rng);
      add_child("s" + std::to_string(s), conv_levels[static_cast<size_t>(s)].get());
    }
  }
}

std::array<Var, 3> SfcmFeStack::forward(const std::array<Var, 3>& aligned_pyramid,
                                        const std::array<Var, 3>& event_pyramid) const {
  for (int s = 0; s < 3; ++s) {
    ELED_CHECK(aligned_pyramid[static_cast<size_t>(s)] && event_pyramid[static_cast<size_t>(s)],
               "SFCM-FE: incomplete pyramid at scale ", s);
  }
  std::array<Var, 3> out;
  Var prev;
  for (int s = 2; s >= 0; --s) {
    const size_t si = static_cast<size_t>(s);
    const Var* prev_ptr = (s < 2) ? &prev : nullptr;
    if (fusion_kind_ == "sfcm") {
      out[si] = sfcm_levels[si]->forward(aligned_pyramid[si], event_pyramid[si], prev_ptr);
    } else {
      out[si] = conv_levels[si]->forward(aligned_pyramid[si], event_pyramid[si], prev_ptr);
    }
    prev = out[si];
  }
  return out;
}

}  // namespace eled
