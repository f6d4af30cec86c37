#include "eled/network.hpp"

#include <json.hpp>

namespace eled {

using namespace eled::ag;

// ---- ModelConfig ----

ModelConfig ModelConfig::full_config() { return ModelConfig{}; }

ModelConfig ModelConfig::small_config() {
  ModelConfig cfg;
  cfg.base_channels = 16;
  cfg.n_cab = 2;
  cfg.variant = "small";
  return cfg;
}

void ModelConfig::validate() const {
  ELED_CHECK(base_channels >= 8, "config: base channels must be >= 8, got ", base_channels);
  ELED_CHECK(voxel_bins >= 1, "config: voxel bins must be >= 1");
  ELED_CHECK(n_cab >= 1, "config: n_cab must be >= 1");
  ELED_CHECK(dynamic_kernel_size >= 1 && dynamic_kernel_size % 2 == 1,
             "config: dynamic kernel size must be odd");
  ELED_CHECK(offset_groups >= 1 && base_channels % offset_groups == 0,
             "config: offset groups ", offset_groups, " must divide base channels ",
             base_channels);
  ELED_CHECK(sigma_divisor > 0.0, "config: sigma divisor must be positive");
  ELED_CHECK(cnn_blocks_per_scale >= 1 && decoder_blocks_per_scale >= 1,
             "config: encoder/decoder depths must be positive");
  for (int s = 0; s < 3; ++s) {
    ELED_CHECK(encoder_depths[static_cast<size_t>(s)] >= 1, "config: encoder depth must be >= 1");
    ELED_CHECK(heads[static_cast<size_t>(s)] >= 1 &&
               channels_at(s) % heads[static_cast<size_t>(s)] == 0,
               "config: head count ", heads[static_cast<size_t>(s)],
               " must divide ", channels_at(s), " channels at scale ", s);
  }
  ELED_CHECK(fusion == "sfcm" || fusion == "conv1x1" || fusion == "none",
             "config: unknown fusion kind ", fusion);
  ELED_CHECK(variant == "full" || variant == "small", "config: unknown variant ", variant);
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["base_channels"] = base_channels;
  j["voxel_bins"] = voxel_bins;
  j["encoder_depths"] = encoder_depths;
  j["heads"] = heads;
  j["n_cab"] = n_cab;
  j["dynamic_kernel_size"] = dynamic_kernel_size;
  j["offset_groups"] = offset_groups;
  j["sigma_divisor"] = sigma_divisor;
  j["sigma_fixed"] = sigma_fixed;
  j["cnn_blocks_per_scale"] = cnn_blocks_per_scale;
  j["decoder_blocks_per_scale"] = decoder_blocks_per_scale;
  j["ffn_expansion"] = ffn_expansion;
  j["tie_event_blur_encoders"] = tie_event_blur_encoders;
  j["variant"] = variant;
  j["init_seed"] = init_seed;
  j["use_edtfa"] = use_edtfa;
  j["fusion"] = fusion;
  j["sfcm_use_cab"] = sfcm_use_cab;
  j["sfcm_use_sa"] = sfcm_use_sa;
  j["sfcm_use_lpf"] = sfcm_use_lpf;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  ModelConfig c;
  c.base_channels = j.at("base_channels").get<int64_t>();
  c.voxel_bins = j.at("voxel_bins").get<int64_t>();
  c.encoder_depths = j.at("encoder_depths").get<std::array<int, 3>>();
  c.heads = j.at("heads").get<std::array<int, 3>>();
  c.n_cab = j.at("n_cab").get<int>();
  c.dynamic_kernel_size = j.at("dynamic_kernel_size").get<int>();
  c.offset_groups = j.at("offset_groups").get<int>();
  c.sigma_divisor = j.at("sigma_divisor").get<double>();
  c.sigma_fixed = j.at("sigma_fixed").get<std::array<double, 3>>();
  c.cnn_blocks_per_scale = j.at("cnn_blocks_per_scale").get<int>();
  c.decoder_blocks_per_scale = j.at("decoder_blocks_per_scale").get<int>();
  c.ffn_expansion = j.at("ffn_expansion").get<double>();
  c.tie_event_blur_encoders = j.at("tie_event_blur_encoders").get<bool>();
  c.variant = j.at("variant").get<std::string>();
  c.init_seed = j.at("init_seed").get<uint64_t>();
  c.use_edtfa = j.at("use_edtfa").get<bool>();
  c.fusion = j.at("fusion").get<std::string>();
  c.sfcm_use_cab = j.at("sfcm_use_cab").get<bool>();
  c.sfcm_use_sa = j.at("sfcm_use_sa").get<bool>();
  c.sfcm_use_lpf = j.at("sfcm_use_lpf").get<bool>();
  return c;
}

std::string ModelConfig::hash() const { return to_hex(fnv1a64(to_json())); }

// ---- ShallowExtractor ----

ShallowExtractor::ShallowExtractor(int64_t cin, int64_t cout, Rng& rng)
    : conv1(cin, cout, 3, 1, 1, rng), conv2(cout, cout, 3, 1, 1, rng) {
  add_child("conv1", &conv1);
  add_child("conv2", &conv2);
}

Var ShallowExtractor::forward(const Var& x) const {
  return conv2.forward(leaky_relu(conv1.forward(x)));
}

// ---- TransformerEncoder ----

TransformerEncoder::TransformerEncoder(const ModelConfig& cfg, Rng& rng) {
  for (int s = 0; s < 3; ++s) {
    const size_t si = static_cast<size_t>(s);
    for (int d = 0; d < cfg.encoder_depths[si]; ++d) {
      blocks[si].push_back(std::make_unique<nn::AttentionBlock>(
          cfg.channels_at(s), cfg.heads[si], cfg.ffn_expansion, rng));
      add_child("s" + std::to_string(s) + ".block" + std::to_string(d), blocks[si].back().get());
    }
    if (s < 2) {
      down[si] = std::make_unique<nn::Conv2d>(cfg.channels_at(s), cfg.channels_at(s + 1),
                                              3, 2, 1, rng);
      add_child("down" + std::to_string(s), down[si].get());
    }
  }
}

std::array<Var, 3> TransformerEncoder::forward(const Var& x) const {
  std::array<Var, 3> pyramid;
  Var cur = x;
  for (int s = 0; s < 3; ++s) {
    const size_t si = static_cast<size_t>(s);
    for (const auto& b : blocks[si]) cur = b->forward(cur);
    pyramid[si] = cur;
    if (s < 2) cur = down[si]->forward(cur);
  }
  return pyramid;
}

// ---- CnnEncoder ----

CnnEncoder::CnnEncoder(const ModelConfig& cfg, Rng& rng) {
  for (int s = 0; s < 3; ++s) {
    const size_t si = static_cast<size_t>(s);
    for (int d = 0; d < cfg.cnn_blocks_per_scale; ++d) {
      blocks[si].push_back(std::make_unique<nn::ResidualBlock>(cfg.channels_at(s), rng));
      add_child("s" + std::to_string(s) + ".block" + std::to_string(d), blocks[si].back().get());
    }
    if (s < 2) {
      down[si] = std::make_unique<nn::Conv2d>(cfg.channels_at(s), cfg.channels_at(s + 1),
                                              3, 2, 1, rng);
      add_child("down" + std::to_string(s), down[si].get());
    }
  }
}

std::array<Var, 3> CnnEncoder::forward(const Var& x) const {
  std::array<Var, 3> pyramid;
  Var cur = x;
  for (int s = 0; s < 3; ++s) {
    const size_t si = static_cast<size_t>(s);
    for (const auto& b : blocks[si]) cur = b->forward(cur);
    pyramid[si] = cur;
    if (s < 2) cur = down[si]->forward(cur);
  }
  return pyramid;
}

// ---- Decoder ----

Decoder::Decoder(const ModelConfig& cfg, Rng& rng)
    : up2(cfg.channels_at(2), cfg.channels_at(1), rng),
      up1(cfg.channels_at(1), cfg.channels_at(0), rng),
      skip1(2 * cfg.channels_at(1), cfg.channels_at(1), 3, 1, 1, rng),
      skip0(2 * cfg.channels_at(0), cfg.channels_at(0), 3, 1, 1, rng) {
  for (int s = 0; s < 3; ++s) {
    const size_t si = static_cast<size_t>(s);
    for (int d = 0; d < cfg.decoder_blocks_per_scale; ++d) {
      blocks[si].push_back(std::make_unique<nn::ResidualBlock>(cfg.channels_at(s), rng));
      add_child("s" + std::to_string(s) + ".block" + std::to_string(d), blocks[si].back().get());
    }
    heads[si] = std::make_unique<nn::Conv2d>(cfg.channels_at(s), 3, 3, 1, 1, rng,
                                             true, 1, nn::Init::Zero);
    add_child("head" + std::to_string(s), heads[si].get());
  }
  add_child("up2", &up2);
  add_child("up1", &up1);
  add_child("skip1", &skip1);
  add_child("skip0", &skip0);
}

MultiScaleOutput Decoder::forward(const std::array<Var, 3>& gx, const Var& blur_center) const {
  const int64_t h = blur_center->value.dim(1), w = blur_center->value.dim(2);
  MultiScaleOutput out;

  Var d2 = gx[2];
  for (const auto& b : blocks[2]) d2 = b->forward(d2);
  out.frames[2] = clamp01(add(bilinear_resize(blur_center, h / 4, w / 4),
                              heads[2]->forward(d2)));

  Var d1 = skip1.forward(concat_ch({up2.forward(d2), gx[1]}));
  for (const auto& b : blocks[1]) d1 = b->forward(d1);
  out.frames[1] = clamp01(add(bilinear_resize(blur_center, h / 2, w / 2),
                              heads[1]->forward(d1)));

  Var d0 = skip0.forward(concat_ch({up1.forward(d1), gx[0]}));
  for (const auto& b : blocks[0]) d0 = b->forward(d0);
  out.frames[0] = clamp01(add(blur_center, heads[0]->forward(d0)));
  return out;
}

// ---- Network ----

Network::Network(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.init_seed);
  const int64_t c = cfg_.base_channels;

  blur_shallow_ = std::make_unique<ShallowExtractor>(3, c, rng);
  add_child("blur_shallow", blur_shallow_.get());
  event_shallow_ = std::make_unique<ShallowExtractor>(cfg_.voxel_bins, c, rng);
  add_child("event_shallow", event_shallow_.get());

  blur_encoder_ = std::make_unique<TransformerEncoder>(cfg_, rng);
  add_child("blur_encoder", blur_encoder_.get());
  if (cfg_.use_edtfa) {
    if (cfg_.tie_event_blur_encoders) {
      event_encoder_ = nullptr;  // share blur encoder weights
    } else {
      event_encoder_ = std::make_unique<TransformerEncoder>(cfg_, rng);
      add_child("event_encoder", event_encoder_.get());
    }
    edtfa_ = std::make_unique<EdtfaStack>(cfg_, rng);
    add_child("ed_tfa", edtfa_.get());
  }

  aligned_encoder_ = std::make_unique<CnnEncoder>(cfg_, rng);
  add_child("aligned_encoder", aligned_encoder_.get());
  event_cnn_ = std::make_unique<CnnEncoder>(cfg_, rng);
  add_child("event_cnn", event_cnn_.get());

  fusion_ = std::make_unique<SfcmFeStack>(cfg_, rng);
  add_child("fusion", fusion_.get());

  decoder_ = std::make_unique<Decoder>(cfg_, rng);
  add_child("decoder", decoder_.get());
}

MultiScaleOutput Network::forward(const std::array<Var, 3>& blurs,
                                  const std::array<Var, 3>& voxels,
                                  NetworkProbe* probe) const {
  const int64_t h = blurs[0]->value.dim(1), w = blurs[0]->value.dim(2);
  for (int k = 0; k < 3; ++k) {
    const auto& bv = blurs[static_cast<size_t>(k)]->value;
    const auto& ev = voxels[static_cast<size_t>(k)]->value;
    ELED_CHECK_SHAPE(bv.ndim() == 3 && bv.dim(0) == 3 && bv.dim(1) == h && bv.dim(2) == w,
                     "network input: blur frame ", k, " has shape ", shape_str(bv));
    ELED_CHECK_SHAPE(ev.ndim() == 3 && ev.dim(0) == cfg_.voxel_bins && ev.dim(1) == h &&
                     ev.dim(2) == w,
                     "network input: voxel grid ", k, " has shape ", shape_str(ev),
                     ", expected (", cfg_.voxel_bins, ",", h, ",", w, ")");
  }
  ELED_CHECK_SHAPE(h % 4 == 0 && w % 4 == 0,
                   "network input: spatial dims ", h, "x", w, " must be divisible by 4");

  // shallow features per timestamp
  std::array<Var, 3> kb, ke;
  for (int k = 0; k < 3; ++k) {
    const size_t ki = static_cast<size_t>(k);
    kb[ki] = blur_shallow_->forward(blurs[ki]);
    ke[ki] = event_shallow_->forward(voxels[ki]);
  }

  Var aligned;
  if (cfg_.use_edtfa) {
    const TransformerEncoder* ev_enc =
        event_encoder_ ? event_encoder_.get() : blur_encoder_.get();
    PyramidBundle bundle;
    for (int k = 0; k < 3; ++k) {
      const size_t ki = static_cast<size_t>(k);
      bundle.blur[ki] = blur_encoder_->forward(kb[ki]);
      bundle.event[ki] = ev_enc->forward(ke[ki]);
    }
    aligned = edtfa_->forward(bundle, probe ? &probe->edtfa : nullptr);
  } else {
    // ablation baseline: the center blur feature is passed through unaligned
    aligned = blur_encoder_->forward(kb[1])[0];
  }

  std::array<Var, 3> ga = aligned_encoder_->forward(aligned);
  std::array<Var, 3> ge = event_cnn_->forward(ke[1]);
  std::array<Var, 3> gx = fusion_->forward(ga, ge);
  return decoder_->forward(gx, blurs[1]);
}

}  // namespace eled
