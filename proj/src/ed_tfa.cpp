#include "eled/ed_tfa.hpp"

namespace eled {

using namespace eled::ag;

AlignDirection::AlignDirection(int64_t channels, int64_t coarser_channels, bool has_prev,
                               int offset_groups, Rng& rng)
    : template_conv(4 * channels, channels, 3, 1, 1, rng),
      template_feat(channels, channels, 3, 1, 1, rng),
      offset_feat((has_prev ? 2 : 1) * channels, channels, 3, 1, 1, rng),
      offset_head(channels, 2 * offset_groups * 9, 3, 1, 1, rng, true, 1, nn::Init::Zero),
      mask_head(channels, offset_groups * 9, 3, 1, 1, rng, true, 1, nn::Init::Zero),
      dcn_weights(channels, channels, 3, 1, 1, rng),
      offset_groups_(offset_groups) {
  ELED_CHECK(channels % offset_groups == 0, "ED-TFA: offset groups ", offset_groups,
             " must divide channels ", channels);
  add_child("template_conv", &template_conv);
  add_child("template_feat", &template_feat);
  if (has_prev) {
    prev_up = std::make_unique<nn::ConvT2d>(coarser_channels, channels, rng);
    add_child("prev_up", prev_up.get());
  }
  add_child("offset_feat", &offset_feat);
  add_child("offset_head", &offset_head);
  add_child("mask_head", &mask_head);
  add_child("dcn_weights", &dcn_weights);
}

AlignDirection::Result AlignDirection::forward(const Var& blur_t, const Var& blur_other,
                                               const Var& event_t, const Var& event_other,
                                               const Var* prev_offset_feature,
                                               EdtfaProbe* probe) const {
  ELED_CHECK_SHAPE(blur_t->value.same_shape(blur_other->value) &&
                   event_t->value.same_shape(event_other->value),
                   "ED-TFA: template inputs disagree in shape");
  Var templ = relu(template_conv.forward(
      concat_ch({blur_t, blur_other, event_t, event_other})));

  Var feat = leaky_relu(template_feat.forward(templ));
  if (prev_up) {
    ELED_CHECK(prev_offset_feature != nullptr,
               "ED-TFA: finer scales need the coarser offset feature");
    Var up = prev_up->forward(*prev_offset_feature);
    ELED_CHECK_SHAPE(up->value.dim(1) == feat->value.dim(1) &&
                     up->value.dim(2) == feat->value.dim(2),
                     "ED-TFA: coarser offset feature has the wrong scale");
    feat = concat_ch({feat, up});
  } else {
    ELED_CHECK(prev_offset_feature == nullptr,
               "ED-TFA: the coarsest scale takes no previous offset feature");
  }
  Var off_feature = leaky_relu(offset_feat.forward(feat));

  Var offsets = offset_head.forward(off_feature);
  Var masks = sigmoid(mask_head.forward(off_feature));
  if (probe) {
    probe->offsets.push_back(offsets->value);
    probe->masks.push_back(masks->value);
  }
  Var aligned = deform_conv2d(templ, offsets, masks, dcn_weights.w->v(),
                              dcn_weights.b->v(), offset_groups_);
  return {aligned, off_feature};
}

EdtfaLevel::EdtfaLevel(int scale, const ModelConfig& cfg, Rng& rng)
    : scale_(scale),
      fwd_dir(cfg.channels_at(scale), scale < 2 ? cfg.channels_at(scale + 1) : 0,
              scale < 2, cfg.offset_groups, rng),
      bwd_dir(cfg.channels_at(scale), scale < 2 ? cfg.channels_at(scale + 1) : 0,
              scale < 2, cfg.offset_groups, rng),
      fuse_conv(2 * cfg.channels_at(scale), cfg.channels_at(scale), 3, 1, 1, rng) {
  add_child("fwd", &fwd_dir);
  add_child("bwd", &bwd_dir);
  add_child("fuse_conv", &fuse_conv);
  if (scale == 2) {
    base_proj = std::make_unique<nn::Conv2d>(cfg.channels_at(2), cfg.channels_at(2), 3, 1, 1, rng);
    add_child("base_proj", base_proj.get());
  } else {
    base_up = std::make_unique<nn::ConvT2d>(cfg.channels_at(scale + 1),
                                            cfg.channels_at(scale), rng);
    add_child("base_up", base_up.get());
  }
}

AlignState EdtfaLevel::forward(const PyramidBundle& bundle, const AlignState* prev,
                               EdtfaProbe* probe) const {
  if (scale_ == 2) {
    ELED_CHECK(prev == nullptr, "ED-TFA: scale 2 is the entry level");
  } else {
    ELED_CHECK(prev != nullptr && prev->scale == scale_ + 1,
               "ED-TFA: levels must run coarse-to-fine (expected previous scale ",
               scale_ + 1, ")");
  }
  const size_t s = static_cast<size_t>(scale_);
  const Var& bt = bundle.blur[1][s];
  const Var& et = bundle.event[1][s];

  auto fwd = fwd_dir.forward(bt, bundle.blur[0][s], et, bundle.event[0][s],
                             prev ? &prev->offset_fwd : nullptr, probe);
  auto bwd = bwd_dir.forward(bt, bundle.blur[2][s], et, bundle.event[2][s],
                             prev ? &prev->offset_bwd : nullptr, probe);

  Var base = (scale_ == 2) ? base_proj->forward(bt) : base_up->forward(prev->aligned);
  Var residual = fuse_conv.forward(concat_ch({fwd.aligned, bwd.aligned}));
  AlignState out;
  out.scale = scale_;
  out.aligned = add(base, residual);
  out.offset_fwd = fwd.offset_feature;
  out.offset_bwd = bwd.offset_feature;
  return out;
}

EdtfaStack::EdtfaStack(const ModelConfig& cfg, Rng& rng) {
  for (int s = 0; s < 3; ++s) {
    levels[static_cast<size_t>(s)] = std::make_unique<EdtfaLevel>(s, cfg, rng);
  }
  add_child("s0", levels[0].get());
  add_child("s1", levels[1].get());
  add_child("s2", levels[2].get());
}

Var EdtfaStack::forward(const PyramidBundle& bundle, EdtfaProbe* probe) const {
  AlignState state = levels[2]->forward(bundle, nullptr, probe);
  state = levels[1]->forward(bundle, &state, probe);
  state = levels[0]->forward(bundle, &state, probe);
  return state.aligned;
}

}  // namespace eled
