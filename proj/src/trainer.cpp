#include "eled/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eled/checkpoint.hpp"
#include "eled/loss.hpp"
#include "eled/metrics.hpp"

namespace fs = std::filesystem;

namespace eled {

void TrainConfig::validate() const {
  ELED_CHECK(lr >= 0.0 && lr_min >= 0.0, "train config: negative learning rate");
  ELED_CHECK(schedule == "cosine" || schedule == "const", "train config: unknown schedule ",
             schedule);
  ELED_CHECK(batch_size >= 1, "train config: batch size must be >= 1");
  ELED_CHECK(crop % 4 == 0 && crop >= 16, "train config: crop must be divisible by 4, got ",
             crop);
  ELED_CHECK(steps >= 1, "train config: steps must be >= 1");
  for (double l : loss_lambda) ELED_CHECK(l > 0.0, "train config: loss weights must be positive");
}

double identity_baseline_psnr(const data::Dataset& ds, const std::string& split) {
  const auto refs = ds.triplets(split);
  ELED_CHECK(!refs.empty(), "identity baseline: no triplets in split '", split, "'");
  double sum = 0.0;
  for (const auto& ref : refs) {
    // bins do not matter for the baseline; load cheaply with 1 bin
    const data::Triplet t = ds.load_triplet(ref, 1, false);
    sum += metrics::psnr(t.blur[1], t.sharp);
  }
  return sum / static_cast<double>(refs.size());
}

namespace {

double scheduled_lr(const TrainConfig& cfg, int64_t step) {
  if (cfg.schedule == "const") return cfg.lr;
  const double progress = static_cast<double>(step) / static_cast<double>(cfg.steps);
  return cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + std::cos(M_PI * progress));
}

double eval_train_psnr(const Network& net, const std::vector<data::Triplet>& cache) {
  double sum = 0.0;
  for (const auto& t : cache) {
    std::array<ag::Var, 3> blurs, voxels;
    for (int k = 0; k < 3; ++k) {
      blurs[static_cast<size_t>(k)] = ag::leaf(t.blur[static_cast<size_t>(k)], false);
      voxels[static_cast<size_t>(k)] = ag::leaf(t.voxels[static_cast<size_t>(k)], false);
    }
    MultiScaleOutput out = net.forward(blurs, voxels);
    sum += metrics::psnr(out.frames[0]->value, t.sharp);
  }
  return sum / static_cast<double>(cache.size());
}

}  // namespace

TrainResult train(Network& net, const data::Dataset& ds, const TrainConfig& cfg,
                  const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  const auto refs = ds.triplets(cfg.split);
  ELED_CHECK(!refs.empty(), "train: no triplets in split '", cfg.split, "'");

  // desk-scale datasets fit in memory; cache every triplet once
  std::vector<data::Triplet> cache;
  cache.reserve(refs.size());
  for (const auto& ref : refs) {
    cache.push_back(ds.load_triplet(ref, net.config().voxel_bins));
  }
  const int64_t frame_h = cache[0].sharp.dim(1), frame_w = cache[0].sharp.dim(2);
  const int64_t crop = std::min({cfg.crop, frame_h, frame_w});
  const bool do_crop = crop < frame_h || crop < frame_w;

  optim::Adam opt(net.named_params(), cfg.lr);
  Rng rng(cfg.seed);

  TrainResult result;
  result.identity_psnr = identity_baseline_psnr(ds, cfg.split);
  result.curve_path = (fs::path(out_dir) / "loss_curve.csv").string();
  result.checkpoint_path = (fs::path(out_dir) / "best.ckpt").string();
  result.best_train_psnr = -1e30;

  std::ofstream curve_file(result.curve_path);
  if (!curve_file) throw IoError("cannot write loss curve: " + result.curve_path);
  curve_file << "step,loss,lr\n";
  curve_file.precision(17);

  for (int64_t step = 0; step < cfg.steps; ++step) {
    const double lr = scheduled_lr(cfg, step);
    opt.set_lr(lr);
    opt.zero_grad();

    double batch_loss = 0.0;
    for (int64_t bi = 0; bi < cfg.batch_size; ++bi) {
      const auto& full = cache[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(cache.size()) - 1))];
      data::Triplet sample = do_crop ? data::crop_triplet(full, crop, rng) : full;

      std::array<ag::Var, 3> blurs, voxels;
      for (int k = 0; k < 3; ++k) {
        blurs[static_cast<size_t>(k)] = ag::leaf(sample.blur[static_cast<size_t>(k)], false);
        voxels[static_cast<size_t>(k)] = ag::leaf(sample.voxels[static_cast<size_t>(k)], false);
      }
      MultiScaleOutput out = net.forward(blurs, voxels);
      ag::Var loss = multiscale_loss(out, sample.sharp, cfg.loss_lambda, cfg.charbonnier_eps);
      const double scale_factor = 1.0 / static_cast<double>(cfg.batch_size);
      ag::Var scaled = ag::scale(loss, scale_factor);
      ag::backward(scaled);
      batch_loss += loss->value.data()[0] * scale_factor;
    }

    const double grad_norm = opt.clip_global_norm(cfg.grad_clip);
    if (!std::isfinite(batch_loss) || !std::isfinite(grad_norm)) {
      const std::string dump = (fs::path(out_dir) / "nan_dump.ckpt").string();
      save_checkpoint(dump, net, &opt, step);
      std::ofstream info(fs::path(out_dir) / "nan_dump.txt");
      info << "step=" << step << " loss=" << batch_loss << " grad_norm=" << grad_norm
           << " lr=" << lr << "\n";
      throw Error(format_msg("non-finite training state at step ", step, " (loss=", batch_loss,
                             ", grad norm=", grad_norm, "); state dumped to ", dump));
    }
    opt.step();
    curve_file << step << "," << batch_loss << "," << lr << "\n";
    result.curve.push_back({step, batch_loss, lr});
    result.steps_run = step + 1;

    const bool last = (step + 1 == cfg.steps);
    if ((step + 1) % cfg.eval_interval == 0 || last) {
      const double train_psnr = eval_train_psnr(net, cache);
      result.final_train_psnr = train_psnr;
      if (train_psnr > result.best_train_psnr) {
        result.best_train_psnr = train_psnr;
        save_checkpoint(result.checkpoint_path, net, &opt, step + 1);
      }
      if (cfg.early_stop_gain_db > 0.0 &&
          train_psnr >= result.identity_psnr + cfg.early_stop_gain_db) {
        break;
      }
    }
  }
  return result;
}

}  // namespace eled
