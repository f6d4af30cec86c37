// Command-line entry point: dataset synthesis, training, evaluation,
// inference, ablations, gradient checks and report rendering.
#include <CLI11.hpp>
#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "eled/ablation.hpp"
#include "eled/appconfig.hpp"
#include "eled/checkpoint.hpp"
#include "eled/dataset.hpp"
#include "eled/evaluator.hpp"
#include "eled/gradcheck.hpp"
#include "eled/image_io.hpp"
#include "eled/network.hpp"
#include "eled/report.hpp"
#include "eled/synth.hpp"
#include "eled/trainer.hpp"

namespace fs = std::filesystem;
using namespace eled;

namespace {

struct CommonOpts {
  std::string config_path;
  int64_t seed = -1;
  bool deterministic = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out = true) {
  cmd->add_option("--config", opts.config_path, "dotted-key config file; flags override");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_flag("--deterministic", opts.deterministic,
                "bit-reproducible mode (wall-clock fields omitted from reports)");
  if (with_out) cmd->add_option("--out", opts.out, "output directory");
}

AppConfig resolve_config(const CommonOpts& opts) {
  AppConfig cfg;
  if (!opts.config_path.empty()) cfg = AppConfig::from_file(opts.config_path);
  if (opts.seed >= 0) cfg.set("seed", std::to_string(opts.seed));
  if (opts.deterministic) cfg.set("deterministic", "true");
  return cfg;
}

ModelConfig model_from(const AppConfig& cfg) {
  const std::string variant = cfg.get_str("model.variant", "small");
  ModelConfig m = (variant == "full") ? ModelConfig::full_config() : ModelConfig::small_config();
  m.base_channels = cfg.get_int("model.base_channels", m.base_channels);
  m.voxel_bins = cfg.get_int("model.voxel_bins", m.voxel_bins);
  m.n_cab = static_cast<int>(cfg.get_int("model.n_cab", m.n_cab));
  m.dynamic_kernel_size =
      static_cast<int>(cfg.get_int("model.dynamic_kernel_size", m.dynamic_kernel_size));
  m.offset_groups = static_cast<int>(cfg.get_int("model.offset_groups", m.offset_groups));
  m.sigma_divisor = cfg.get_double("model.sigma_divisor", m.sigma_divisor);
  m.ffn_expansion = cfg.get_double("model.ffn_expansion", m.ffn_expansion);
  m.tie_event_blur_encoders =
      cfg.get_bool("model.tie_event_blur_encoders", m.tie_event_blur_encoders);
  m.init_seed = static_cast<uint64_t>(cfg.get_int("seed", static_cast<int64_t>(m.init_seed)));
  m.use_edtfa = cfg.get_bool("model.use_edtfa", m.use_edtfa);
  m.fusion = cfg.get_str("model.fusion", m.fusion);
  m.sfcm_use_cab = cfg.get_bool("model.sfcm_use_cab", m.sfcm_use_cab);
  m.sfcm_use_sa = cfg.get_bool("model.sfcm_use_sa", m.sfcm_use_sa);
  m.sfcm_use_lpf = cfg.get_bool("model.sfcm_use_lpf", m.sfcm_use_lpf);
  for (int s = 0; s < 3; ++s) {
    const auto key = "model.encoder_depth" + std::to_string(s);
    m.encoder_depths[static_cast<size_t>(s)] =
        static_cast<int>(cfg.get_int(key, m.encoder_depths[static_cast<size_t>(s)]));
  }
  return m;
}

TrainConfig train_from(const AppConfig& cfg) {
  TrainConfig t;
  t.lr = cfg.get_double("train.lr", t.lr);
  t.lr_min = cfg.get_double("train.lr_min", t.lr_min);
  t.schedule = cfg.get_str("train.schedule", t.schedule);
  t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
  t.crop = cfg.get_int("train.crop", t.crop);
  t.steps = cfg.get_int("train.steps", t.steps);
  t.loss_lambda[0] = cfg.get_double("train.lambda0", t.loss_lambda[0]);
  t.loss_lambda[1] = cfg.get_double("train.lambda1", t.loss_lambda[1]);
  t.loss_lambda[2] = cfg.get_double("train.lambda2", t.loss_lambda[2]);
  t.grad_clip = cfg.get_double("train.grad_clip", t.grad_clip);
  t.eval_interval = cfg.get_int("train.eval_interval", t.eval_interval);
  t.early_stop_gain_db = cfg.get_double("train.early_stop_gain_db", t.early_stop_gain_db);
  t.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  t.deterministic = cfg.get_bool("deterministic", false);
  t.split = cfg.get_str("train.split", t.split);
  return t;
}

synth::DatasetConfig synth_from(const AppConfig& cfg) {
  synth::DatasetConfig d;
  d.scenes = cfg.get_int("synth.scenes", d.scenes);
  d.test_scenes = cfg.get_int("synth.test_scenes", d.test_scenes);
  d.triplets_per_scene = cfg.get_int("synth.triplets", d.triplets_per_scene);
  d.height = cfg.get_int("synth.height", d.height);
  d.width = cfg.get_int("synth.width", d.width);
  d.fps = cfg.get_double("synth.fps", d.fps);
  d.blur_window = cfg.get_int("synth.blur_window", d.blur_window);
  d.contrast_threshold = cfg.get_double("synth.contrast_threshold", d.contrast_threshold);
  d.alpha_min = cfg.get_double("synth.alpha_min", d.alpha_min);
  d.alpha_max = cfg.get_double("synth.alpha_max", d.alpha_max);
  d.shot_scale = cfg.get_double("synth.shot_scale", d.shot_scale);
  d.read_sigma = cfg.get_double("synth.read_sigma", d.read_sigma);
  d.gamma = cfg.get_double("synth.gamma", d.gamma);
  d.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  d.frames_dir = cfg.get_str("synth.frames_dir", d.frames_dir);
  return d;
}

void print_config_hash(const AppConfig& cfg) {
  std::cout << "config_hash: " << cfg.hash() << "\n";
}

int run_synth(const CommonOpts& common, AppConfig cfg) {
  print_config_hash(cfg);
  const synth::DatasetConfig dcfg = synth_from(cfg);
  const uint64_t hash = synth::build_dataset(dcfg, common.out);
  std::cout << "dataset: " << common.out << "\n";
  std::cout << "scenes: " << dcfg.scenes << " triplets: "
            << dcfg.scenes * dcfg.triplets_per_scene << "\n";
  std::cout << "content_hash: " << to_hex(hash) << "\n";
  return 0;
}

int run_train(const CommonOpts& common, AppConfig cfg, const std::string& data_dir) {
  print_config_hash(cfg);
  const data::Dataset ds = data::Dataset::load(data_dir);
  ModelConfig mcfg = model_from(cfg);
  TrainConfig tcfg = train_from(cfg);
  Network net(mcfg);
  std::cout << "model: " << mcfg.variant << " params: " << net.count_params() << "\n";
  const TrainResult result = train(net, ds, tcfg, common.out);
  std::cout << "steps_run: " << result.steps_run << "\n";
  std::cout << "identity_psnr: " << result.identity_psnr << "\n";
  std::cout << "final_train_psnr: " << result.final_train_psnr << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
  std::cout << "loss_curve: " << result.curve_path << "\n";
  return 0;
}

int run_eval(const CommonOpts& common, AppConfig cfg, const std::string& data_dir,
             const std::string& checkpoint, bool identity, const std::string& split) {
  print_config_hash(cfg);
  const data::Dataset ds = data::Dataset::load(data_dir);
  const bool deterministic = cfg.get_bool("deterministic", false);
  EvalReport rep;
  if (identity) {
    rep = evaluate_identity(ds, split, deterministic);
  } else {
    if (checkpoint.empty()) {
      throw InvalidArgument("eval needs --checkpoint (or --identity for the baseline)");
    }
    ModelConfig mcfg = peek_checkpoint_config(checkpoint);
    Network net(mcfg);
    load_checkpoint(checkpoint, net, nullptr);
    rep = evaluate(net, ds, split, deterministic);
  }
  std::cout << report_to_table(rep);
  std::cout << "mean_psnr: " << rep.mean_psnr << "\n";
  std::cout << "mean_ssim: " << rep.mean_ssim << "\n";
  if (!common.out.empty()) {
    fs::create_directories(common.out);
    const std::string path = (fs::path(common.out) / "eval_report.json").string();
    write_report(path, rep);
    std::cout << "report: " << path << "\n";
  }
  return 0;
}

int run_infer(const CommonOpts& common, AppConfig cfg, const std::string& data_dir,
              const std::string& checkpoint, const std::string& scene, int64_t index,
              bool grid) {
  print_config_hash(cfg);
  const data::Dataset ds = data::Dataset::load(data_dir);
  ModelConfig mcfg = peek_checkpoint_config(checkpoint);
  Network net(mcfg);
  load_checkpoint(checkpoint, net, nullptr);

  int64_t scene_idx = -1;
  for (size_t i = 0; i < ds.scenes().size(); ++i) {
    if (ds.scenes()[i].name == scene) scene_idx = static_cast<int64_t>(i);
  }
  ELED_CHECK(scene_idx >= 0, "infer: scene '", scene, "' not found in manifest");
  data::TripletRef ref{scene_idx, index, index + 1};
  const data::Triplet t = ds.load_triplet(ref, mcfg.voxel_bins);

  std::array<ag::Var, 3> blurs, voxels;
  for (int k = 0; k < 3; ++k) {
    blurs[static_cast<size_t>(k)] = ag::leaf(t.blur[static_cast<size_t>(k)], false);
    voxels[static_cast<size_t>(k)] = ag::leaf(t.voxels[static_cast<size_t>(k)], false);
  }
  MultiScaleOutput out = net.forward(blurs, voxels);

  fs::create_directories(common.out);
  const std::string restored = (fs::path(common.out) / "restored.png").string();
  write_png(restored, out.frames[0]->value);
  std::cout << "restored: " << restored << "\n";
  if (grid) {
    const Tensor& s0 = out.frames[0]->value;
    const int64_t h = s0.dim(1), w = s0.dim(2);
    Tensor panel({3, h, 3 * w});
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
          panel.data()[(c * h + y) * 3 * w + x] = t.blur[1].data()[(c * h + y) * w + x];
          panel.data()[(c * h + y) * 3 * w + w + x] = s0.data()[(c * h + y) * w + x];
          panel.data()[(c * h + y) * 3 * w + 2 * w + x] = t.sharp.data()[(c * h + y) * w + x];
        }
      }
    }
    const std::string grid_path = (fs::path(common.out) / "grid.png").string();
    write_png(grid_path, panel);
    std::cout << "grid: " << grid_path << "\n";
  }
  return 0;
}

int run_ablate(const CommonOpts& common, AppConfig cfg, const std::string& data_dir,
               const std::string& suite) {
  print_config_hash(cfg);
  const data::Dataset ds = data::Dataset::load(data_dir);
  const ModelConfig base = model_from(cfg);
  const TrainConfig tcfg = train_from(cfg);
  const AblationResult result = run_ablation(suite, ds, tcfg, base, common.out);
  std::cout << result.table;
  std::cout << "artifacts: " << common.out << "\n";
  return 0;
}

int run_gradcheck(AppConfig cfg, int trials, double tol) {
  print_config_hash(cfg);
  const auto results = run_gradient_suite(trials, tol,
                                          static_cast<uint64_t>(cfg.get_int("seed", 123)));
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-28s max_rel_err=%.3e %s\n", r.name.c_str(), r.max_rel_err,
                r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::cout << (all_pass ? "gradient suite: pass" : "gradient suite: FAIL") << "\n";
  if (!all_pass) throw Error("gradient suite failed");
  return 0;
}

int run_report(const std::string& report_json, const std::string& table_out,
               const std::string& curve_csv, const std::string& plot_png) {
  AppConfig cfg;
  cfg.set("report.in", report_json);
  cfg.set("report.table", table_out);
  cfg.set("report.curve", curve_csv);
  cfg.set("report.plot", plot_png);
  print_config_hash(cfg);
  if (!report_json.empty()) {
    const std::string table = render_report_table(report_json);
    if (table_out.empty()) {
      std::cout << table;
    } else {
      std::ofstream f(table_out);
      if (!f) throw IoError("cannot write table: " + table_out);
      f << table;
      std::cout << "table: " << table_out << "\n";
    }
  }
  if (!curve_csv.empty()) {
    ELED_CHECK(!plot_png.empty(), "report: --plot PATH is required with --curve");
    plot_loss_curve(curve_csv, plot_png);
    std::cout << "plot: " << plot_png << "\n";
  }
  if (report_json.empty() && curve_csv.empty()) {
    throw InvalidArgument("report: nothing to do; pass --in and/or --curve");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  omp_set_num_threads(num_workers());
#endif
  Eigen::setNbThreads(num_workers());

  CLI::App app{"event-guided low-light video enhancement and deblurring"};
  app.require_subcommand(1);

  CommonOpts synth_opts, train_opts, eval_opts, infer_opts, ablate_opts, grad_opts;
  std::string data_dir, checkpoint, split = "test", suite = "edtfa", scene;
  std::string report_json, table_out, curve_csv, plot_png;
  int64_t index = 0;
  bool identity = false, grid = false;
  int trials = 5;
  double tol = 1e-4;

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth_cmd, synth_opts);
  synth_cmd->get_option("--out")->required();
  int64_t scenes = -1, triplets = -1, test_scenes = -1, size = -1;
  synth_cmd->add_option("--scenes", scenes, "number of scenes");
  synth_cmd->add_option("--triplets", triplets, "triplets per scene");
  synth_cmd->add_option("--test-scenes", test_scenes, "scenes assigned to the test split");
  synth_cmd->add_option("--size", size, "canvas height and width");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  add_common(train_cmd, train_opts);
  train_cmd->get_option("--out")->required();
  train_cmd->add_option("--data", data_dir, "dataset root")->required();
  int64_t steps = -1;
  std::string variant;
  train_cmd->add_option("--steps", steps, "optimizer steps");
  train_cmd->add_option("--variant", variant, "model variant: small or full");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint (or the identity baseline)");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--data", data_dir, "dataset root")->required();
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");
  eval_cmd->add_option("--split", split, "train, test or all");
  eval_cmd->add_flag("--identity", identity, "score the raw blurry input instead of a model");

  CLI::App* infer_cmd = app.add_subcommand("infer", "restore one triplet and write PNGs");
  add_common(infer_cmd, infer_opts);
  infer_cmd->get_option("--out")->required();
  infer_cmd->add_option("--data", data_dir, "dataset root")->required();
  infer_cmd->add_option("--checkpoint", checkpoint, "checkpoint")->required();
  infer_cmd->add_option("--scene", scene, "scene name from the manifest")->required();
  infer_cmd->add_option("--index", index, "triplet index within the scene");
  infer_cmd->add_flag("--grid", grid, "also write an input|restored|target panel");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run an ablation suite");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->get_option("--out")->required();
  ablate_cmd->add_option("--data", data_dir, "dataset root")->required();
  ablate_cmd->add_option("--suite", suite, "edtfa, sfcmfe, lpf-branch or fusion-alt");
  ablate_cmd->add_option("--steps", steps, "training steps per configuration");

  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "run the analytic-gradient suite");
  add_common(grad_cmd, grad_opts, /*with_out=*/false);
  grad_cmd->add_option("--trials", trials, "random inputs per primitive");
  grad_cmd->add_option("--tol", tol, "relative error tolerance");

  CLI::App* report_cmd = app.add_subcommand("report", "render JSON reports to tables/plots");
  report_cmd->add_option("--in", report_json, "eval report JSON");
  report_cmd->add_option("--table", table_out, "write the table here instead of stdout");
  report_cmd->add_option("--curve", curve_csv, "loss curve CSV to plot");
  report_cmd->add_option("--plot", plot_png, "output PNG for the curve plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      AppConfig cfg = resolve_config(synth_opts);
      if (scenes >= 0) cfg.set("synth.scenes", std::to_string(scenes));
      if (triplets >= 0) cfg.set("synth.triplets", std::to_string(triplets));
      if (test_scenes >= 0) cfg.set("synth.test_scenes", std::to_string(test_scenes));
      if (size >= 0) {
        cfg.set("synth.height", std::to_string(size));
        cfg.set("synth.width", std::to_string(size));
      }
      return run_synth(synth_opts, std::move(cfg));
    }
    if (train_cmd->parsed()) {
      AppConfig cfg = resolve_config(train_opts);
      if (steps >= 0) cfg.set("train.steps", std::to_string(steps));
      if (!variant.empty()) cfg.set("model.variant", variant);
      return run_train(train_opts, std::move(cfg), data_dir);
    }
    if (eval_cmd->parsed()) {
      return run_eval(eval_opts, resolve_config(eval_opts), data_dir, checkpoint, identity,
                      split);
    }
    if (infer_cmd->parsed()) {
      return run_infer(infer_opts, resolve_config(infer_opts), data_dir, checkpoint, scene,
                       index, grid);
    }
    if (ablate_cmd->parsed()) {
      AppConfig cfg = resolve_config(ablate_opts);
      if (steps >= 0) cfg.set("train.steps", std::to_string(steps));
      cfg.set("ablate.suite", suite);
      return run_ablate(ablate_opts, std::move(cfg), data_dir, suite);
    }
    if (grad_cmd->parsed()) {
      return run_gradcheck(resolve_config(grad_opts), trials, tol);
    }
    if (report_cmd->parsed()) {
      return run_report(report_json, table_out, curve_csv, plot_png);
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
