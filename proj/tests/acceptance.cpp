// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Intentionally self-contained and chatty so a failed run reads as
// a report.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "eled/ablation.hpp"
#include "eled/checkpoint.hpp"
#include "eled/dataset.hpp"
#include "eled/evaluator.hpp"
#include "eled/events.hpp"
#include "eled/gradcheck.hpp"
#include "eled/loss.hpp"
#include "eled/metrics.hpp"
#include "eled/network.hpp"
#include "eled/synth.hpp"
#include "eled/trainer.hpp"

namespace fs = std::filesystem;
using namespace eled;
using namespace eled::ag;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. analytic-vs-central-difference checks for every learned primitive
void criterion_gradients() {
  const auto t0 = Clock::now();
  const auto results = run_gradient_suite(/*trials=*/5, /*tol=*/1e-4, /*seed=*/20240613);
  double worst = 0.0;
  std::string worst_name;
  bool all_pass = true;
  for (const auto& r : results) {
    if (r.max_rel_err > worst) {
      worst = r.max_rel_err;
      worst_name = r.name;
    }
    all_pass = all_pass && r.pass;
  }
  const double elapsed = seconds_since(t0);
  report(1, all_pass && elapsed < 120.0,
         format_msg("gradient suite: ", results.size(), " checks over 7 primitives, worst rel err ",
                    worst, " (", worst_name, "), ", elapsed, " s (< 120 s required)"));
}

// 2. degenerate-equivalence oracles
void criterion_degenerate() {
  Rng rng(88);
  bool pass = true;
  std::ostringstream detail;

  {  // deformable conv == standard conv
    const int64_t c = 4, h = 12, w = 11;
    Tensor x = Tensor::randn({c, h, w}, rng);
    Tensor wt = Tensor::randn({5, c, 3, 3}, rng, 0.5);
    Tensor b = Tensor::randn({5}, rng);
    Var y = deform_conv2d(leaf(x, false), leaf(Tensor::zeros({2 * 2 * 9, h, w}), false),
                          leaf(Tensor::full({2 * 9, h, w}, 1.0), false), leaf(wt, false),
                          leaf(b, false), 2);
    Var ref = conv2d(leaf(x, false), leaf(wt, false), leaf(b, false), 1, 1);
    double err = 0.0;
    for (int64_t i = 0; i < y->value.numel(); ++i)
      err = std::max(err, std::abs(y->value.data()[i] - ref->value.data()[i]));
    pass = pass && err <= 1e-6;
    detail << "deform==conv err " << err;
  }
  {  // one-hot dynamic filter == identity, exact
    Tensor x = Tensor::randn({3, 9, 9}, rng);
    Tensor k = Tensor::zeros({9, 9, 9});
    for (int64_t p = 0; p < 81; ++p) k.data()[4 * 81 + p] = 1.0;
    Var y = dynamic_filter(leaf(x, false), leaf(k, false));
    double err = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i)
      err = std::max(err, std::abs(y->value.data()[i] - x.data()[i]));
    pass = pass && err == 0.0;
    detail << "; dynfilter==identity err " << err;
  }
  {  // all-pass spectral filter with identity conv == 2x
    nn::SpectralFilter filt(3, rng);
    nn::SpectralMask mask = nn::gaussian_lowpass_mask(10, 14, 1e9);
    Tensor x = Tensor::randn({3, 10, 14}, rng);
    Var y = filt.forward(leaf(x, false), mask);
    double err = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i)
      err = std::max(err, std::abs(y->value.data()[i] - 2.0 * x.data()[i]));
    pass = pass && err <= 1e-5;
    detail << "; spectral==2x err " << err;
  }
  report(2, pass, "degenerate equivalences: " + detail.str());
}

// 3. the Gaussian low-pass mask
void criterion_mask() {
  bool pass = true;
  std::ostringstream detail;
  nn::SpectralMask m = nn::gaussian_lowpass_mask(25, 31, 4.0);
  const double center = m.mask.data()[m.center_y * 31 + m.center_x];
  pass = pass && center == 1.0;
  const double at_sigma = m.mask.data()[m.center_y * 31 + m.center_x + 4];
  const double sigma_err = std::abs(at_sigma - std::exp(-0.5));
  pass = pass && sigma_err <= 1e-12;
  detail << "center " << center << ", value at radius sigma off by " << sigma_err;

  Rng rng(17);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const int64_t y1 = rng.uniform_int(0, 24), x1 = rng.uniform_int(0, 30);
    const int64_t y2 = rng.uniform_int(0, 24), x2 = rng.uniform_int(0, 30);
    const double r1 = std::hypot(double(y1 - m.center_y), double(x1 - m.center_x));
    const double r2 = std::hypot(double(y2 - m.center_y), double(x2 - m.center_x));
    const double v1 = m.mask.data()[y1 * 31 + x1], v2 = m.mask.data()[y2 * 31 + x2];
    if (r1 < r2 && !(v1 > v2)) ++violations;
  }
  pass = pass && violations == 0;
  detail << ", radial monotonicity violations " << violations << "/100";
  report(3, pass, "Gaussian mask: " + detail.str());
}

// 4. voxel conservation, partition of unity, simulator threshold example
void criterion_voxel() {
  bool pass = true;
  std::ostringstream detail;
  Rng rng(99);
  {
    EventStream s;
    s.height = 24;
    s.width = 32;
    double expected = 0.0, t = 0.0;
    for (int i = 0; i < 1000; ++i) {
      t += rng.uniform(0.0, 0.001);
      EventRecord e{t, static_cast<uint16_t>(rng.uniform_int(0, 31)),
                    static_cast<uint16_t>(rng.uniform_int(0, 23)),
                    rng.uniform() < 0.5 ? int8_t{1} : int8_t{-1}};
      expected += e.p;
      s.events.push_back(e);
    }
    VoxelGrid g = events_to_voxel_grid(s, {-0.01, t + 0.01}, 16, 24, 32, false);
    const double rel = std::abs(g.bins.sum() - expected) /
                       std::max(1.0, std::abs(expected));
    pass = pass && rel <= 1e-6;
    detail << "conservation rel err " << rel;
  }
  {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      EventStream s;
      s.height = 1;
      s.width = 1;
      s.events = {{rng.uniform(0.0, 1.0), 0, 0, 1}};
      VoxelGrid g = events_to_voxel_grid(s, {0.0, 1.0}, 9, 1, 1, false);
      worst = std::max(worst, std::abs(g.bins.sum() - 1.0));
    }
    pass = pass && worst <= 1e-6;
    detail << "; partition-of-unity worst dev " << worst;
  }
  {
    Tensor f0({1, 1}), f1({1, 1});
    const double eps = 1e-3;
    f0.data()[0] = std::exp(0.0) - eps;
    f1.data()[0] = std::exp(0.45) - eps;
    EventStream s = simulate_events({f0, f1}, {0.0, 1.0}, 0.2, eps);
    pass = pass && s.events.size() == 2;
    detail << "; events for dlog=0.45,c=0.2: " << s.events.size() << " (want 2)";
  }
  report(4, pass, "voxel grid and simulator: " + detail.str());
}

// 5. identity start
void criterion_identity_start() {
  ModelConfig cfg = ModelConfig::small_config();
  Network net(cfg);
  Rng rng(5);
  std::array<Var, 3> blurs, voxels;
  for (int k = 0; k < 3; ++k) {
    blurs[static_cast<size_t>(k)] = leaf(Tensor::rand({3, 64, 64}, rng), false);
    voxels[static_cast<size_t>(k)] = leaf(Tensor::randn({cfg.voxel_bins, 64, 64}, rng), false);
  }
  NetworkProbe probe;
  MultiScaleOutput out = net.forward(blurs, voxels, &probe);

  double off_max = 0.0;
  for (const auto& o : probe.edtfa.offsets) off_max = std::max(off_max, o.abs_max());

  Var d2 = bilinear_resize(blurs[1], 32, 32);
  Var d4 = bilinear_resize(blurs[1], 16, 16);
  double out_err = 0.0;
  auto max_diff = [](const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i)
      m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
  };
  out_err = std::max(out_err, max_diff(out.frames[0]->value, blurs[1]->value));
  out_err = std::max(out_err, max_diff(out.frames[1]->value, d2->value));
  out_err = std::max(out_err, max_diff(out.frames[2]->value, d4->value));

  report(5, off_max == 0.0 && out_err == 0.0,
         format_msg("identity start: max |offset| = ", off_max,
                    " (want exactly 0), max |S_s - downsampled blur| = ", out_err,
                    " (want exactly 0)"));
}

// 6. overfit surrogate
void criterion_overfit(const fs::path& work) {
  const auto t0 = Clock::now();
  synth::DatasetConfig dcfg;
  dcfg.scenes = 2;
  dcfg.triplets_per_scene = 4;  // 8 triplets
  dcfg.height = 64;
  dcfg.width = 64;
  dcfg.seed = 7;
  const fs::path ds_dir = work / "overfit_ds";
  synth::build_dataset(dcfg, ds_dir.string());
  data::Dataset ds = data::Dataset::load(ds_dir.string());

  ModelConfig mcfg = ModelConfig::small_config();
  Network net(mcfg);

  TrainConfig tcfg;
  tcfg.steps = 2000;
  tcfg.crop = 64;
  tcfg.eval_interval = 25;
  tcfg.early_stop_gain_db = 3.2;  // margin above the +3 dB requirement
  tcfg.seed = 11;
  tcfg.deterministic = true;
  TrainResult result = train(net, ds, tcfg, (work / "overfit_run").string());

  const double elapsed = seconds_since(t0);
  const double gain = result.final_train_psnr - result.identity_psnr;
  const bool pass = gain >= 3.0 && result.steps_run <= 2000 && elapsed <= 1800.0;
  report(6, pass,
         format_msg("overfit surrogate: identity ", result.identity_psnr, " dB -> ",
                    result.final_train_psnr, " dB (gain ", gain, " dB, want >= 3) in ",
                    result.steps_run, " steps (<= 2000), ", elapsed,
                    " s wall (<= 1800 s)"));
}

// 7. ablation harness structural check
void criterion_ablation_structure() {
  auto rows = ablation_suite("edtfa", ModelConfig::small_config());
  bool pass = rows.size() == 4;
  std::array<int64_t, 4> counts{};
  if (pass) {
    for (size_t i = 0; i < 4; ++i) {
      Network net(rows[i].config);
      counts[i] = net.count_params();
      pass = pass && rows[i].name == format_msg("Ver.", i + 1);
    }
    // published pattern 1.8 -> 5.0 -> 9.7 -> 12.8: both chains increase
    pass = pass && counts[0] < counts[1] && counts[1] < counts[3];
    pass = pass && counts[0] < counts[2] && counts[2] < counts[3];
  }
  report(7, pass,
         format_msg("ablation edtfa suite: ", rows.size(), " rows, params ", counts[0], " < ",
                    counts[1], " < ", counts[3], " and ", counts[0], " < ", counts[2], " < ",
                    counts[3], " (published ordering 1.8 -> 5.0 / 9.7 -> 12.8)"));
}

// 8. metric correctness
void criterion_metrics() {
  bool pass = true;
  std::ostringstream detail;
  Tensor a = Tensor::full({3, 32, 32}, 0.5);
  Tensor b = Tensor::full({3, 32, 32}, 0.6);
  const double p = metrics::psnr(a, b);
  pass = pass && std::abs(p - 20.0) <= 1e-9;
  detail << "PSNR(0.5 vs 0.6) = " << p;

  Rng rng(123);
  Tensor img = Tensor::rand({3, 32, 32}, rng);
  const double s = metrics::ssim(img, img);
  pass = pass && std::abs(s - 1.0) <= 1e-9;
  detail << ", SSIM(identical) = " << s;

  double sum = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng nr(5000 + static_cast<uint64_t>(seed));
    Tensor base = Tensor::rand({3, 64, 64}, nr, 0.2, 0.8);
    Tensor noisy = base.clone();
    for (int64_t i = 0; i < noisy.numel(); ++i) noisy.data()[i] += nr.normal(0.0, 0.05);
    sum += metrics::psnr(base, noisy);
  }
  const double mean_psnr = sum / 10.0;
  const double expected = 10.0 * std::log10(1.0 / 0.0025);
  pass = pass && std::abs(mean_psnr - expected) <= 0.3;
  detail << ", noise PSNR " << mean_psnr << " vs " << expected << " (+-0.3)";
  report(8, pass, "metrics: " + detail.str());
}

// 9. end-to-end determinism
void criterion_determinism(const fs::path& work) {
  auto run_once = [&](const std::string& tag) {
    synth::DatasetConfig dcfg;
    dcfg.scenes = 1;
    dcfg.triplets_per_scene = 2;
    dcfg.height = 32;
    dcfg.width = 32;
    dcfg.seed = 21;
    const fs::path ds_dir = work / ("det_ds_" + tag);
    const uint64_t manifest_hash = synth::build_dataset(dcfg, ds_dir.string());
    data::Dataset ds = data::Dataset::load(ds_dir.string());

    ModelConfig mcfg = ModelConfig::small_config();
    mcfg.base_channels = 8;
    mcfg.offset_groups = 4;
    mcfg.encoder_depths = {1, 1, 1};
    mcfg.n_cab = 1;
    mcfg.cnn_blocks_per_scale = 1;
    mcfg.decoder_blocks_per_scale = 1;
    mcfg.voxel_bins = 4;
    Network net(mcfg);
    TrainConfig tcfg;
    tcfg.steps = 10;
    tcfg.crop = 32;
    tcfg.eval_interval = 10;
    tcfg.seed = 33;
    tcfg.deterministic = true;
    TrainResult tr = train(net, ds, tcfg, (work / ("det_run_" + tag)).string());
    EvalReport rep = evaluate(net, ds, "train", /*deterministic=*/true);
    return std::tuple<uint64_t, std::vector<CurvePoint>, std::string>(
        manifest_hash, tr.curve, report_to_json(rep));
  };

  auto [hash_a, curve_a, json_a] = run_once("a");
  auto [hash_b, curve_b, json_b] = run_once("b");

  bool pass = hash_a == hash_b && curve_a.size() == curve_b.size() && json_a == json_b;
  double max_loss_diff = 0.0;
  for (size_t i = 0; pass && i < curve_a.size(); ++i) {
    if (curve_a[i].loss != curve_b[i].loss) pass = false;
    max_loss_diff = std::max(max_loss_diff, std::abs(curve_a[i].loss - curve_b[i].loss));
  }
  report(9, pass,
         format_msg("determinism: manifest hashes ", hash_a == hash_b ? "equal" : "DIFFER",
                    ", step losses ", max_loss_diff == 0.0 ? "bitwise equal" : "DIFFER",
                    ", eval JSON ", json_a == json_b ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "eled_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  criterion_gradients();
  criterion_degenerate();
  criterion_mask();
  criterion_voxel();
  criterion_identity_start();
  criterion_overfit(work);
  criterion_ablation_structure();
  criterion_metrics();
  criterion_determinism(work);

  std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
