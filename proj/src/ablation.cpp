#include "eled/ablation.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "eled/evaluator.hpp"
#include "eled/network.hpp"

namespace fs = std::filesystem;

namespace eled {

std::vector<AblationRow> ablation_suite(const std::string& suite, const ModelConfig& base) {
  std::vector<AblationRow> rows;
  auto push = [&](const std::string& name, ModelConfig cfg, double ref_psnr,
                  double ref_params) {
    AblationRow r;
    r.name = name;
    r.config = std::move(cfg);
    r.reference_psnr = ref_psnr;
    r.reference_params_m = ref_params;
    rows.push_back(std::move(r));
  };

  if (suite == "edtfa") {
    ModelConfig v1 = base;
    v1.use_edtfa = false;
    v1.fusion = "conv1x1";
    push("Ver.1", v1, 29.59, 1.8);
    ModelConfig v2 = base;
    v2.use_edtfa = true;
    v2.fusion = "conv1x1";
    push("Ver.2", v2, 30.78, 5.0);
    ModelConfig v3 = base;
    v3.use_edtfa = false;
    v3.fusion = "sfcm";
    push("Ver.3", v3, 30.40, 9.7);
    ModelConfig v4 = base;
    v4.use_edtfa = true;
    v4.fusion = "sfcm";
    push("Ver.4", v4, 31.30, 12.8);
  } else if (suite == "sfcmfe") {
    auto toggled = [&](bool cab, bool sa, bool lpf) {
      ModelConfig c = base;
      c.use_edtfa = true;
      c.fusion = "sfcm";
      c.sfcm_use_cab = cab;
      c.sfcm_use_sa = sa;
      c.sfcm_use_lpf = lpf;
      return c;
    };
    push("Ver.1", toggled(false, false, false), 30.78, -1.0);
    push("Ver.2", toggled(true, false, false), 30.81, -1.0);
    push("Ver.3", toggled(true, true, false), 30.79, -1.0);
    push("Ver.4", toggled(false, true, true), 31.22, -1.0);
    push("Ver.5", toggled(true, true, true), 31.30, -1.0);
  } else if (suite == "lpf-branch") {
    ModelConfig off = base;
    off.sfcm_use_lpf = false;
    push("lpf-off", off, -1.0, -1.0);
    ModelConfig narrow = base;
    narrow.sigma_divisor = 8.0;
    push("sigma-eighth", narrow, -1.0, -1.0);
    push("sigma-quarter", base, -1.0, -1.0);
    ModelConfig wide = base;
    wide.sigma_divisor = 2.0;
    push("sigma-half", wide, -1.0, -1.0);
  } else if (suite == "fusion-alt") {
    ModelConfig none = base;
    none.fusion = "none";
    push("no-fusion", none, 30.78, -1.0);
    ModelConfig conv = base;
    conv.fusion = "conv1x1";
    push("conv1x1-fusion", conv, -1.0, -1.0);
    ModelConfig sfcm = base;
    sfcm.fusion = "sfcm";
    push("sfcm-fusion", sfcm, 31.30, -1.0);
  } else {
    throw InvalidArgument("unknown ablation suite: " + suite +
                          " (expected edtfa, sfcmfe, lpf-branch or fusion-alt)");
  }
  return rows;
}

std::string ablation_table(const std::string& suite, const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "ablation suite: " << suite << "\n";
  os << "name              PSNR(dB)    SSIM     params(M)   ref PSNR   ref params(M)\n";
  os << "---------------------------------------------------------------------------\n";
  char buf[160];
  for (const auto& r : rows) {
    const double params_m = static_cast<double>(r.params) / 1e6;
    std::string ref_psnr = r.reference_psnr >= 0 ? format_msg(r.reference_psnr) : "-";
    std::string ref_params =
        r.reference_params_m >= 0 ? format_msg(r.reference_params_m) : "-";
    std::snprintf(buf, sizeof(buf), "%-16s %9.3f %8.4f %11.3f %10s %14s\n", r.name.c_str(),
                  r.psnr, r.ssim, params_m, ref_psnr.c_str(), ref_params.c_str());
    os << buf;
  }
  return os.str();
}

AblationResult run_ablation(const std::string& suite, const data::Dataset& ds,
                            const TrainConfig& tcfg, const ModelConfig& base,
                            const std::string& out_dir) {
  AblationResult result;
  result.suite = suite;
  result.rows = ablation_suite(suite, base);
  fs::create_directories(out_dir);

  const std::string eval_split = ds.triplets("test").empty() ? tcfg.split : "test";
  for (auto& row : result.rows) {
    Network net(row.config);
    row.params = net.count_params();
    const std::string row_dir = (fs::path(out_dir) / row.name).string();
    train(net, ds, tcfg, row_dir);
    EvalReport rep = evaluate(net, ds, eval_split, tcfg.deterministic);
    row.psnr = rep.mean_psnr;
    row.ssim = rep.mean_ssim;
  }
  result.table = ablation_table(suite, result.rows);

  nlohmann::json j;
  j["suite"] = suite;
  std::vector<nlohmann::json> rows_json;
  for (const auto& r : result.rows) {
    rows_json.push_back({{"name", r.name},
                         {"params", r.params},
                         {"psnr", r.psnr},
                         {"ssim", r.ssim},
                         {"reference_psnr", r.reference_psnr},
                         {"reference_params_m", r.reference_params_m},
                         {"config_hash", r.config.hash()}});
  }
  j["rows"] = rows_json;
  std::ofstream jf(fs::path(out_dir) / (suite + ".json"));
  jf << j.dump(2) << "\n";
  std::ofstream tf(fs::path(out_dir) / (suite + ".txt"));
  tf << result.table;
  return result;
}

}  // namespace eled
