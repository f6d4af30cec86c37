#include "eled/evaluator.hpp"

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "eled/metrics.hpp"

namespace eled {

namespace {

constexpr const char* kVersionString = "eled-0.1.0";

void finish_report(EvalReport& rep, const std::string& split, const std::string& config_hash,
                   bool deterministic, double seconds) {
  rep.split = split;
  rep.config_hash = config_hash;
  rep.provenance = format_msg(kVersionString, " config=", config_hash, " split=", split);
  rep.runtime_seconds = deterministic ? -1.0 : seconds;
  double ps = 0.0, ss = 0.0;
  for (const auto& s : rep.samples) {
    ps += s.psnr;
    ss += s.ssim;
  }
  const double n = std::max<size_t>(1, rep.samples.size());
  rep.mean_psnr = ps / n;
  rep.mean_ssim = ss / n;
}

}  // namespace

EvalReport evaluate(const Network& net, const data::Dataset& ds, const std::string& split,
                    bool deterministic) {
  const auto refs = ds.triplets(split);
  ELED_CHECK(!refs.empty(), "evaluate: no triplets in split '", split, "'");
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport rep;
  for (const auto& ref : refs) {
    const data::Triplet t = ds.load_triplet(ref, net.config().voxel_bins);
    std::array<ag::Var, 3> blurs, voxels;
    for (int k = 0; k < 3; ++k) {
      blurs[static_cast<size_t>(k)] = ag::leaf(t.blur[static_cast<size_t>(k)], false);
      voxels[static_cast<size_t>(k)] = ag::leaf(t.voxels[static_cast<size_t>(k)], false);
    }
    MultiScaleOutput out = net.forward(blurs, voxels);
    EvalSample s;
    s.scene = ds.scenes()[static_cast<size_t>(ref.scene)].name;
    s.index = ref.index;
    s.psnr = metrics::psnr(out.frames[0]->value, t.sharp);
    s.ssim = metrics::ssim(out.frames[0]->value, t.sharp);
    rep.samples.push_back(s);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finish_report(rep, split, net.config().hash(), deterministic, seconds);
  return rep;
}

EvalReport evaluate_identity(const data::Dataset& ds, const std::string& split,
                             bool deterministic) {
  const auto refs = ds.triplets(split);
  ELED_CHECK(!refs.empty(), "evaluate: no triplets in split '", split, "'");
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport rep;
  for (const auto& ref : refs) {
    const data::Triplet t = ds.load_triplet(ref, 1, false);
    EvalSample s;
    s.scene = ds.scenes()[static_cast<size_t>(ref.scene)].name;
    s.index = ref.index;
    s.psnr = metrics::psnr(t.blur[1], t.sharp);
    s.ssim = metrics::ssim(t.blur[1], t.sharp);
    rep.samples.push_back(s);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finish_report(rep, split, "identity", deterministic, seconds);
  return rep;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["report_version"] = 1;
  j["split"] = report.split;
  j["config_hash"] = report.config_hash;
  j["provenance"] = report.provenance;
  j["num_samples"] = report.samples.size();
  j["mean"] = {{"psnr", report.mean_psnr}, {"ssim", report.mean_ssim}};
  std::vector<nlohmann::json> samples;
  for (const auto& s : report.samples) {
    samples.push_back(
        {{"scene", s.scene}, {"index", s.index}, {"psnr", s.psnr}, {"ssim", s.ssim}});
  }
  j["per_sample"] = samples;
  if (report.runtime_seconds >= 0.0) j["runtime_seconds"] = report.runtime_seconds;
  return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
  std::ostringstream os;
  os << "scene            index    PSNR(dB)    SSIM\n";
  os << "--------------------------------------------\n";
  char buf[128];
  for (const auto& s : report.samples) {
    std::snprintf(buf, sizeof(buf), "%-16s %5lld %9.3f %9.4f\n", s.scene.c_str(),
                  static_cast<long long>(s.index), s.psnr, s.ssim);
    os << buf;
  }
  os << "--------------------------------------------\n";
  std::snprintf(buf, sizeof(buf), "mean (%zu samples)    %9.3f %9.4f\n",
                report.samples.size(), report.mean_psnr, report.mean_ssim);
  os << buf;
  return os.str();
}

void write_report(const std::string& path, const EvalReport& report) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write eval report: " + path);
  f << report_to_json(report) << "\n";
}

EvalReport report_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open eval report: " + path);
  nlohmann::json j;
  f >> j;
  EvalReport rep;
  rep.split = j.value("split", "");
  rep.config_hash = j.value("config_hash", "");
  rep.provenance = j.value("provenance", "");
  rep.mean_psnr = j.at("mean").at("psnr").get<double>();
  rep.mean_ssim = j.at("mean").at("ssim").get<double>();
  rep.runtime_seconds = j.value("runtime_seconds", -1.0);
  for (const auto& sj : j.at("per_sample")) {
    EvalSample s;
    s.scene = sj.at("scene").get<std::string>();
    s.index = sj.at("index").get<int64_t>();
    s.psnr = sj.at("psnr").get<double>();
    s.ssim = sj.at("ssim").get<double>();
    rep.samples.push_back(s);
  }
  return rep;
}

}  // namespace eled
