#include "eled/report.hpp"

#include <cmath>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <vector>

#include "eled/common.hpp"
#include "eled/evaluator.hpp"

namespace eled {

std::string render_report_table(const std::string& report_json_path) {
  return report_to_table(report_from_json_file(report_json_path));
}

void plot_loss_curve(const std::string& csv_path, const std::string& png_path) {
  std::ifstream f(csv_path);
  if (!f) throw IoError("cannot open loss curve: " + csv_path);
  std::string line;
  std::getline(f, line);  // header
  std::vector<double> steps, losses;
  while (std::getline(f, line)) {
    double step, loss, lr;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &step, &loss, &lr) == 3) {
      steps.push_back(step);
      losses.push_back(loss);
    }
  }
  ELED_CHECK(!losses.empty(), "loss curve ", csv_path, " holds no data rows");

  const int width = 800, height = 480, margin = 50;
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  double lo = losses[0], hi = losses[0];
  for (double v : losses) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-12) hi = lo + 1e-12;
  const double x_max = steps.back() > 0 ? steps.back() : 1.0;

  auto px = [&](double s) {
    return margin + static_cast<int>((width - 2 * margin) * s / x_max);
  };
  auto py = [&](double v) {
    return height - margin - static_cast<int>((height - 2 * margin) * (v - lo) / (hi - lo));
  };

  cv::line(img, {margin, height - margin}, {width - margin, height - margin},
           cv::Scalar(0, 0, 0), 1);
  cv::line(img, {margin, margin}, {margin, height - margin}, cv::Scalar(0, 0, 0), 1);
  for (size_t i = 1; i < losses.size(); ++i) {
    cv::line(img, {px(steps[i - 1]), py(losses[i - 1])}, {px(steps[i]), py(losses[i])},
             cv::Scalar(180, 60, 20), 1, cv::LINE_AA);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "loss %.4g..%.4g over %d steps", lo, hi,
                static_cast<int>(steps.back()) + 1);
  cv::putText(img, buf, {margin, margin - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
              cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  if (!cv::imwrite(png_path, img)) throw IoError("failed to write plot: " + png_path);
}

}  // namespace eled
