#include "eled/image_io.hpp"

#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <vector>

#include "eled/common.hpp"

namespace eled {

void write_png(const std::string& path, const Tensor& img_chw) {
  ELED_CHECK_SHAPE(img_chw.ndim() == 3 && img_chw.dim(0) == 3,
                   "write_png expects (3,H,W), got ", shape_str(img_chw));
  const int h = static_cast<int>(img_chw.dim(1));
  const int w = static_cast<int>(img_chw.dim(2));
  cv::Mat mat(h, w, CV_8UC3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  const double* r = img_chw.data();
  const double* g = r + hw;
  const double* b = g + hw;
  for (int y = 0; y < h; ++y) {
    auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      const int64_t i = static_cast<int64_t>(y) * w + x;
      auto q = [](double v) {
        const double c = std::min(1.0, std::max(0.0, v));
        return static_cast<unsigned char>(std::lround(c * 255.0));
      };
      row[x] = cv::Vec3b(q(b[i]), q(g[i]), q(r[i]));  // OpenCV stores BGR
    }
  }
  std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path, mat, params)) {
    throw IoError("failed to write PNG: " + path);
  }
}

Tensor read_png(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_COLOR);
  if (mat.empty()) throw IoError("failed to read PNG: " + path);
  const int h = mat.rows, w = mat.cols;
  Tensor img({3, h, w});
  const int64_t hw = static_cast<int64_t>(h) * w;
  double* r = img.data();
  double* g = r + hw;
  double* b = g + hw;
  for (int y = 0; y < h; ++y) {
    const auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      const int64_t i = static_cast<int64_t>(y) * w + x;
      b[i] = row[x][0] / 255.0;
      g[i] = row[x][1] / 255.0;
      r[i] = row[x][2] / 255.0;
    }
  }
  return img;
}

uint64_t file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot hash missing file: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize n = f.gcount();
    if (n > 0) h = fnv1a64(buf, static_cast<size_t>(n), h);
  }
  return h;
}

}  // namespace eled
