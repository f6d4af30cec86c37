#include "eled/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "eled/common.hpp"

namespace eled {

bool Tensor::all_finite() const {
  for (int64_t i = 0; i < numel(); ++i) {
    if (!std::isfinite(data()[i])) return false;
  }
  return true;
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

std::string shape_str(const Tensor& t) { return shape_str(t.shape()); }

std::string to_hex(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

namespace {
int g_workers = 0;
std::once_flag g_workers_once;

int detect_workers() {
  if (const char* env = std::getenv("ELED_NUM_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

int num_workers() {
  std::call_once(g_workers_once, [] { g_workers = detect_workers(); });
  return g_workers;
}

void set_num_workers(int n) {
  std::call_once(g_workers_once, [] {});
  g_workers = n >= 1 ? n : detect_workers();
}

}  // namespace eled
