#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace eled {

// All recoverable failures surface as exceptions carrying stage context.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string format_msg(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  return os.str();
}

#define ELED_CHECK(cond, ...)                                          \
  do {                                                                 \
    if (!(cond)) throw ::eled::InvalidArgument(::eled::format_msg(__VA_ARGS__)); \
  } while (0)

#define ELED_CHECK_SHAPE(cond, ...)                                    \
  do {                                                                 \
    if (!(cond)) throw ::eled::ShapeError(::eled::format_msg(__VA_ARGS__)); \
  } while (0)

// FNV-1a, used for config hashes and dataset content hashes. Stable across
// platforms, unlike std::hash.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t seed = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), seed);
}

std::string to_hex(uint64_t v);

// Worker cap shared by all parallel code paths. Reads ELED_NUM_WORKERS once;
// values < 1 fall back to the hardware count.
int num_workers();
void set_num_workers(int n);

}  // namespace eled
