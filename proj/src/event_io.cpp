#include "eled/event_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "eled/common.hpp"

namespace eled {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '1'};

void put_u64le(std::vector<unsigned char>& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_events_binary(const std::string& path, const EventStream& stream) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open event file for writing: " + path);
  f.write(kMagic, 4);
  const uint32_t count = static_cast<uint32_t>(stream.events.size());
  unsigned char cnt[4] = {static_cast<unsigned char>(count & 0xff),
                          static_cast<unsigned char>((count >> 8) & 0xff),
                          static_cast<unsigned char>((count >> 16) & 0xff),
                          static_cast<unsigned char>((count >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(cnt), 4);
  std::vector<unsigned char> buf;
  buf.reserve(stream.events.size() * 13);
  for (const EventRecord& e : stream.events) {
    uint64_t bits;
    std::memcpy(&bits, &e.t, 8);
    put_u64le(buf, bits);
    buf.push_back(static_cast<unsigned char>(e.x & 0xff));
    buf.push_back(static_cast<unsigned char>((e.x >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>(e.y & 0xff));
    buf.push_back(static_cast<unsigned char>((e.y >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>(e.p));
  }
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("short write on event file: " + path);
}

void write_events_csv(const std::string& path, const EventStream& stream) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open event file for writing: " + path);
  std::fputs("t,x,y,p\n", f);
  for (const EventRecord& e : stream.events) {
    std::fprintf(f, "%.17g,%u,%u,%d\n", e.t, static_cast<unsigned>(e.x),
                 static_cast<unsigned>(e.y), static_cast<int>(e.p));
  }
  if (std::fclose(f) != 0) throw IoError("error closing event file: " + path);
}

namespace {

EventStream read_events_binary(std::ifstream& f, const std::string& path,
                               int64_t height, int64_t width) {
  unsigned char cnt[4];
  f.read(reinterpret_cast<char*>(cnt), 4);
  if (!f) throw IoError("truncated event file header: " + path);
  const uint32_t count = static_cast<uint32_t>(cnt[0]) | (static_cast<uint32_t>(cnt[1]) << 8) |
                         (static_cast<uint32_t>(cnt[2]) << 16) |
                         (static_cast<uint32_t>(cnt[3]) << 24);
  std::vector<unsigned char> buf(static_cast<size_t>(count) * 13);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("truncated event records in: " + path);

  EventStream s;
  s.width = width;
  s.height = height;
  s.events.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    const unsigned char* p = buf.data() + static_cast<size_t>(i) * 13;
    const uint64_t bits = get_u64le(p);
    std::memcpy(&s.events[i].t, &bits, 8);
    s.events[i].x = static_cast<uint16_t>(p[8] | (p[9] << 8));
    s.events[i].y = static_cast<uint16_t>(p[10] | (p[11] << 8));
    s.events[i].p = static_cast<int8_t>(p[12]);
  }
  return s;
}

EventStream read_events_csv(const std::string& path, int64_t height, int64_t width) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open event file: " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("t,x,y,p", 0) != 0) {
    throw IoError("missing t,x,y,p header in CSV event file: " + path);
  }
  EventStream s;
  s.width = width;
  s.height = height;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    EventRecord e;
    double t;
    unsigned x, y;
    int p;
    if (std::sscanf(line.c_str(), "%lf,%u,%u,%d", &t, &x, &y, &p) != 4) {
      throw IoError("malformed CSV event line in " + path + ": " + line);
    }
    e.t = t;
    e.x = static_cast<uint16_t>(x);
    e.y = static_cast<uint16_t>(y);
    e.p = static_cast<int8_t>(p);
    s.events.push_back(e);
  }
  return s;
}

}  // namespace

EventStream read_events(const std::string& path, int64_t height, int64_t width) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open event file: " + path);
  char magic[4] = {0, 0, 0, 0};
  f.read(magic, 4);
  if (f && std::memcmp(magic, kMagic, 4) == 0) {
    return read_events_binary(f, path, height, width);
  }
  f.close();
  return read_events_csv(path, height, width);
}

}  // namespace eled
