#include "eled/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

namespace eled {

namespace {

constexpr char kMagic[8] = {'E', 'L', 'E', 'D', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_tensor(std::ofstream& f, const Tensor& t) {
  f.write(reinterpret_cast<const char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void read_tensor(std::ifstream& f, Tensor& t) {
  f.read(reinterpret_cast<char*>(t.data()),
         static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

nlohmann::json read_header(std::ifstream& f, const std::string& path) {
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  const uint32_t version = read_u32(f);
  if (version != kVersion) {
    throw IoError(format_msg("unsupported checkpoint version ", version, " in ", path));
  }
  const uint32_t len = read_u32(f);
  std::string header(len, '\0');
  f.read(header.data(), len);
  if (!f) throw IoError("truncated checkpoint header: " + path);
  return nlohmann::json::parse(header);
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net,
                     const optim::Adam* opt, int64_t step) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);

  const nn::NamedParams params = net.named_params();
  nlohmann::json header;
  header["config"] = nlohmann::json::parse(net.config().to_json());
  header["config_hash"] = net.config().hash();
  header["step"] = step;
  header["has_optimizer"] = (opt != nullptr);
  if (opt) header["optimizer_t"] = opt->t();
  std::vector<nlohmann::json> dir;
  for (const auto& [name, p] : params) {
    dir.push_back({{"name", name}, {"shape", p->value.shape()}});
  }
  header["params"] = dir;
  const std::string header_text = header.dump();

  f.write(kMagic, 8);
  write_u32(f, kVersion);
  write_u32(f, static_cast<uint32_t>(header_text.size()));
  f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, p] : params) {
    (void)name;
    write_tensor(f, p->value);
  }
  if (opt) {
    auto& m = const_cast<optim::Adam*>(opt)->moment1();
    auto& v = const_cast<optim::Adam*>(opt)->moment2();
    for (const Tensor& t : m) write_tensor(f, t);
    for (const Tensor& t : v) write_tensor(f, t);
  }
  if (!f) throw IoError("short write on checkpoint: " + path);
}

int64_t load_checkpoint(const std::string& path, Network& net, optim::Adam* opt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  const nlohmann::json header = read_header(f, path);

  const std::string stored_hash = header.at("config_hash").get<std::string>();
  if (stored_hash != net.config().hash()) {
    throw InvalidArgument("checkpoint config hash " + stored_hash +
                          " does not match the constructed network (" +
                          net.config().hash() + "); rebuild with the stored config");
  }

  nn::NamedParams params = net.named_params();
  const auto& dir = header.at("params");
  ELED_CHECK(dir.size() == params.size(), "checkpoint lists ", dir.size(),
             " tensors but the network has ", params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string name = dir[i].at("name").get<std::string>();
    ELED_CHECK(name == params[i].first, "checkpoint tensor order mismatch at ", name);
    const auto shape = dir[i].at("shape").get<std::vector<int64_t>>();
    ELED_CHECK_SHAPE(shape == params[i].second->value.shape(),
                     "checkpoint tensor ", name, " has shape ", shape_str(shape));
    read_tensor(f, params[i].second->value);
  }
  const bool has_opt = header.value("has_optimizer", false);
  if (opt) {
    if (has_opt) {
      for (Tensor& t : opt->moment1()) read_tensor(f, t);
      for (Tensor& t : opt->moment2()) read_tensor(f, t);
      opt->set_t(header.value("optimizer_t", int64_t{0}));
    }
  }
  if (!f) throw IoError("truncated checkpoint tensors: " + path);
  return header.at("step").get<int64_t>();
}

ModelConfig peek_checkpoint_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  const nlohmann::json header = read_header(f, path);
  return ModelConfig::from_json(header.at("config").dump());
}

}  // namespace eled
