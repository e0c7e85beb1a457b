#include "agit/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

#include "agit/errors.hpp"

namespace agit {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'C', 'K'};

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated checkpoint", path.string());
  return value;
}

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  nlohmann::json header;
  header["epoch"] = ck.epoch;
  header["step"] = ck.step;
  header["opt_g_steps"] = ck.opt_g_steps;
  header["opt_d_steps"] = ck.opt_d_steps;
  header["config"] = serialize_config(ck.config);
  auto manifest = nlohmann::json::array();
  for (const auto& [name, tensor] : ck.tensors) {
    manifest.push_back({{"name", name}, {"dims", tensor.dims()}});
  }
  header["tensors"] = std::move(manifest);
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing", path.string());
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, ck.version);
  write_raw(out, static_cast<std::uint64_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, tensor] : ck.tensors) {
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
  }
  if (!out) throw IoError("failed while writing checkpoint", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint", path.string());

  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a checkpoint file (bad magic)", path.string());
  }

  Checkpoint ck;
  ck.version = read_raw<std::uint32_t>(in, path);
  if (ck.version != kCheckpointVersion) {
    throw ContractError("unsupported checkpoint version " + std::to_string(ck.version) + " (expected " +
                        std::to_string(kCheckpointVersion) + ")");
  }

  const auto header_len = read_raw<std::uint64_t>(in, path);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError("truncated checkpoint header", path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint header: ") + e.what(), path.string());
  }

  ck.epoch = header.at("epoch").get<int>();
  ck.step = header.at("step").get<std::int64_t>();
  ck.opt_g_steps = header.at("opt_g_steps").get<std::int64_t>();
  ck.opt_d_steps = header.at("opt_d_steps").get<std::int64_t>();
  ck.config = parse_config(header.at("config").get<std::string>());

  for (const auto& entry : header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto dims = entry.at("dims").get<std::vector<std::int64_t>>();
    Tensor<float> tensor(dims);
    in.read(reinterpret_cast<char*>(tensor.data()), static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
    if (!in) throw IoError("truncated checkpoint tensor data (" + name + ")", path.string());
    ck.tensors.emplace_back(name, std::move(tensor));
  }
  return ck;
}

}  // namespace agit
