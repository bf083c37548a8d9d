#include "poselift/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"

namespace poselift {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'L', 'C', 'K', 'P', 'T', '0', '1'};

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void append_f64_le(std::string& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof(bits));
  append_u64_le(out, bits);
}

void append_f32_le(std::string& out, float x) {
  std::uint32_t bits;
  std::memcpy(&bits, &x, sizeof(bits));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64_le(const unsigned char* p) {
  const std::uint64_t bits = read_u64_le(p);
  double x;
  std::memcpy(&x, &bits, sizeof(x));
  return x;
}

float read_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  float x;
  std::memcpy(&x, &bits, sizeof(x));
  return x;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream oss;
  oss << std::hex << std::setw(16) << std::setfill('0') << v;
  return oss.str();
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  if (ckpt.dtype != "f64" && ckpt.dtype != "f32") {
    throw ConfigError("checkpoint: unsupported dtype '" + ckpt.dtype + "'");
  }
  const std::size_t elem = ckpt.dtype == "f64" ? 8 : 4;

  std::string payload;
  json dir = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : ckpt.tensors) {
    json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape;
    entry["offset"] = offset;
    entry["count"] = tensor.size();
    dir.push_back(entry);
    for (double x : tensor.data) {
      if (ckpt.dtype == "f64") {
        append_f64_le(payload, x);
      } else {
        append_f32_le(payload, static_cast<float>(x));
      }
    }
    offset += static_cast<std::uint64_t>(tensor.size()) * elem;
  }

  json header;
  header["format_version"] = ckpt.format_version;
  header["dtype"] = ckpt.dtype;
  header["epoch"] = ckpt.epoch;
  header["step"] = ckpt.step;
  header["rng_state"] = ckpt.rng_state;
  header["config"] = ckpt.config_text;
  header["tensors"] = dir;
  header["payload_digest"] =
      "fnv1a64:" + hex64(fnv1a64(reinterpret_cast<const unsigned char*>(payload.data()),
                                 payload.size()));
  const std::string header_text = header.dump();

  std::string blob;
  blob.append(kMagic, sizeof(kMagic));
  append_u64_le(blob, header_text.size());
  blob += header_text;
  blob += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed while writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < sizeof(kMagic) + 8) {
    throw ParseError(path + ": truncated checkpoint (no header)");
  }
  if (std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path + ": not a checkpoint file (bad magic)");
  }
  const std::uint64_t header_len = read_u64_le(bytes + 8);
  const std::size_t header_start = sizeof(kMagic) + 8;
  if (blob.size() < header_start + header_len) {
    throw ParseError(path + ": truncated checkpoint (header cut short)");
  }
  json header;
  try {
    header = json::parse(blob.substr(header_start, header_len));
  } catch (const json::exception& e) {
    throw ParseError(path + ": malformed checkpoint header (" + std::string(e.what()) + ")");
  }

  Checkpoint ckpt;
  ckpt.format_version = header.at("format_version").get<int>();
  if (ckpt.format_version != 1) {
    throw ParseError(path + ": unsupported checkpoint format version " +
                     std::to_string(ckpt.format_version));
  }
  ckpt.dtype = header.at("dtype").get<std::string>();
  if (ckpt.dtype != "f64" && ckpt.dtype != "f32") {
    throw ParseError(path + ": unsupported payload dtype '" + ckpt.dtype + "'");
  }
  ckpt.epoch = header.at("epoch").get<long long>();
  ckpt.step = header.at("step").get<long long>();
  ckpt.rng_state = header.at("rng_state").get<std::string>();
  ckpt.config_text = header.at("config").get<std::string>();

  const std::size_t elem = ckpt.dtype == "f64" ? 8 : 4;
  const std::size_t payload_start = header_start + header_len;
  const std::size_t payload_size = blob.size() - payload_start;

  std::uint64_t expected_size = 0;
  for (const json& entry : header.at("tensors")) {
    expected_size += entry.at("count").get<std::uint64_t>() * elem;
  }
  if (payload_size != expected_size) {
    throw ParseError(path + ": truncated checkpoint payload (" + std::to_string(payload_size) +
                     " bytes, expected " + std::to_string(expected_size) + ")");
  }
  const std::string digest =
      "fnv1a64:" + hex64(fnv1a64(bytes + payload_start, payload_size));
  if (digest != header.at("payload_digest").get<std::string>()) {
    throw ParseError(path + ": checkpoint digest mismatch (corrupted payload)");
  }

  for (const json& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    const std::uint64_t count = entry.at("count").get<std::uint64_t>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    if (offset + count * elem > payload_size) {
      throw ParseError(path + ": tensor '" + name + "' overruns the payload");
    }
    Tensor t = Tensor::zeros(shape);
    if (t.size() != count) {
      throw ParseError(path + ": tensor '" + name + "' count disagrees with its shape");
    }
    const unsigned char* p = bytes + payload_start + offset;
    for (std::uint64_t i = 0; i < count; ++i) {
      t.data[i] = ckpt.dtype == "f64" ? read_f64_le(p + i * 8)
                                      : static_cast<double>(read_f32_le(p + i * 4));
    }
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

}  // namespace poselift
