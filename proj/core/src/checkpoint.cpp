#include "lgi/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "lgi/errors.hpp"

namespace lgi {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

namespace {

constexpr std::size_t kPrefixSize = 4 + 1 + 4;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

Checkpoint Checkpoint::capture(const ParamList& params, StageMeta meta) {
  Checkpoint ckpt;
  ckpt.meta = std::move(meta);
  for (const auto& p : params) {
    ckpt.params.push_back({p.name, p.tensor.shape(), p.tensor.to_vector()});
  }
  return ckpt;
}

const ParamArray* Checkpoint::find(const std::string& name) const {
  const auto it = std::find_if(params.begin(), params.end(), [&](const ParamArray& p) { return p.name == name; });
  return it == params.end() ? nullptr : &*it;
}

void Checkpoint::restore(const ParamList& targets) const {
  std::vector<const ParamArray*> sources;
  for (const auto& t : targets) {
    const ParamArray* src = find(t.name);
    if (!src) throw ShapeError("checkpoint has no parameter '" + t.name + "'");
    if (src->shape != t.tensor.shape()) {
      throw ShapeError("parameter '" + t.name + "' has shape " + shape_string(src->shape) + " in checkpoint, model expects " +
                       shape_string(t.tensor.shape()));
    }
    sources.push_back(src);
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Tensor t = targets[i].tensor;
    std::copy(sources[i]->values.begin(), sources[i]->values.end(), t.data().begin());
  }
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::ordered_json header;
  header["params"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& p : ckpt.params) {
    if (shape_size(p.shape) != p.values.size()) throw ShapeError("parameter '" + p.name + "' size/shape mismatch");
    header["params"].push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset}, {"count", p.values.size()}});
    offset += p.values.size() * sizeof(float);
  }
  header["stage"] = {{"id", ckpt.meta.stage_id},
                     {"name", ckpt.meta.stage_name},
                     {"steps", ckpt.meta.step_count},
                     {"seed", ckpt.meta.seed}};
  header["attributes"] = ckpt.attributes;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPrefixSize + text.size() + offset);
  out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  out.push_back(ckpt.version);
  put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : ckpt.params) {
    const auto* raw = reinterpret_cast<const std::uint8_t*>(p.values.data());
    out.insert(out.end(), raw, raw + p.values.size() * sizeof(float));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPrefixSize) throw FormatError("checkpoint truncated before header", bytes.size());
  if (!std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic), bytes.begin())) {
    throw FormatError("bad checkpoint magic", 0);
  }
  Checkpoint ckpt;
  ckpt.version = bytes[4];
  if (ckpt.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(ckpt.version), 4);
  }
  const std::size_t header_len = get_u32_le(bytes, 5);
  if (bytes.size() < kPrefixSize + header_len) throw FormatError("checkpoint header truncated", bytes.size());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPrefixSize, bytes.begin() + static_cast<std::ptrdiff_t>(kPrefixSize + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(), kPrefixSize);
  }

  const std::size_t payload = kPrefixSize + header_len;
  try {
    for (const auto& entry : header.at("params")) {
      ParamArray p;
      p.name = entry.at("name").get<std::string>();
      p.shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = entry.at("count").get<std::size_t>();
      if (count != shape_size(p.shape)) throw FormatError("parameter '" + p.name + "' count disagrees with shape", kPrefixSize);
      const std::size_t begin = payload + offset;
      const std::size_t end = begin + count * sizeof(float);
      if (end > bytes.size()) throw FormatError("parameter '" + p.name + "' payload truncated", bytes.size());
      p.values.resize(count);
      std::memcpy(p.values.data(), bytes.data() + begin, count * sizeof(float));
      ckpt.params.push_back(std::move(p));
    }
    const auto& stage = header.at("stage");
    ckpt.meta.stage_id = stage.at("id").get<int>();
    ckpt.meta.stage_name = stage.value("name", "");
    ckpt.meta.step_count = stage.at("steps").get<std::uint64_t>();
    ckpt.meta.seed = stage.at("seed").get<std::uint64_t>();
    if (header.contains("attributes")) {
      ckpt.attributes = header.at("attributes").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header malformed: ") + e.what(), kPrefixSize);
  }
  std::size_t expected_end = payload;
  for (const auto& p : ckpt.params) expected_end += p.values.size() * sizeof(float);
  if (expected_end != bytes.size()) throw FormatError("checkpoint has trailing or missing payload bytes", std::min(expected_end, bytes.size()));
  return ckpt;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace lgi
