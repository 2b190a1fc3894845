#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lgi/layers.hpp"

namespace lgi {

inline constexpr char kCheckpointMagic[4] = {'L', 'G', 'I', '1'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Which training stage produced a checkpoint.
struct StageMeta {
  int stage_id = 0;
  std::string stage_name;
  std::uint64_t step_count = 0;
  std::uint64_t seed = 0;

  bool operator==(const StageMeta&) const = default;
};

struct ParamArray {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const ParamArray&) const = default;
};

/// In-memory checkpoint. On disk:
///   "LGI1" | u8 version | u32 LE header length | UTF-8 JSON header | LE float32 payload
/// The header lists each parameter's name, shape and byte offset into the payload,
/// the stage metadata and free-form string attributes.
struct Checkpoint {
  std::uint8_t version = kCheckpointVersion;
  std::vector<ParamArray> params;
  StageMeta meta;
  std::map<std::string, std::string> attributes;

  static Checkpoint capture(const ParamList& params, StageMeta meta = {});

  const ParamArray* find(const std::string& name) const;
  /// Copies stored values into `params` (matched by name). Missing names or
  /// shape differences raise ShapeError and leave `params` untouched.
  void restore(const ParamList& params) const;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lgi
