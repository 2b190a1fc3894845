#pragma once

#include <filesystem>
#include <optional>

#include "lgi/checkpoint.hpp"
#include "lgi/language.hpp"
#include "lgi/pfc.hpp"
#include "lgi/vision.hpp"

namespace lgi {

/// Any subset of the three trained subsystems, stored together in one
/// checkpoint. Dimensions travel as attributes ("vision.v3", "pfc.hidden", ...)
/// so a checkpoint can be loaded without a config.
struct ModelBundle {
  std::optional<vision::VisionModel> vision;
  std::optional<language::IpsModel> ips;
  std::optional<pfc::PfcModel> pfc;

  /// Perception over the bundled vision and IPS models (null when absent).
  pfc::Perception perception() const;
};

Checkpoint to_checkpoint(const ModelBundle& bundle, StageMeta meta = {});
/// Rebuilds every model named in the "models" attribute. Vision and IPS
/// models come back frozen. ConsistencyError on missing or contradictory
/// attributes, ShapeError when parameters do not fit the recorded dimensions.
ModelBundle from_checkpoint(const Checkpoint& checkpoint);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path, StageMeta meta = {});
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace lgi
