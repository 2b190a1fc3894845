#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lgi/language.hpp"
#include "lgi/pfc.hpp"
#include "lgi/vision.hpp"

namespace lgi {

/// Every hyper-parameter of a run. Values come from the embedded defaults,
/// then a config file, then command-line overrides, each layer replacing the
/// previous one.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";

  struct Data {
    std::string source = "synthetic";  // synthetic | idx
    std::string idx_images;
    std::string idx_labels;
    std::size_t synthetic_count = 10000;
    std::uint64_t synthetic_seed = 7;
    std::size_t heldout_count = 1000;
    std::uint64_t heldout_seed = 99;
  } data;

  struct Dims {
    std::size_t image = kImagePixels;
    std::size_t l0 = language::kCodeBits;
    std::size_t l1 = 1;
    std::size_t v3 = 128;
    std::size_t v4 = 32;
    std::size_t vision_hidden1 = 512;
    std::size_t vision_hidden2 = 256;
    std::size_t ips_hidden = 32;
    std::size_t pfc_hidden = 512;
    std::size_t pfc_input = 169;
  } dims;

  struct Vision {
    std::size_t steps = 5000;
    std::size_t batch = 32;
    double learning_rate = 1e-3;
    double augment = 0.7;
  } vision;

  struct Ips {
    std::size_t steps = 12000;
    std::size_t batch = 64;
    double learning_rate = 3e-3;
    double clip_norm = 1.0;
    double prefix_probability = 0.5;
  } ips;

  struct Pfc {
    std::size_t batch = 32;
    double learning_rate = 1e-3;
    double clip_norm = 1.0;
    std::size_t steps_per_stage = 3000;
    /// Per-stage budgets; 0 falls back to steps_per_stage.
    std::vector<std::size_t> stage_steps = std::vector<std::size_t>(7, 0);
    double replay = 0.25;
    std::string criterion = "none";  // none | loss | answer_accuracy
    double criterion_threshold = 0.9;
    std::size_t eval_every = 25;
    std::size_t eval_episodes = 100;
    bool stop_at_criterion = false;
    std::size_t log_every = 100;
  } pfc;

  struct Eval {
    std::size_t episodes = 200;
    std::uint64_t seed = 5;
    std::size_t max_answer_steps = 8;
  } eval;

  struct Think {
    std::string mode = "full";
    double noise = 0.0;
    bool persistent_state = false;
    std::size_t max_completion = 8;
  } think;

  struct Serve {
    std::string host = "127.0.0.1";
    std::size_t port = 8080;
    std::string checkpoint;
    std::size_t session_ttl_seconds = 900;
  } serve;

  struct Checkpoints {
    /// Empty paths resolve to <out_dir>/vision.ckpt, ips.ckpt, pfc.ckpt.
    std::string vision;
    std::string ips;
    std::string pfc;
  } checkpoints;

  /// Throws ConfigError on inconsistent dimensions, unknown enum values or
  /// out-of-range settings, and (when check_paths) on missing IDX files.
  void validate(bool check_paths = true) const;

  std::filesystem::path vision_checkpoint() const;
  std::filesystem::path ips_checkpoint() const;
  std::filesystem::path pfc_checkpoint() const;

  vision::AutoencoderConfig autoencoder_config() const;
  language::IpsTrainConfig ips_config() const;
  pfc::PfcConfig pfc_config() const;
  pfc::TrainSettings pfc_settings() const;
  pfc::StagePlan stage_plan() const;
};

/// Sets one dotted key ("pfc.replay", "seed") from its textual value.
/// ConfigError for unknown keys or unparsable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Applies a TOML-style document: `[section]` headers, `key = value` lines,
/// '#' comments, quoted strings, integers, reals, booleans and flat arrays of
/// integers. ConfigError names the offending line.
void apply_config_text(RunConfig& config, std::string_view text);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Every key with its resolved value, in the same format apply_config_text reads.
std::string config_snapshot(const RunConfig& config);

/// Dotted names of every recognised key.
std::vector<std::string> config_keys();

}  // namespace lgi
