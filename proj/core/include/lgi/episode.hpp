#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lgi/digits.hpp"
#include "lgi/grammar.hpp"
#include "lgi/image.hpp"
#include "lgi/rng.hpp"

namespace lgi::curriculum {

using language::Syntax;

inline constexpr char kPadSymbol = '\0';

/// One time step: a text symbol and the image visible at that moment.
struct Frame {
  char symbol = kPadSymbol;
  DigitImage image;

  bool operator==(const Frame&) const = default;
};

/// Everything needed to rebuild an episode deterministically.
struct EpisodeParams {
  Syntax syntax = Syntax::move_left;
  /// Pool image the command acts on; for give-me, the instance produced.
  std::size_t source_index = 0;
  /// Move distance, digit or angle, depending on the syntax.
  int amount = 0;
  /// Band factor for the size syntaxes; resize factor for enlarge/shrink.
  float scale_factor = 1.0f;

  bool operator==(const EpisodeParams&) const = default;
};

/// Frames 0..T-1 carry the sentence symbols paired with the visible image;
/// frame T carries the pad symbol and the outcome image.
struct Episode {
  Syntax syntax = Syntax::move_left;
  std::vector<Frame> frames;
  EpisodeParams params;
  int source_label = 0;

  /// Number of sentence symbols (T).
  std::size_t text_length() const { return frames.empty() ? 0 : frames.size() - 1; }
  std::string sentence() const;
  const DigitImage& outcome() const { return frames.back().image; }

  bool operator==(const Episode&) const = default;
};

EpisodeParams sample_params(Syntax syntax, const DigitPool& pool, Rng& rng);
Episode build_episode(const EpisodeParams& params, const DigitPool& pool);
Episode make_episode(Syntax syntax, const DigitPool& pool, Rng& rng);
Episode make_episode(int syntax_id, const DigitPool& pool, Rng& rng);

/// The command sentence an EpisodeParams describes.
std::string sentence_for(const EpisodeParams& params, const DigitPool& pool);
/// Image the command acts on (shown during the sentence).
DigitImage visible_image(const EpisodeParams& params, const DigitPool& pool);
/// Expected image once the command has been carried out.
DigitImage outcome_image(const EpisodeParams& params, const DigitPool& pool);

// Episode cache files:
//   "LGIE" | u8 version | u32 LE episode count |
//   per episode: u8 syntax id | u8 source label | u32 LE frame count |
//                frames: u8 symbol | 784 x LE float32 pixels
inline constexpr std::uint8_t kEpisodeCacheVersion = 1;

std::vector<std::uint8_t> encode_episodes(std::span<const Episode> episodes);
std::vector<Episode> decode_episodes(std::span<const std::uint8_t> bytes);
void write_episode_cache(std::span<const Episode> episodes, const std::filesystem::path& path);
std::vector<Episode> read_episode_cache(const std::filesystem::path& path);

}  // namespace lgi::curriculum
