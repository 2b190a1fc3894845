#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lgi/bundle.hpp"
#include "lgi/errors.hpp"
#include "lgi/pfc.hpp"

namespace lgi::thinking {

using pfc::LoopMode;

/// Session directive that blanks the imagined image ("closing the eyes").
inline constexpr std::string_view kCloseEyes = "close eyes.";

/// A second command arrived while one was still running on the session.
class SessionBusy : public ContractError {
 public:
  SessionBusy() : ContractError("session already has a command in flight") {}
};

struct SessionOptions {
  LoopMode mode = LoopMode::full;
  std::uint64_t seed = 0;
  /// Keep the PFC hidden state across commands instead of resetting it.
  bool persistent_state = false;
  /// Standard deviation of Gaussian noise added to V3' when a command
  /// updates the imagination; 0 makes sessions independent of the seed.
  float imagination_noise = 0.0f;
  /// Upper bound on symbols generated after an answer prefix.
  std::size_t max_completion = 8;
};

enum class CommandKind { directive, sentence, answer_prefix };

/// Validates a command: CodecError for symbols outside the alphabet,
/// GrammarError unless it is a full sentence, a sentence prefix, or a directive.
CommandKind classify_command(std::string_view text);

struct ThoughtResult {
  std::string completion;
  DigitImage image_after;
  /// V3' and V4' after the command.
  vision::LatentPair latents;
};

struct TranscriptRecord {
  std::size_t index = 0;
  std::string command;
  std::string completion;
  DigitImage image;
};

/// Closed-loop imagination state. One command runs at a time; a concurrent
/// call raises SessionBusy.
class Session {
 public:
  Session(pfc::Perception perception, std::unique_ptr<pfc::FramePredictor> predictor, SessionOptions options);

  ThoughtResult issue(std::string_view text);

  /// Decodes the current V3 latents into the imagined image (shortcut mode
  /// leaves the image stale until asked).
  const DigitImage& refresh_image();

  const DigitImage& image() const noexcept { return image_; }
  const vision::LatentPair& latents() const noexcept { return latents_; }
  const SessionOptions& options() const noexcept { return options_; }
  LoopMode mode() const noexcept { return options_.mode; }
  const std::vector<TranscriptRecord>& transcript() const noexcept { return transcript_; }
  /// Vision operations run by this session so far.
  const pfc::VisionOpCounts& vision_ops() const noexcept { return ops_; }
  /// Command symbols fed to the predictor, in order, across all commands.
  const std::string& fed_symbols() const noexcept { return fed_; }

 private:
  ThoughtResult run(std::string_view text, CommandKind kind);
  void close_eyes();

  pfc::Perception perception_;
  std::unique_ptr<pfc::FramePredictor> predictor_;
  SessionOptions options_;
  Rng rng_;
  DigitImage image_;
  vision::LatentPair latents_;
  std::vector<TranscriptRecord> transcript_;
  pfc::VisionOpCounts ops_;
  std::string fed_;
  std::mutex busy_;
};

/// Session over a bundle's trained models. ContractError when any of the
/// three models is missing.
std::unique_ptr<Session> new_session(const ModelBundle& models, SessionOptions options);

struct ScriptIssue {
  std::size_t line = 0;
  std::string text;
  std::string message;
};

/// One command per line; blank lines and '#' comments are ignored, trailing
/// whitespace after '.' is trimmed. Malformed lines are reported and skipped.
std::vector<std::string> parse_script(std::string_view script, std::vector<ScriptIssue>* issues = nullptr);

/// Runs `commands` in order and returns their results.
std::vector<ThoughtResult> run_script(Session& session, const std::vector<std::string>& commands);

/// "{index:02}_{slug}.pgm", the slug keeping letters and digits of the
/// command and joining words with '-'.
std::string frame_file_name(std::size_t index, std::string_view command);

/// transcript.json describing the session and every record.
std::string transcript_json(const Session& session);

/// Writes transcript.json and one PGM per record into `dir`.
void write_transcript(const Session& session, const std::filesystem::path& dir);

}  // namespace lgi::thinking
