#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lgi/digits.hpp"
#include "lgi/episode.hpp"
#include "lgi/language.hpp"
#include "lgi/optim.hpp"
#include "lgi/vision.hpp"

namespace lgi::pfc {

using language::SymbolCode;
using language::Syntax;

struct PfcConfig {
  std::size_t v3 = 128;
  std::size_t v4 = 32;
  std::size_t hidden = 512;

  /// c(t) = [L0 (8), L1 (1), V3, V4].
  std::size_t input_size() const { return language::kCodeBits + 1 + v3 + v4; }
  /// a'(t) = [L0' (8), V3'].
  std::size_t output_size() const { return language::kCodeBits + v3; }
};

/// One time step of PFC input.
struct PfcInput {
  SymbolCode code{};
  float quantity = 0.0f;
  std::vector<float> v3;
  std::vector<float> v4;
};

struct PfcOutput {
  SymbolCode code{};
  std::vector<float> v3;

  bool operator==(const PfcOutput&) const = default;
};

/// LSTM over c(t) followed by one FC layer whose first 8 outputs go through
/// a sigmoid and the remaining V3' outputs through tanh.
class PfcModel {
 public:
  PfcModel() = default;
  static PfcModel init(const PfcConfig& config, Rng& rng);

  const PfcConfig& config() const noexcept { return config_; }
  ParamList params() const;
  /// Deep copy; tensors are not shared with the original.
  PfcModel clone() const;

  const LstmLayer& lstm() const { return lstm_; }
  const FcLayer& head() const { return head_; }

  LstmState zero_state(std::size_t batch = 0) const { return lstm_.zero_state(batch); }

  /// Head applied to hidden states [rows x H]; returns [rows x output_size].
  Tensor readout(const Tensor& hidden) const;

 private:
  PfcConfig config_;
  LstmLayer lstm_;
  FcLayer head_;  // identity activation; split activations applied in readout()
};

/// Single-step recurrence. ShapeError on mismatched input or state sizes.
std::pair<PfcOutput, LstmState> pfc_step(const PfcInput& input, const LstmState& state, const PfcModel& model);

/// Encoded frame a(t) = [L0(t), V3(t)] used as the prediction target.
struct EncodedFrame {
  SymbolCode code{};
  std::vector<float> v3;
};

/// sum_t ||a'(t) - a(t+1)||^2 / n over the n predictions. ContractError when
/// the lengths differ or are zero, ShapeError on mismatched vector sizes.
double nfp_loss(const std::vector<PfcOutput>& predictions, const std::vector<EncodedFrame>& actuals);

// ---------------------------------------------------------------------------
// Frame-level stepping shared by free running, evaluation and the thinking loop.

/// Anything that maps c(t) to a'(t) with internal recurrent state.
class FramePredictor {
 public:
  virtual ~FramePredictor() = default;
  virtual void reset() = 0;
  virtual PfcOutput step(const PfcInput& input) = 0;
};

class PfcPredictor final : public FramePredictor {
 public:
  explicit PfcPredictor(const PfcModel& model) : model_(&model), state_(model.zero_state()) {}
  void reset() override { state_ = model_->zero_state(); }
  PfcOutput step(const PfcInput& input) override;

 private:
  const PfcModel* model_;
  LstmState state_;
};

enum class LoopMode { full, shortcut };

std::string_view loop_mode_name(LoopMode mode);
/// "full" or "shortcut"; ConfigError otherwise.
LoopMode parse_loop_mode(std::string_view name);

/// Counts of vision operations performed while stepping.
struct VisionOpCounts {
  std::size_t encode = 0;
  std::size_t decode = 0;
  std::size_t v3_to_v4 = 0;

  bool operator==(const VisionOpCounts&) const = default;
};

/// Frozen language and vision components needed to build c(t).
struct Perception {
  const vision::VisionModel* vision = nullptr;
  const language::IpsModel* ips = nullptr;

  /// Throws ContractError if either model is missing.
  void require() const;
};

struct GeneratedFrame {
  char symbol = language::kPad;
  SymbolCode code{};
  std::vector<float> v3;
  /// Decoded image; present in full mode only.
  std::optional<DigitImage> image;
};

struct FreeRunResult {
  std::vector<PfcOutput> prefix_outputs;
  std::vector<GeneratedFrame> generated;
  VisionOpCounts ops;

  /// Generated symbols up to (not including) the first pad or `stop`.
  std::string text(char stop = '.') const;
};

/// Feeds `prefix` symbols over `image` (teacher forcing), then feeds the
/// predictor its own outputs: the rounded L0' code, and for the image path
/// decode(V3') -> encode in full mode or V3' -> v3_to_v4 in shortcut mode.
/// Stops after `max_steps` generated frames, at a pad symbol, or at `stop`
/// when it is not pad. The predictor is reset first.
FreeRunResult free_run(FramePredictor& predictor, const Perception& perception, std::string_view prefix,
                       const DigitImage& image, std::size_t max_steps, LoopMode mode, char stop = language::kPad);

struct FreeRunOptions {
  std::size_t max_steps = 8;
  LoopMode mode = LoopMode::full;
  char stop = language::kPad;
  bool reset = true;
};

/// Same, starting from already encoded latents (no initial encode).
FreeRunResult free_run(FramePredictor& predictor, const Perception& perception, std::string_view prefix,
                       vision::LatentPair latents, const FreeRunOptions& options);

// ---------------------------------------------------------------------------
// Training

struct StageSpec {
  int id = 1;
  std::string name;
  std::vector<Syntax> syntaxes;
  std::size_t steps = 0;
};

/// Ordered stages. Later stages replay syntaxes of earlier ones.
struct StagePlan {
  std::vector<StageSpec> stages;
  float replay = 0.25f;
  std::uint64_t seed = 1;

  std::uint64_t stage_seed(int stage_id) const;
};

/// Stages 1..7: move left/right, this is, size is, size is not, give me,
/// enlarge/shrink, rotate; every stage gets `steps_per_stage` steps.
StagePlan default_stage_plan(std::size_t steps_per_stage);

enum class CriterionKind { none, loss, answer_accuracy };

std::string_view criterion_kind_name(CriterionKind kind);
CriterionKind parse_criterion_kind(std::string_view name);

struct StageCriterion {
  CriterionKind kind = CriterionKind::none;
  /// Loss: mean training loss over the last `eval_every` steps at or below
  /// the threshold. Accuracy: answer-word accuracy at or above it.
  double threshold = 0.0;
  std::size_t eval_every = 25;
  std::size_t eval_episodes = 100;
  bool stop_when_met = false;
};

struct TrainSettings {
  std::size_t batch = 32;
  AdamConfig adam{.clip_norm = 1.0f};
  StageCriterion criterion;
  std::size_t log_every = 100;
};

/// Frozen dependencies and digit pools for PFC training and evaluation.
struct TrainContext {
  Perception perception;
  const curriculum::DigitPool* train_pool = nullptr;
  /// Held-out pool for criteria and evaluation; train_pool when null.
  const curriculum::DigitPool* eval_pool = nullptr;

  const curriculum::DigitPool& evaluation_pool() const { return eval_pool ? *eval_pool : *train_pool; }
};

struct LossPoint {
  std::size_t step = 0;
  float loss = 0.0f;
};

struct StageMetrics {
  int stage_id = 0;
  std::string stage_name;
  std::size_t steps_run = 0;
  float initial_loss = 0.0f;
  float final_loss = 0.0f;
  std::vector<LossPoint> loss_curve;
  /// (step, value) at each criterion evaluation.
  std::vector<std::pair<std::size_t, double>> criterion_trace;
  std::optional<std::size_t> steps_to_criterion;
};

/// Caches IPS quantities per sentence so repeated episodes do not re-run the IPS.
class QuantityCache {
 public:
  explicit QuantityCache(const language::IpsModel& ips) : ips_(&ips) {}
  const std::vector<float>& quantities(const std::string& text);

 private:
  const language::IpsModel* ips_;
  std::unordered_map<std::string, std::vector<float>> cache_;
};

/// A batch of episodes turned into per-step input/target matrices.
struct EncodedBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<Tensor> inputs;   // per step [batch x input_size]
  Tensor targets;               // [steps*batch x output_size], step-major
  std::vector<float> weights;   // per target row: 1/(T_i * batch) or 0 past the end
};

EncodedBatch encode_batch(const std::vector<curriculum::Episode>& episodes, const Perception& perception,
                          QuantityCache& quantities, const PfcConfig& config);

/// Teacher-forced batched NFP loss (per-episode mean over transitions,
/// averaged over the batch).
Tensor batch_nfp_loss(const PfcModel& model, const EncodedBatch& batch);

/// Trains one stage in place. `replay_syntaxes` lists earlier-stage syntaxes;
/// round(replay * batch) episodes per batch are drawn from them when nonempty.
/// An answer_accuracy criterion is skipped for stages without answer syntaxes.
/// ContractError unless the vision and IPS models are frozen.
StageMetrics train_stage(PfcModel& model, const StageSpec& stage, const std::vector<Syntax>& replay_syntaxes,
                         float replay, std::uint64_t seed, const TrainSettings& settings, const TrainContext& context);

using StageCallback = std::function<void(const StageSpec&, const StageMetrics&, const PfcModel&)>;

/// Runs every stage of `plan` in order.
std::vector<StageMetrics> train_plan(PfcModel& model, const StagePlan& plan, const TrainSettings& settings,
                                     const TrainContext& context, const StageCallback& on_stage_end = {});

// ---------------------------------------------------------------------------
// Evaluation

/// A completion probe: after feeding `prefix`, the grammar fixes `expected`.
struct CompletionProbe {
  std::string prefix;
  std::string expected;
};

/// Probes for a sentence: at every word start, the prefix through the first
/// letter of the word, and the continuation shared by every grammar sentence
/// with that prefix (possibly spanning into the next word).
std::vector<CompletionProbe> completion_probes(const std::string& sentence);

/// Expected answer word of an episode for syntaxes 3-5; empty otherwise.
std::string expected_answer(const curriculum::Episode& episode);

struct SyntaxMetrics {
  Syntax syntax = Syntax::move_left;
  std::size_t episodes = 0;
  std::size_t probes = 0;
  /// Fraction of probes completed exactly; NaN when there are none.
  double completion_accuracy = 0.0;
  /// Answer-word accuracy for syntaxes 3-5; NaN otherwise.
  double answer_accuracy = 0.0;
  /// decode(V3') at the last command step vs the oracle outcome; NaN for syntaxes 3-5.
  double image_mse = 0.0;
  double image_correlation = 0.0;
};

struct EvalOptions {
  LoopMode mode = LoopMode::full;
  std::size_t max_answer_steps = 8;
  bool completions = true;
  bool answers = true;
  bool images = true;
};

SyntaxMetrics evaluate_syntax(const PfcModel& model, Syntax syntax, std::size_t n_episodes, const Perception& perception,
                              const curriculum::DigitPool& pool, std::uint64_t seed, const EvalOptions& options = {});

/// Answer-word accuracy over pre-built episodes of syntaxes 3-5.
double answer_accuracy(FramePredictor& predictor, const Perception& perception,
                       const std::vector<curriculum::Episode>& episodes, LoopMode mode = LoopMode::full,
                       std::size_t max_steps = 8);

/// Free-runs the answer after the syntax's answer prefix over `image`.
std::string complete_answer(FramePredictor& predictor, const Perception& perception, Syntax syntax,
                            const DigitImage& image, LoopMode mode = LoopMode::full, std::size_t max_steps = 8);

/// Teacher-forces the full sentence and decodes V3' at its last symbol.
DigitImage imagined_outcome(FramePredictor& predictor, const Perception& perception,
                            const curriculum::Episode& episode);

}  // namespace lgi::pfc
