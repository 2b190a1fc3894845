#include "lgi/pfc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lgi/errors.hpp"
#include "lgi/grammar.hpp"

namespace lgi::pfc {

using curriculum::Episode;
using language::kCodeBits;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append_code(std::vector<float>& out, const SymbolCode& code) { out.insert(out.end(), code.begin(), code.end()); }

SymbolCode strict_code(const SymbolCode& code) {
  const std::uint8_t byte = language::code_to_byte(code);
  SymbolCode out{};
  for (std::size_t bit = 0; bit < kCodeBits; ++bit) out[bit] = static_cast<float>((byte >> (7 - bit)) & 1U);
  return out;
}

void check_input(const PfcInput& input, const PfcConfig& config) {
  if (input.v3.size() != config.v3 || input.v4.size() != config.v4) {
    throw ShapeError("pfc: input latents are " + std::to_string(input.v3.size()) + "+" +
                     std::to_string(input.v4.size()) + ", model expects " + std::to_string(config.v3) + "+" +
                     std::to_string(config.v4));
  }
}

Tensor input_tensor(const PfcInput& input, const PfcConfig& config) {
  check_input(input, config);
  std::vector<float> c;
  c.reserve(config.input_size());
  append_code(c, input.code);
  c.push_back(input.quantity);
  c.insert(c.end(), input.v3.begin(), input.v3.end());
  c.insert(c.end(), input.v4.begin(), input.v4.end());
  const std::size_t n = c.size();
  return Tensor::from({n}, std::move(c));
}

PfcOutput split_output(std::span<const float> a) {
  PfcOutput out;
  std::copy_n(a.begin(), kCodeBits, out.code.begin());
  out.v3.assign(a.begin() + kCodeBits, a.end());
  return out;
}

}  // namespace

PfcModel PfcModel::init(const PfcConfig& config, Rng& rng) {
  PfcModel m;
  m.config_ = config;
  m.lstm_ = LstmLayer::init(config.input_size(), config.hidden, rng);
  m.head_ = FcLayer::init(config.hidden, config.output_size(), Activation::identity, rng);
  return m;
}

ParamList PfcModel::params() const {
  ParamList out;
  lstm_.append_params(out, "pfc.lstm");
  head_.append_params(out, "pfc.head");
  return out;
}

PfcModel PfcModel::clone() const {
  PfcModel copy = *this;
  const auto fresh = [](const Tensor& t) { return Tensor::from(t.shape(), t.to_vector(), true); };
  copy.lstm_ = {fresh(lstm_.w_input), fresh(lstm_.w_hidden), fresh(lstm_.bias)};
  copy.head_.weight = fresh(head_.weight);
  copy.head_.bias = fresh(head_.bias);
  return copy;
}

Tensor PfcModel::readout(const Tensor& hidden) const {
  const Tensor y = fc_forward(hidden, head_);
  const std::size_t width = config_.output_size();
  return concat_cols({sigmoid(slice_cols(y, 0, kCodeBits)), tanh(slice_cols(y, kCodeBits, width))});
}

std::pair<PfcOutput, LstmState> pfc_step(const PfcInput& input, const LstmState& state, const PfcModel& model) {
  const Tensor x = input_tensor(input, model.config());
  LstmState next = lstm_step(x, state, model.lstm());
  const Tensor a = model.readout(next.h);
  return {split_output(a.data()), std::move(next)};
}

double nfp_loss(const std::vector<PfcOutput>& predictions, const std::vector<EncodedFrame>& actuals) {
  if (predictions.size() != actuals.size()) {
    throw ContractError("nfp_loss: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(actuals.size()) + " targets");
  }
  if (predictions.empty()) throw ContractError("nfp_loss: empty sequence");
  double total = 0.0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    const auto& p = predictions[t];
    const auto& a = actuals[t];
    if (p.v3.size() != a.v3.size()) throw ShapeError("nfp_loss: V3 sizes differ at step " + std::to_string(t));
    for (std::size_t i = 0; i < kCodeBits; ++i) {
      const double d = static_cast<double>(p.code[i]) - a.code[i];
      total += d * d;
    }
    for (std::size_t i = 0; i < p.v3.size(); ++i) {
      const double d = static_cast<double>(p.v3[i]) - a.v3[i];
      total += d * d;
    }
  }
  return total / static_cast<double>(predictions.size());
}

PfcOutput PfcPredictor::step(const PfcInput& input) {
  NoGradGuard no_grad;
  auto [out, next] = pfc_step(input, state_, *model_);
  state_ = std::move(next);
  return out;
}

std::string_view loop_mode_name(LoopMode mode) { return mode == LoopMode::full ? "full" : "shortcut"; }

LoopMode parse_loop_mode(std::string_view name) {
  if (name == "full") return LoopMode::full;
  if (name == "shortcut") return LoopMode::shortcut;
  throw ConfigError("unknown loop mode '" + std::string(name) + "' (expected full or shortcut)");
}

void Perception::require() const {
  if (vision == nullptr) throw ContractError("vision model is not loaded");
  if (ips == nullptr) throw ContractError("IPS model is not loaded");
}

std::string FreeRunResult::text(char stop) const {
  std::string out;
  for (const auto& g : generated) {
    if (g.symbol == language::kPad || g.symbol == stop) break;
    out.push_back(g.symbol);
  }
  return out;
}

FreeRunResult free_run(FramePredictor& predictor, const Perception& perception, std::string_view prefix,
                       const DigitImage& image, std::size_t max_steps, LoopMode mode, char stop) {
  perception.require();
  FreeRunOptions options{max_steps, mode, stop, true};
  FreeRunResult result = free_run(predictor, perception, prefix, vision::encode(image, *perception.vision), options);
  ++result.ops.encode;
  return result;
}

FreeRunResult free_run(FramePredictor& predictor, const Perception& perception, std::string_view prefix,
                       vision::LatentPair latents, const FreeRunOptions& options) {
  if (prefix.empty()) throw ContractError("free_run: prefix must be nonempty");
  perception.require();
  const auto codes = language::binarize(prefix);
  const auto& vis = *perception.vision;

  FreeRunResult result;
  if (options.reset) predictor.reset();
  language::IpsStream ips(*perception.ips);
  for (const auto& code : codes) {
    const float q = ips.push(code);
    result.prefix_outputs.push_back(predictor.step({code, q, latents.v3, latents.v4}));
  }

  PfcOutput last = result.prefix_outputs.back();
  for (std::size_t s = 0; s < options.max_steps; ++s) {
    GeneratedFrame frame;
    frame.code = strict_code(last.code);
    frame.symbol = language::textize(frame.code);
    frame.v3 = last.v3;
    if (options.mode == LoopMode::full) {
      frame.image = vision::decode(last.v3, vis);
      ++result.ops.decode;
    }
    const bool done = frame.symbol == language::kPad ||
                      (options.stop != language::kPad && frame.symbol == options.stop) || s + 1 == options.max_steps;
    if (!done) {
      if (options.mode == LoopMode::full) {
        latents = vision::encode(*frame.image, vis);
        ++result.ops.encode;
      } else {
        latents.v3 = last.v3;
        latents.v4 = vision::v3_to_v4(last.v3, vis);
        ++result.ops.v3_to_v4;
      }
    }
    const SymbolCode code = frame.code;
    result.generated.push_back(std::move(frame));
    if (done) break;
    const float q = ips.push(code);
    last = predictor.step({code, q, latents.v3, latents.v4});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Training

std::uint64_t StagePlan::stage_seed(int stage_id) const {
  Rng r(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stage_id + 1)));
  return r.next_u64();
}

StagePlan default_stage_plan(std::size_t steps_per_stage) {
  StagePlan plan;
  plan.stages = {
      {1, "move", {Syntax::move_left, Syntax::move_right}, steps_per_stage},
      {2, "this-is", {Syntax::this_is}, steps_per_stage},
      {3, "size", {Syntax::size_is}, steps_per_stage},
      {4, "size-not", {Syntax::size_is_not}, steps_per_stage},
      {5, "give-me", {Syntax::give_me}, steps_per_stage},
      {6, "resize", {Syntax::resize}, steps_per_stage},
      {7, "rotate", {Syntax::rotate}, steps_per_stage},
  };
  return plan;
}

std::string_view criterion_kind_name(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::loss: return "loss";
    case CriterionKind::answer_accuracy: return "answer_accuracy";
    case CriterionKind::none: break;
  }
  return "none";
}

CriterionKind parse_criterion_kind(std::string_view name) {
  if (name == "none") return CriterionKind::none;
  if (name == "loss") return CriterionKind::loss;
  if (name == "answer_accuracy") return CriterionKind::answer_accuracy;
  throw ConfigError("unknown criterion '" + std::string(name) + "' (expected none, loss or answer_accuracy)");
}

const std::vector<float>& QuantityCache::quantities(const std::string& text) {
  auto it = cache_.find(text);
  if (it == cache_.end()) it = cache_.emplace(text, language::ips_forward(language::binarize(text), *ips_)).first;
  return it->second;
}

EncodedBatch encode_batch(const std::vector<Episode>& episodes, const Perception& perception,
                          QuantityCache& quantities, const PfcConfig& config) {
  perception.require();
  if (episodes.empty()) throw ContractError("encode_batch: no episodes");
  const std::size_t b = episodes.size();
  std::vector<DigitImage> images;
  images.reserve(2 * b);
  std::size_t steps = 0;
  for (const auto& ep : episodes) {
    if (ep.text_length() == 0) throw ContractError("encode_batch: episode without command symbols");
    steps = std::max(steps, ep.text_length());
    images.push_back(ep.frames.front().image);
  }
  for (const auto& ep : episodes) images.push_back(ep.outcome());
  // Frames 0..T-1 of an episode share the visible image, so two encodings per
  // episode cover every step.
  const auto latents = vision::encode_all(images, *perception.vision);
  if (latents.front().v3.size() != config.v3 || latents.front().v4.size() != config.v4) {
    throw ShapeError("encode_batch: vision latents do not match the PFC input layout");
  }

  const std::size_t in = config.input_size();
  const std::size_t out = config.output_size();
  EncodedBatch batch;
  batch.batch = b;
  batch.steps = steps;
  std::vector<float> targets(steps * b * out, 0.0f);
  batch.weights.assign(steps * b, 0.0f);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<float> x(b * in, 0.0f);
    for (std::size_t i = 0; i < b; ++i) {
      const Episode& ep = episodes[i];
      const std::size_t len = ep.text_length();
      if (t >= len) continue;
      const auto& vis = latents[i];
      const auto& q = quantities.quantities(ep.sentence());
      float* row = x.data() + i * in;
      const auto code = language::Alphabet::code_of(ep.frames[t].symbol);
      row = std::copy(code.begin(), code.end(), row);
      *row++ = q[t];
      row = std::copy(vis.v3.begin(), vis.v3.end(), row);
      std::copy(vis.v4.begin(), vis.v4.end(), row);

      float* target = targets.data() + (t * b + i) * out;
      const auto next_code = language::Alphabet::code_of(ep.frames[t + 1].symbol);
      target = std::copy(next_code.begin(), next_code.end(), target);
      const auto& next_v3 = (t + 1 < len) ? vis.v3 : latents[b + i].v3;
      std::copy(next_v3.begin(), next_v3.end(), target);
      batch.weights[t * b + i] = 1.0f / static_cast<float>(len * b);
    }
    batch.inputs.push_back(Tensor::from({b, in}, std::move(x)));
  }
  batch.targets = Tensor::from({steps * b, out}, std::move(targets));
  return batch;
}

Tensor batch_nfp_loss(const PfcModel& model, const EncodedBatch& batch) {
  LstmState state = model.zero_state(batch.batch);
  std::vector<Tensor> hidden;
  hidden.reserve(batch.steps);
  for (const auto& x : batch.inputs) {
    state = lstm_step(x, state, model.lstm());
    hidden.push_back(state.h);
  }
  const Tensor predictions = model.readout(concat_rows(hidden));
  return weighted_square_sum(predictions - batch.targets, batch.weights);
}

namespace {

bool has_answer(Syntax s) { return !language::answer_prefix(s).empty(); }

}  // namespace

StageMetrics train_stage(PfcModel& model, const StageSpec& stage, const std::vector<Syntax>& replay_syntaxes,
                         float replay, std::uint64_t seed, const TrainSettings& settings, const TrainContext& context) {
  context.perception.require();
  if (!context.perception.vision->frozen()) throw ContractError("train_stage: vision model must be trained and frozen");
  if (!context.perception.ips->frozen()) throw ContractError("train_stage: IPS model must be trained and frozen");
  if (context.train_pool == nullptr || context.train_pool->empty()) throw ContractError("train_stage: empty digit pool");
  if (stage.syntaxes.empty()) throw ConfigError("train_stage: stage '" + stage.name + "' has no syntaxes");
  if (settings.batch == 0) throw ConfigError("train_stage: batch size must be positive");
  if (replay < 0.0f || replay >= 1.0f) throw ConfigError("train_stage: replay fraction must be in [0, 1)");
  StageCriterion criterion = settings.criterion;
  if (criterion.kind != CriterionKind::none && criterion.eval_every == 0) {
    throw ConfigError("train_stage: criterion eval_every must be positive");
  }

  Rng rng(seed);
  Rng eval_rng = rng.split();
  std::vector<Episode> eval_set;
  if (criterion.kind == CriterionKind::answer_accuracy) {
    std::vector<Syntax> answerable;
    for (Syntax s : stage.syntaxes) {
      if (has_answer(s)) answerable.push_back(s);
    }
    if (answerable.empty()) criterion.kind = CriterionKind::none;
    for (std::size_t i = 0; !answerable.empty() && i < criterion.eval_episodes; ++i) {
      const Syntax s = answerable[static_cast<std::size_t>(eval_rng.uniform_int(0, static_cast<int>(answerable.size()) - 1))];
      eval_set.push_back(curriculum::make_episode(s, context.evaluation_pool(), eval_rng));
    }
  }

  auto params = tensors_of(model.params());
  auto opt = OptimizerState::for_params(params, settings.adam);
  QuantityCache quantities(*context.perception.ips);
  const std::size_t n_replay =
      replay_syntaxes.empty() ? 0 : static_cast<std::size_t>(std::lround(replay * static_cast<float>(settings.batch)));
  const auto pick = [&rng](const std::vector<Syntax>& from) {
    return from[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(from.size()) - 1))];
  };

  StageMetrics metrics;
  metrics.stage_id = stage.id;
  metrics.stage_name = stage.name;
  double window = 0.0;
  std::vector<Episode> episodes(settings.batch);
  for (std::size_t step = 0; step < stage.steps; ++step) {
    for (std::size_t i = 0; i < settings.batch; ++i) {
      const Syntax s = i < settings.batch - n_replay ? pick(stage.syntaxes) : pick(replay_syntaxes);
      episodes[i] = curriculum::make_episode(s, *context.train_pool, rng);
    }
    const EncodedBatch batch = encode_batch(episodes, context.perception, quantities, model.config());
    const Tensor loss = batch_nfp_loss(model, batch);
    zero_grads(params);
    loss.backward();
    adam_step(params, opt);

    const float value = loss.item();
    if (!std::isfinite(value)) throw ConsistencyError("train_stage: non-finite loss at step " + std::to_string(step));
    if (step == 0) metrics.initial_loss = value;
    metrics.final_loss = value;
    metrics.steps_run = step + 1;
    if (settings.log_every && (step % settings.log_every == 0 || step + 1 == stage.steps)) {
      metrics.loss_curve.push_back({step, value});
    }
    window += value;

    if (criterion.kind != CriterionKind::none && !metrics.steps_to_criterion && (step + 1) % criterion.eval_every == 0) {
      double measured = 0.0;
      bool met = false;
      if (criterion.kind == CriterionKind::loss) {
        measured = window / static_cast<double>(criterion.eval_every);
        met = measured <= criterion.threshold;
      } else {
        PfcPredictor predictor(model);
        measured = answer_accuracy(predictor, context.perception, eval_set);
        met = measured >= criterion.threshold;
      }
      window = 0.0;
      metrics.criterion_trace.emplace_back(step + 1, measured);
      if (met && !metrics.steps_to_criterion) {
        metrics.steps_to_criterion = step + 1;
        if (criterion.stop_when_met) break;
      }
    }
  }
  return metrics;
}

std::vector<StageMetrics> train_plan(PfcModel& model, const StagePlan& plan, const TrainSettings& settings,
                                     const TrainContext& context, const StageCallback& on_stage_end) {
  std::vector<StageMetrics> all;
  std::vector<Syntax> seen;
  for (const auto& stage : plan.stages) {
    all.push_back(train_stage(model, stage, seen, plan.replay, plan.stage_seed(stage.id), settings, context));
    if (on_stage_end) on_stage_end(stage, all.back(), model);
    for (Syntax s : stage.syntaxes) {
      if (std::find(seen.begin(), seen.end(), s) == seen.end()) seen.push_back(s);
    }
  }
  return all;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<CompletionProbe> completion_probes(const std::string& sentence) {
  const auto& grammar = language::all_sentences();
  std::vector<CompletionProbe> probes;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const bool word_start = sentence[i] != ' ' && sentence[i] != '.' && (i == 0 || sentence[i - 1] == ' ');
    if (!word_start) continue;
    const std::string prefix = sentence.substr(0, i + 1);
    std::optional<std::string> shared;
    for (const auto& s : grammar) {
      if (!s.starts_with(prefix)) continue;
      const std::string_view rest = std::string_view(s).substr(prefix.size());
      if (!shared) {
        shared = std::string(rest);
        continue;
      }
      const auto mismatch = std::mismatch(shared->begin(), shared->end(), rest.begin(), rest.end());
      shared->erase(mismatch.first, shared->end());
    }
    if (shared && !shared->empty()) probes.push_back({prefix, *shared});
  }
  return probes;
}

std::string expected_answer(const Episode& episode) {
  const std::string prefix = language::answer_prefix(episode.syntax);
  if (prefix.empty()) return {};
  std::string s = episode.sentence();
  if (!s.starts_with(prefix) || !s.ends_with('.')) return {};
  return s.substr(prefix.size(), s.size() - prefix.size() - 1);
}

std::string complete_answer(FramePredictor& predictor, const Perception& perception, Syntax syntax,
                            const DigitImage& image, LoopMode mode, std::size_t max_steps) {
  const std::string prefix = language::answer_prefix(syntax);
  if (prefix.empty()) throw ContractError("complete_answer: syntax has no answer word");
  return free_run(predictor, perception, prefix, image, max_steps, mode, '.').text('.');
}

double answer_accuracy(FramePredictor& predictor, const Perception& perception, const std::vector<Episode>& episodes,
                       LoopMode mode, std::size_t max_steps) {
  if (episodes.empty()) return kNaN;
  std::size_t correct = 0;
  for (const auto& ep : episodes) {
    const std::string answer = complete_answer(predictor, perception, ep.syntax, ep.frames.front().image, mode, max_steps);
    if (answer == expected_answer(ep)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(episodes.size());
}

DigitImage imagined_outcome(FramePredictor& predictor, const Perception& perception, const Episode& episode) {
  perception.require();
  const std::string sentence = episode.sentence();
  if (sentence.empty()) throw ContractError("imagined_outcome: episode without command symbols");
  predictor.reset();
  const auto latents = vision::encode(episode.frames.front().image, *perception.vision);
  language::IpsStream ips(*perception.ips);
  PfcOutput last;
  for (char ch : sentence) {
    const auto code = language::Alphabet::code_of(ch);
    last = predictor.step({code, ips.push(code), latents.v3, latents.v4});
  }
  return vision::decode(last.v3, *perception.vision);
}

SyntaxMetrics evaluate_syntax(const PfcModel& model, Syntax syntax, std::size_t n_episodes, const Perception& perception,
                              const curriculum::DigitPool& pool, std::uint64_t seed, const EvalOptions& options) {
  perception.require();
  Rng rng(seed);
  std::vector<Episode> episodes;
  episodes.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) episodes.push_back(curriculum::make_episode(syntax, pool, rng));

  PfcPredictor predictor(model);
  SyntaxMetrics m;
  m.syntax = syntax;
  m.episodes = n_episodes;
  m.completion_accuracy = kNaN;
  m.answer_accuracy = kNaN;
  m.image_mse = kNaN;
  m.image_correlation = kNaN;

  if (options.completions) {
    std::size_t hits = 0;
    for (const auto& ep : episodes) {
      for (const auto& probe : completion_probes(ep.sentence())) {
        const auto run = free_run(predictor, perception, probe.prefix, ep.frames.front().image, probe.expected.size(),
                                  options.mode);
        std::string produced;
        for (const auto& g : run.generated) produced.push_back(g.symbol);
        ++m.probes;
        if (produced == probe.expected) ++hits;
      }
    }
    if (m.probes) m.completion_accuracy = static_cast<double>(hits) / static_cast<double>(m.probes);
  }
  if (options.answers && has_answer(syntax)) {
    m.answer_accuracy = answer_accuracy(predictor, perception, episodes, options.mode, options.max_answer_steps);
  } else if (options.images && !has_answer(syntax) && !episodes.empty()) {
    double mse = 0.0, corr = 0.0;
    for (const auto& ep : episodes) {
      const DigitImage imagined = imagined_outcome(predictor, perception, ep);
      mse += mean_squared_error(imagined, ep.outcome());
      corr += pixel_correlation(imagined, ep.outcome());
    }
    m.image_mse = mse / static_cast<double>(episodes.size());
    m.image_correlation = corr / static_cast<double>(episodes.size());
  }
  return m;
}

}  // namespace lgi::pfc
