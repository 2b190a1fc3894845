#include "lgi/language.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lgi/errors.hpp"

namespace lgi {

std::string CodecError::describe(char symbol, std::size_t position) {
  const auto byte = static_cast<unsigned>(static_cast<unsigned char>(symbol));
  std::string shown = (byte >= 0x20 && byte < 0x7F) ? std::string("'") + symbol + "'" : "byte " + std::to_string(byte);
  return "symbol " + shown + " at position " + std::to_string(position) + " is not in the alphabet";
}

}  // namespace lgi

namespace lgi::language {

namespace {

constexpr std::array<char, Alphabet::kSize> make_symbols() {
  std::array<char, Alphabet::kSize> s{};
  std::size_t i = 0;
  for (char c = 'a'; c <= 'z'; ++c) s[i++] = c;
  for (char c = '0'; c <= '9'; ++c) s[i++] = c;
  s[i++] = ' ';
  s[i++] = '.';
  s[i++] = kPad;
  return s;
}

constexpr auto kSymbols = make_symbols();

}  // namespace

bool Alphabet::contains(char symbol) noexcept {
  return (symbol >= 'a' && symbol <= 'z') || (symbol >= '0' && symbol <= '9') || symbol == ' ' || symbol == '.' ||
         symbol == kPad;
}

const std::array<char, Alphabet::kSize>& Alphabet::symbols() noexcept { return kSymbols; }

std::uint8_t Alphabet::byte_of(char symbol) {
  if (!contains(symbol)) throw CodecError(symbol, 0);
  return static_cast<std::uint8_t>(symbol);
}

SymbolCode Alphabet::code_of(char symbol) {
  const std::uint8_t byte = byte_of(symbol);
  SymbolCode code{};
  for (std::size_t bit = 0; bit < kCodeBits; ++bit) code[bit] = static_cast<float>((byte >> (7 - bit)) & 1U);
  return code;
}

std::string Alphabet::display(char symbol) {
  if (symbol == kPad) return "pad";
  if (symbol == ' ') return "space";
  return std::string(1, symbol);
}

bool is_strict(const SymbolCode& code) noexcept {
  return std::all_of(code.begin(), code.end(), [](float v) { return v == 0.0f || v == 1.0f; });
}

std::uint8_t code_to_byte(const SymbolCode& code) noexcept {
  std::uint8_t byte = 0;
  for (std::size_t bit = 0; bit < kCodeBits; ++bit) {
    if (code[bit] >= 0.5f) byte |= static_cast<std::uint8_t>(1U << (7 - bit));
  }
  return byte;
}

SymbolCode binarize(char symbol) { return Alphabet::code_of(symbol); }

std::vector<SymbolCode> binarize(std::string_view text) {
  validate_text(text);
  std::vector<SymbolCode> codes;
  codes.reserve(text.size());
  for (char ch : text) codes.push_back(Alphabet::code_of(ch));
  return codes;
}

char textize(const SymbolCode& code) noexcept {
  const auto symbol = static_cast<char>(code_to_byte(code));
  return Alphabet::contains(symbol) ? symbol : kFallback;
}

std::string textize(const std::vector<SymbolCode>& codes) {
  std::string out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(textize(c));
  return out;
}

void validate_text(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!Alphabet::contains(text[i])) throw CodecError(text[i], i);
  }
}

// ---------------------------------------------------------------------------
// IPS

IpsModel IpsModel::init(const IpsConfig& config, Rng& rng) {
  IpsModel m;
  m.lstm_ = LstmLayer::init(kCodeBits, config.hidden, rng);
  m.head_ = FcLayer::init(config.hidden, 1, Activation::identity, rng);
  return m;
}

ParamList IpsModel::params() const {
  ParamList out;
  lstm_.append_params(out, "ips.lstm");
  head_.append_params(out, "ips.head");
  return out;
}

std::vector<Tensor> IpsModel::forward_sequence(const std::vector<Tensor>& inputs) const {
  if (inputs.empty()) throw ContractError("ips: empty symbol sequence");
  LstmState state = lstm_.zero_state(inputs.front().dim(0));
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    state = lstm_step(x, state, lstm_);
    out.push_back(fc_forward(state.h, head_));
  }
  return out;
}

IpsStream::IpsStream(const IpsModel& model) : model_(&model), state_(model.lstm().zero_state()) {}

float IpsStream::push(const SymbolCode& code) {
  NoGradGuard no_grad;
  const Tensor x = Tensor::from({kCodeBits}, std::vector<float>(code.begin(), code.end()));
  state_ = lstm_step(x, state_, model_->lstm());
  return fc_forward(state_.h, model_->head()).item();
}

void IpsStream::reset() { state_ = model_->lstm().zero_state(); }

std::vector<float> ips_forward(const std::vector<SymbolCode>& codes, const IpsModel& model) {
  if (codes.empty()) throw ContractError("ips_forward: empty symbol sequence");
  IpsStream stream(model);
  std::vector<float> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(stream.push(c));
  return out;
}

std::vector<QuantityExample> sample_quantity_examples(std::size_t count, float prefix_probability, Rng& rng) {
  // Half the draws are uniform over syntaxes so that short grammars are not
  // drowned out by the 58 move sentences; the other half are uniform over
  // sentences so every move distance is seen often.
  const auto& everything = all_sentences();
  std::vector<QuantityExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string text;
    if (rng.bernoulli(0.5f)) {
      const auto group = sentences_of(syntax_from_id(rng.uniform_int(1, kSyntaxCount)));
      text = group[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(group.size()) - 1))];
    } else {
      text = everything[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(everything.size()) - 1))];
    }
    if (rng.bernoulli(prefix_probability)) {
      text.resize(static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(text.size()))));
    }
    out.push_back({text, digit_run_value(text)});
  }
  return out;
}

namespace {

struct IpsBatch {
  std::vector<Tensor> inputs;                 // per step [B x 8]
  std::vector<Tensor> targets;                // per step [B x 1]
  std::vector<std::vector<float>> weights;    // per step, per row
};

IpsBatch make_batch(const std::vector<const QuantityExample*>& batch) {
  std::size_t steps = 0;
  for (const auto* ex : batch) steps = std::max(steps, ex->text.size());
  const std::size_t b = batch.size();
  IpsBatch out;
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<float> x(b * kCodeBits, 0.0f), y(b, 0.0f), w(b, 0.0f);
    for (std::size_t i = 0; i < b; ++i) {
      const auto& text = batch[i]->text;
      if (t < text.size()) {
        const auto code = Alphabet::code_of(text[t]);
        std::copy(code.begin(), code.end(), x.begin() + static_cast<std::ptrdiff_t>(i * kCodeBits));
      }
      if (t + 1 == text.size()) {
        y[i] = static_cast<float>(batch[i]->number) / kQuantityScale;
        w[i] = 1.0f / static_cast<float>(b);
      }
    }
    out.inputs.push_back(Tensor::from({b, kCodeBits}, std::move(x)));
    out.targets.push_back(Tensor::from({b, 1}, std::move(y)));
    out.weights.push_back(std::move(w));
  }
  return out;
}

template <typename NextBatch>
IpsModel train_loop(const IpsTrainConfig& config, IpsMetrics* metrics, NextBatch next_batch) {
  Rng rng(config.seed);
  IpsModel model = IpsModel::init(config.model, rng);
  auto params = tensors_of(model.params());
  auto state = OptimizerState::for_params(params, config.adam);
  IpsMetrics local;
  for (std::size_t step = 0; step < config.steps; ++step) {
    const auto batch = make_batch(next_batch(rng));
    const auto outputs = model.forward_sequence(batch.inputs);
    Tensor loss;
    for (std::size_t t = 0; t < outputs.size(); ++t) {
      if (std::all_of(batch.weights[t].begin(), batch.weights[t].end(), [](float w) { return w == 0.0f; })) continue;
      Tensor term = weighted_square_sum(outputs[t] - batch.targets[t], batch.weights[t]);
      loss = loss.defined() ? loss + term : term;
    }
    zero_grads(params);
    loss.backward();
    const double progress = static_cast<double>(step) / static_cast<double>(config.steps);
    const double fraction = config.final_lr_fraction + (1.0 - config.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    state.config.learning_rate = static_cast<float>(config.adam.learning_rate * fraction);
    adam_step(params, state);
    local.final_loss = loss.item();
    if (config.log_every && (step % config.log_every == 0 || step + 1 == config.steps)) {
      local.loss_curve.emplace_back(step, loss.item());
    }
  }
  model.freeze();
  if (metrics) *metrics = std::move(local);
  return model;
}

}  // namespace

IpsModel train_ips(const std::vector<QuantityExample>& examples, const IpsTrainConfig& config, IpsMetrics* metrics) {
  if (examples.empty()) throw ConfigError("train_ips: no training examples");
  if (config.batch == 0) throw ConfigError("train_ips: batch size must be positive");
  for (const auto& ex : examples) {
    if (ex.text.empty()) throw ConfigError("train_ips: empty training text");
    validate_text(ex.text);
  }
  return train_loop(config, metrics, [&](Rng& rng) {
    std::vector<const QuantityExample*> batch;
    for (std::size_t i = 0; i < config.batch; ++i) {
      batch.push_back(&examples[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(examples.size()) - 1))]);
    }
    return batch;
  });
}

IpsModel train_ips(const IpsTrainConfig& config, IpsMetrics* metrics) {
  if (config.batch == 0) throw ConfigError("train_ips: batch size must be positive");
  std::vector<QuantityExample> buffer;
  return train_loop(config, metrics, [&](Rng& rng) {
    buffer = sample_quantity_examples(config.batch, config.prefix_probability, rng);
    std::vector<const QuantityExample*> batch;
    for (const auto& ex : buffer) batch.push_back(&ex);
    return batch;
  });
}

double ips_exact_rate(const IpsModel& model, const std::vector<QuantityExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t exact = 0;
  for (const auto& ex : examples) {
    const auto q = ips_forward(binarize(ex.text), model);
    if (std::abs(q.back() * kQuantityScale - static_cast<float>(ex.number)) < 0.5f) ++exact;
  }
  return static_cast<double>(exact) / static_cast<double>(examples.size());
}

}  // namespace lgi::language
