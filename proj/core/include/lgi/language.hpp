#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lgi/grammar.hpp"
#include "lgi/layers.hpp"
#include "lgi/optim.hpp"

namespace lgi::language {

inline constexpr std::size_t kCodeBits = 8;
inline constexpr char kPad = '\0';
inline constexpr char kFallback = '?';

/// Eight code bits, most significant first. Strict codes hold only 0 and 1.
using SymbolCode = std::array<float, kCodeBits>;

/// 'a'-'z', '0'-'9', space, '.', and pad. Each symbol's code is its 7-bit
/// character code zero-extended to a byte; pad is 0x00.
class Alphabet {
 public:
  static constexpr std::size_t kSize = 39;

  static bool contains(char symbol) noexcept;
  static const std::array<char, kSize>& symbols() noexcept;
  static std::uint8_t byte_of(char symbol);
  static SymbolCode code_of(char symbol);
  /// Printable description of a symbol ("pad" for the pad symbol).
  static std::string display(char symbol);
};

bool is_strict(const SymbolCode& code) noexcept;
std::uint8_t code_to_byte(const SymbolCode& code) noexcept;

/// One strict code per symbol. Throws CodecError naming the first symbol
/// outside the alphabet.
std::vector<SymbolCode> binarize(std::string_view text);
SymbolCode binarize(char symbol);

/// Rounds each entry (>= 0.5 becomes 1) and maps the byte back to a symbol;
/// bytes outside the alphabet map to '?'.
char textize(const SymbolCode& code) noexcept;
std::string textize(const std::vector<SymbolCode>& codes);

/// Throws CodecError if any symbol is outside the alphabet.
void validate_text(std::string_view text);

/// Quantities are carried as number / 100.
inline constexpr float kQuantityScale = 100.0f;

struct IpsConfig {
  std::size_t hidden = 32;
};

/// Quantity extractor: LSTM over symbol codes with a linear scalar head.
class IpsModel {
 public:
  IpsModel() = default;
  static IpsModel init(const IpsConfig& config, Rng& rng);

  ParamList params() const;
  std::size_t hidden() const { return lstm_.hidden_size(); }

  const LstmLayer& lstm() const { return lstm_; }
  const FcLayer& head() const { return head_; }

  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  /// Batched forward with gradient recording. `inputs[t]` is [batch x 8];
  /// returns one [batch x 1] quantity tensor per step.
  std::vector<Tensor> forward_sequence(const std::vector<Tensor>& inputs) const;

 private:
  LstmLayer lstm_;
  FcLayer head_;
  bool frozen_ = false;
};

/// Incremental evaluation, one symbol at a time.
class IpsStream {
 public:
  explicit IpsStream(const IpsModel& model);
  float push(const SymbolCode& code);
  void reset();

 private:
  const IpsModel* model_;
  LstmState state_;
};

/// Quantity after each symbol (number / 100). ContractError on empty input.
std::vector<float> ips_forward(const std::vector<SymbolCode>& codes, const IpsModel& model);

struct IpsTrainConfig {
  IpsConfig model;
  std::size_t steps = 12000;
  std::size_t batch = 64;
  AdamConfig adam{.learning_rate = 3e-3f, .clip_norm = 1.0f};
  std::uint64_t seed = 1;
  /// Probability of training on a random sentence prefix instead of a full sentence.
  float prefix_probability = 0.5f;
  /// Cosine decay of the learning rate down to this fraction of its start.
  float final_lr_fraction = 0.02f;
  std::size_t log_every = 250;
};

struct IpsMetrics {
  std::vector<std::pair<std::size_t, float>> loss_curve;
  float final_loss = 0.0f;
  double exact_rate = 0.0;
};

/// A labelled text: the sentence (or prefix) and its number.
struct QuantityExample {
  std::string text;
  int number = 0;
};

/// Random grammar sentences and prefixes labelled by the quantity oracle.
std::vector<QuantityExample> sample_quantity_examples(std::size_t count, float prefix_probability, Rng& rng);

IpsModel train_ips(const std::vector<QuantityExample>& examples, const IpsTrainConfig& config, IpsMetrics* metrics = nullptr);
/// Trains on freshly sampled grammar sentences.
IpsModel train_ips(const IpsTrainConfig& config, IpsMetrics* metrics = nullptr);

/// Fraction of examples whose final quantity satisfies |100 q - n| < 0.5.
double ips_exact_rate(const IpsModel& model, const std::vector<QuantityExample>& examples);

}  // namespace lgi::language
