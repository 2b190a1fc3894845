#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lgi::language {

/// The eight command syntaxes, numbered in curriculum order.
enum class Syntax : int {
  move_left = 1,
  move_right = 2,
  this_is = 3,
  size_is = 4,
  size_is_not = 5,
  give_me = 6,
  resize = 7,
  rotate = 8,
};

inline constexpr int kSyntaxCount = 8;

Syntax syntax_from_id(int id);
inline int syntax_id(Syntax s) { return static_cast<int>(s); }
std::string_view syntax_name(Syntax s);

inline constexpr int kMaxMove = 28;
inline constexpr int kAngles[3] = {90, 180, 270};

/// A parsed sentence. `number` is the move distance, digit or angle;
/// `word` is the size or resize word when the syntax has one.
struct Command {
  Syntax syntax = Syntax::move_left;
  int number = 0;
  std::string word;

  bool operator==(const Command&) const = default;
};

/// Canonical sentence text, lowercase and '.'-terminated.
std::string render(const Command& command);

/// Parses a full sentence; the trailing '.' is optional. Throws GrammarError.
Command parse_sentence(std::string_view text);

/// Every sentence the grammar can produce for the given syntax.
std::vector<std::string> sentences_of(Syntax syntax);
/// Every sentence of all eight syntaxes.
const std::vector<std::string>& all_sentences();

/// True when `text` is a (possibly empty) prefix of some grammar sentence.
bool is_sentence_prefix(std::string_view text);

/// Integer value of the concatenated digits in `text`; 0 when there are none.
int digit_run_value(std::string_view text);

/// Number carried by a grammar sentence (0 when it has no digits). Throws GrammarError.
int quantity_oracle(std::string_view text);

/// Prefix preceding the answer word for syntaxes that end in an answer
/// ("this is ", "the size is ", "the size is not "); empty otherwise.
std::string answer_prefix(Syntax syntax);

}  // namespace lgi::language
