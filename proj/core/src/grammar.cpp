#include "lgi/grammar.hpp"

#include <algorithm>
#include <charconv>

#include "lgi/errors.hpp"

namespace lgi::language {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty() || s.size() > 3) return false;
  if (!std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
  if (s.size() > 1 && s.front() == '0') return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool consume(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  return true;
}

[[noreturn]] void reject(std::string_view text, const std::string& why) {
  throw GrammarError("'" + std::string(text) + "' is not a command sentence: " + why);
}

}  // namespace

Syntax syntax_from_id(int id) {
  if (id < 1 || id > kSyntaxCount) throw RangeError("syntax id " + std::to_string(id) + " outside 1..8");
  return static_cast<Syntax>(id);
}

std::string_view syntax_name(Syntax s) {
  switch (s) {
    case Syntax::move_left: return "move-left";
    case Syntax::move_right: return "move-right";
    case Syntax::this_is: return "this-is";
    case Syntax::size_is: return "size-is";
    case Syntax::size_is_not: return "size-is-not";
    case Syntax::give_me: return "give-me";
    case Syntax::resize: return "enlarge-shrink";
    case Syntax::rotate: return "rotate";
  }
  return "unknown";
}

std::string render(const Command& c) {
  switch (c.syntax) {
    case Syntax::move_left: return "move left " + std::to_string(c.number) + ".";
    case Syntax::move_right: return "move right " + std::to_string(c.number) + ".";
    case Syntax::this_is: return "this is " + std::to_string(c.number) + ".";
    case Syntax::size_is: return "the size is " + c.word + ".";
    case Syntax::size_is_not: return "the size is not " + c.word + ".";
    case Syntax::give_me: return "give me a " + std::to_string(c.number) + ".";
    case Syntax::resize: return c.word + ".";
    case Syntax::rotate: return "rotate " + std::to_string(c.number) + ".";
  }
  throw ContractError("render: unknown syntax");
}

Command parse_sentence(std::string_view text) {
  std::string_view s = text;
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  Command c;
  int n = 0;
  if (consume(s, "move left ") || consume(s, "move right ")) {
    c.syntax = text.substr(0, 10) == "move left " ? Syntax::move_left : Syntax::move_right;
    if (!parse_int(s, n) || n > kMaxMove) reject(text, "move distance must be 0..28");
    c.number = n;
  } else if (consume(s, "this is ")) {
    c.syntax = Syntax::this_is;
    if (s.size() != 1 || !parse_int(s, n)) reject(text, "expected a single digit");
    c.number = n;
  } else if (consume(s, "the size is not ")) {
    c.syntax = Syntax::size_is_not;
    if (s != "big" && s != "small") reject(text, "size word must be big or small");
    c.word = std::string(s);
  } else if (consume(s, "the size is ")) {
    c.syntax = Syntax::size_is;
    if (s != "big" && s != "small") reject(text, "size word must be big or small");
    c.word = std::string(s);
  } else if (consume(s, "give me a ")) {
    c.syntax = Syntax::give_me;
    if (s.size() != 1 || !parse_int(s, n)) reject(text, "expected a single digit");
    c.number = n;
  } else if (s == "enlarge" || s == "shrink") {
    c.syntax = Syntax::resize;
    c.word = std::string(s);
  } else if (consume(s, "rotate ")) {
    c.syntax = Syntax::rotate;
    if (!parse_int(s, n) || std::find(std::begin(kAngles), std::end(kAngles), n) == std::end(kAngles)) {
      reject(text, "angle must be 90, 180 or 270");
    }
    c.number = n;
  } else {
    reject(text, "unknown syntax");
  }
  return c;
}

std::vector<std::string> sentences_of(Syntax syntax) {
  std::vector<std::string> out;
  auto add = [&](Command c) { out.push_back(render(c)); };
  switch (syntax) {
    case Syntax::move_left:
    case Syntax::move_right:
      for (int n = 0; n <= kMaxMove; ++n) add({syntax, n, {}});
      break;
    case Syntax::this_is:
    case Syntax::give_me:
      for (int d = 0; d <= 9; ++d) add({syntax, d, {}});
      break;
    case Syntax::size_is:
    case Syntax::size_is_not:
      add({syntax, 0, "big"});
      add({syntax, 0, "small"});
      break;
    case Syntax::resize:
      add({syntax, 0, "enlarge"});
      add({syntax, 0, "shrink"});
      break;
    case Syntax::rotate:
      for (int a : kAngles) add({syntax, a, {}});
      break;
  }
  return out;
}

const std::vector<std::string>& all_sentences() {
  static const std::vector<std::string> sentences = [] {
    std::vector<std::string> out;
    for (int id = 1; id <= kSyntaxCount; ++id) {
      auto s = sentences_of(syntax_from_id(id));
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  }();
  return sentences;
}

bool is_sentence_prefix(std::string_view text) {
  const auto& all = all_sentences();
  return std::any_of(all.begin(), all.end(), [&](const std::string& s) { return s.starts_with(text); });
}

int digit_run_value(std::string_view text) {
  int value = 0;
  for (char ch : text) {
    if (ch >= '0' && ch <= '9') value = value * 10 + (ch - '0');
  }
  return value;
}

int quantity_oracle(std::string_view text) {
  (void)parse_sentence(text);
  return digit_run_value(text);
}

std::string answer_prefix(Syntax syntax) {
  switch (syntax) {
    case Syntax::this_is: return "this is ";
    case Syntax::size_is: return "the size is ";
    case Syntax::size_is_not: return "the size is not ";
    default: return {};
  }
}

}  // namespace lgi::language
