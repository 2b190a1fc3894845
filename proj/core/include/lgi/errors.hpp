#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lgi {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside its supported range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A sentence does not conform to the command grammar.
class GrammarError : public Error {
 public:
  using Error::Error;
};

/// Symbol outside the alphabet.
class CodecError : public Error {
 public:
  CodecError(char symbol, std::size_t position)
      : Error(describe(symbol, position)), symbol_(symbol), position_(position) {}

  char symbol() const noexcept { return symbol_; }
  std::size_t position() const noexcept { return position_; }

 private:
  static std::string describe(char symbol, std::size_t position);

  char symbol_;
  std::size_t position_;
};

/// Malformed binary file. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Two files that must agree (e.g. IDX images and labels) do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgi
