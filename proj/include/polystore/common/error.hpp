#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace polystore {

enum class Errc {
  duplicate_name,
  schema_invariant,
  arity_mismatch,
  bad_literal,
  parse,
  unknown_object,
  unknown_column,
  length_mismatch,
  shape_mismatch,
  invalid_argument,
  unknown_island,
  untranslatable,
  density,
  type_incoercible,
  duplicate_dimension,
  no_viable_engine,
  plan_invariant,
  plan_divergence,
  execution,
  io,
};

std::string_view errc_name(Errc code);

/// Base of every error raised by the engines, the island layer and the
/// middleware. The code is stable and machine-readable; the message is not.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// A parse failure at a byte offset of the input (or a 1-based line for
/// line-oriented file formats).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(Errc::parse, message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Error while reading a line-oriented input; `line` is 1-based.
class LineError : public Error {
 public:
  LineError(Errc code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace polystore
