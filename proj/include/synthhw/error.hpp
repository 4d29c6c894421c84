#pragma once

#include <stdexcept>
#include <string>

namespace synthhw {

enum class ErrorKind {
  Precondition,
  DimensionMismatch,
  EmptyImage,
  OutOfBounds,
  MissingGlyph,
  FontLoad,
  Io,
  Parse,
  InsufficientData,
  DegenerateLabels,
  EmptySequence,
  NoValidPath,
  MissingCharacterModel,
  EmptyCorpus,
  ImageTooNarrow,
  LengthMismatch,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace synthhw
