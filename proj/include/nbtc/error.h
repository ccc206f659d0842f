#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nbtc {

/// Bad user input: malformed image set, unsupported dimensions, bad flags.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural error while parsing a binary payload. Carries the byte offset
/// at which parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Loss or a parameter group became non-finite during training.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int step, const std::string& group)
      : std::runtime_error("training diverged at step " + std::to_string(step) +
                           " (parameter group: " + group + ")"),
        step_(step),
        group_(group) {}

  int step() const noexcept { return step_; }
  const std::string& group() const noexcept { return group_; }

 private:
  int step_;
  std::string group_;
};

}  // namespace nbtc
