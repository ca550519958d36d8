#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hp1 {

enum class Errc {
  InvalidArgument = 1,
  StepTooLarge = 2,
  Io = 3,
  Logic = 4,
  Internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by a parallel dispatch; carries the index of the first failing particle.
class ParticleError : public Error {
 public:
  ParticleError(Errc code, std::int64_t index, const std::string& what)
      : Error(code, "particle " + std::to_string(index) + ": " + what), index_(index) {}
  std::int64_t index() const noexcept { return index_; }

 private:
  std::int64_t index_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(Errc::InvalidArgument, what);
}

}  // namespace hp1
