#pragma once

#include <stdexcept>
#include <string>

namespace actionlm {

// Exception taxonomy. Every failure the library reports derives from Error,
// so callers (and the CLI) can catch one type at the boundary.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NetworkError : Error {
  using Error::Error;
};
struct NotFoundError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct RangeError : Error {
  using Error::Error;
};
struct LookupError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct StateError : Error {
  using Error::Error;
};

}  // namespace actionlm
