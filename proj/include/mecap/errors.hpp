#pragma once

#include <stdexcept>
#include <string>

namespace mecap {

// Invalid domain values or configuration; message carries the field path.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Lookup of a name that is not in a catalog.
class LookupError : public std::runtime_error {
 public:
  explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

// Syntactically broken input (config file, trace file); message carries
// file/line context.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A failure raised while dispatching simulation events, wrapped with the
// event kind and timestamp.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem trouble while writing outputs; message carries the path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mecap
