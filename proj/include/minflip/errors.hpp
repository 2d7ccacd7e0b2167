#pragma once

#include <stdexcept>
#include <string>

namespace minflip {

// Bad user input: malformed files, invalid configuration, violated
// preconditions. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Shape/consistency problems between otherwise well-formed objects
// (dimension mismatches, broken layer chains).
class StructuralError : public ValidationError {
 public:
  explicit StructuralError(const std::string& what) : ValidationError(what) {}
};

}  // namespace minflip
