#pragma once

#include <stdexcept>
#include <string>

namespace viewconsist {

// Raised when arguments violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an object is used before it has been set up (e.g. adapting
// without initialized latents).
class InvalidState : public std::logic_error {
 public:
  explicit InvalidState(const std::string& what) : std::logic_error(what) {}
};

}  // namespace viewconsist
