#pragma once

#include <stdexcept>
#include <string>

namespace mblab {

// A computation produced a non-finite value. `where` names the operation.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace mblab
