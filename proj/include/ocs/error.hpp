#pragma once

#include <stdexcept>
#include <string>

namespace ocs {

/// Raised for invalid data, incompatible inputs and failed numerical preconditions.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace ocs
