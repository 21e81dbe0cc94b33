#pragma once

#include <stdexcept>
#include <string>

namespace colorfuse {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition (non-scalar loss, missing gradient, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied data: images, dimensions, dataset entries.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed checkpoint, embedding or manifest file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace colorfuse
