#pragma once

#include <stdexcept>

namespace vrfp {

// Caller passed arguments that cannot work (bad dimensions, out-of-range
// parameters, incompatible models). Maps to CLI exit code 2.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file is structurally broken: wrong magic, unsupported version, truncated
// payload, unparseable text. Maps to CLI exit code 3.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file or dataset parsed fine but carries unusable values (non-finite
// features, duplicate ids, empty bags). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vrfp
