#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace selpack {

using SampleId = std::int64_t;

// Bad or missing input data (files, records, parameters). CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A contract broken mid-computation on data that already passed input checks.
// CLI maps this to exit code 3.
class InvariantError : public std::runtime_error {
public:
  explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace selpack
