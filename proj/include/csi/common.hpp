#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace csi {

using NodeId = std::string;
using LocationId = std::string;
using Timestamp = std::int64_t;  // seconds since trace epoch

inline constexpr Timestamp kSecondsPerDay = 86400;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Stable seed derivation: every component draws from the top-level seed via
// its name, so partial reruns reproduce. FNV-1a over the name, mixed with
// the seed through splitmix64 finalization.
std::uint64_t derive_seed(std::uint64_t root_seed, const std::string& component);

}  // namespace csi
