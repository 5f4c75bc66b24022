// unitdisc/common.h

// Copyright 2026  The unitdisc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef UNITDISC_COMMON_H_
#define UNITDISC_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace unitdisc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad argument, bad configuration or violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string &what) : std::invalid_argument(what) {}
};

// Reference to an id (sequence, utterance) that is not known.
class LookupError : public std::out_of_range {
 public:
  explicit LookupError(const std::string &what) : std::out_of_range(what) {}
};

// Internal bookkeeping went wrong (e.g. count underflow).
class InternalLogicError : public std::logic_error {
 public:
  explicit InternalLogicError(const std::string &what) : std::logic_error(what) {}
};

// Malformed or truncated file.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string &what) : std::runtime_error(what) {}
};

// Mixes a seed with a stream index; used wherever independent
// reproducible RNG streams are needed.
inline uint64_t MixSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace unitdisc

#endif  // UNITDISC_COMMON_H_
