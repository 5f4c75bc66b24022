// unitdisc/digest.h

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

#ifndef UNITDISC_DIGEST_H_
#define UNITDISC_DIGEST_H_

#include <cstdint>
#include <string>
#include <vector>

namespace unitdisc {

// Incremental SHA-256, hex output.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256 &) = delete;
  Sha256 &operator=(const Sha256 &) = delete;

  Sha256 &Update(const std::string &bytes);
  Sha256 &UpdateFile(const std::string &path);
  std::string HexDigest();

 private:
  void *ctx_;
};

std::string Sha256Hex(const std::string &bytes);
// Digest over the concatenated contents of `paths`, each prefixed by its
// size so that boundaries are unambiguous.
std::string Sha256Files(const std::vector<std::string> &paths);

// Per-stage seed from the master seed and a stage name.
uint64_t StageSeed(uint64_t master, const std::string &stage);

}  // namespace unitdisc

#endif  // UNITDISC_DIGEST_H_
