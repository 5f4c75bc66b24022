// src/digest.cc

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

#include "unitdisc/digest.h"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "unitdisc/common.h"

namespace unitdisc {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (!ctx_ || EVP_DigestInit_ex(static_cast<EVP_MD_CTX *>(ctx_), EVP_sha256(), nullptr) != 1)
    throw InternalLogicError("SHA-256 initialization failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX *>(ctx_)); }

Sha256 &Sha256::Update(const std::string &bytes) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX *>(ctx_), bytes.data(), bytes.size()) != 1)
    throw InternalLogicError("SHA-256 update failed");
  return *this;
}

Sha256 &Sha256::UpdateFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  std::string buf(1 << 16, '\0');
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = is.gcount();
    if (got > 0) Update(buf.substr(0, static_cast<std::size_t>(got)));
  }
  return *this;
}

std::string Sha256::HexDigest() {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX *>(ctx_), md, &len) != 1)
    throw InternalLogicError("SHA-256 finalization failed");
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; i++) {
    std::snprintf(byte, sizeof(byte), "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

std::string Sha256Hex(const std::string &bytes) { return Sha256().Update(bytes).HexDigest(); }

std::string Sha256Files(const std::vector<std::string> &paths) {
  Sha256 h;
  for (const std::string &p : paths) {
    h.Update(std::to_string(std::filesystem::file_size(p)) + "\n");
    h.UpdateFile(p);
  }
  return h.HexDigest();
}

uint64_t StageSeed(uint64_t master, const std::string &stage) {
  const std::string hex = Sha256Hex(std::to_string(master) + "/" + stage);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace unitdisc
