// src/feature-io.cc

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

#include "unitdisc/feature-io.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace unitdisc {

namespace binio {

void WriteU8(std::ostream &os, uint8_t v) { os.put(static_cast<char>(v)); }

void WriteU16(std::ostream &os, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void WriteU32(std::ostream &os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; i++) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void WriteF32(std::ostream &os, float v) {
  uint32_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(v));
  WriteU32(os, bits);
}

void WriteString16(std::ostream &os, const std::string &s) {
  if (s.size() > std::numeric_limits<uint16_t>::max())
    throw ParameterError("string too long for u16 length prefix");
  WriteU16(os, static_cast<uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void WriteMagic(std::ostream &os, const char *magic) { os.write(magic, 4); }

namespace {
void ReadBytes(std::istream &is, char *buf, std::size_t n) {
  is.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw FormatError("unexpected end of file");
}
}  // namespace

uint8_t ReadU8(std::istream &is) {
  char b;
  ReadBytes(is, &b, 1);
  return static_cast<uint8_t>(b);
}

uint16_t ReadU16(std::istream &is) {
  unsigned char b[2];
  ReadBytes(is, reinterpret_cast<char *>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t ReadU32(std::istream &is) {
  unsigned char b[4];
  ReadBytes(is, reinterpret_cast<char *>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float ReadF32(std::istream &is) {
  uint32_t bits = ReadU32(is);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::string ReadString16(std::istream &is) {
  uint16_t n = ReadU16(is);
  std::string s(n, '\0');
  if (n > 0) ReadBytes(is, s.data(), n);
  return s;
}

void ExpectMagic(std::istream &is, const char *magic) {
  char b[4];
  ReadBytes(is, b, 4);
  if (std::string(b, 4) != std::string(magic, 4))
    throw FormatError(std::string("bad magic, expected ") + std::string(magic, 4));
}

std::string PeekMagic(std::istream &is) {
  std::string out;
  auto pos = is.tellg();
  char b[4];
  is.read(b, 4);
  if (is.gcount() == 4) out.assign(b, 4);
  is.clear();
  is.seekg(pos);
  return out;
}

}  // namespace binio

using namespace binio;

void WriteFeatureArchive(std::ostream &os, const std::vector<FeatureEntry> &entries) {
  WriteMagic(os, "FEA1");
  WriteU32(os, static_cast<uint32_t>(entries.size()));
  for (const FeatureEntry &e : entries) {
    WriteString16(os, e.id);
    WriteString16(os, e.speaker);
    WriteU32(os, static_cast<uint32_t>(e.frames.rows()));
    WriteU32(os, static_cast<uint32_t>(e.frames.cols()));
    for (Eigen::Index t = 0; t < e.frames.rows(); t++)
      for (Eigen::Index d = 0; d < e.frames.cols(); d++)
        WriteF32(os, static_cast<float>(e.frames(t, d)));
  }
  if (!os) throw FormatError("write failed");
}

std::vector<FeatureEntry> ReadFeatureArchive(std::istream &is) {
  ExpectMagic(is, "FEA1");
  uint32_t count = ReadU32(is);
  std::vector<FeatureEntry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; i++) {
    FeatureEntry e;
    e.id = ReadString16(is);
    e.speaker = ReadString16(is);
    uint32_t rows = ReadU32(is), cols = ReadU32(is);
    e.frames.resize(rows, cols);
    for (uint32_t t = 0; t < rows; t++)
      for (uint32_t d = 0; d < cols; d++) e.frames(t, d) = ReadF32(is);
    entries.push_back(std::move(e));
  }
  return entries;
}

void WriteFeatureArchive(const std::string &path,
                         const std::vector<FeatureEntry> &entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  WriteFeatureArchive(os, entries);
}

std::vector<FeatureEntry> ReadFeatureArchive(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return ReadFeatureArchive(is);
}

std::vector<FeatureEntry> CorpusToEntries(const Corpus &corpus) {
  std::vector<FeatureEntry> out;
  for (const Utterance &u : corpus.utterances)
    out.push_back({u.utt_id, u.speaker_id, u.frames});
  return out;
}

void WriteLabelFile(std::ostream &os, const LabelTable &labels) {
  for (const auto &[id, seq] : labels) {
    os << id << '\t';
    for (std::size_t i = 0; i < seq.size(); i++) os << (i ? " " : "") << seq[i];
    os << '\n';
  }
  if (!os) throw FormatError("write failed");
}

LabelTable ReadLabelFile(std::istream &is) {
  LabelTable out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("label line without tab: " + line);
    std::vector<int> seq;
    std::istringstream ss(line.substr(tab + 1));
    int v;
    while (ss >> v) seq.push_back(v);
    if (!ss.eof()) throw FormatError("non-integer label in line: " + line);
    out.emplace_back(line.substr(0, tab), std::move(seq));
  }
  return out;
}

void WriteLabelFile(const std::string &path, const LabelTable &labels) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  WriteLabelFile(os, labels);
}

LabelTable ReadLabelFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return ReadLabelFile(is);
}

Corpus EntriesToCorpus(const std::vector<FeatureEntry> &entries,
                       const LabelTable *labels) {
  Corpus corpus;
  std::map<std::string, const std::vector<int> *> by_id;
  if (labels)
    for (const auto &[id, seq] : *labels) by_id[id] = &seq;
  for (const FeatureEntry &e : entries) {
    Utterance u;
    u.utt_id = e.id;
    u.speaker_id = e.speaker;
    u.frames = e.frames;
    if (labels) {
      auto it = by_id.find(e.id);
      if (it == by_id.end()) throw LookupError("no labels for utterance " + e.id);
      u.phone_labels = *it->second;
    }
    if (std::find(corpus.speakers.begin(), corpus.speakers.end(), e.speaker) ==
        corpus.speakers.end())
      corpus.speakers.push_back(e.speaker);
    corpus.utterances.push_back(std::move(u));
  }
  corpus.Check();
  return corpus;
}

}  // namespace unitdisc
