// unitdisc/feature-io.h

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

#ifndef UNITDISC_FEATURE_IO_H_
#define UNITDISC_FEATURE_IO_H_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "unitdisc/common.h"
#include "unitdisc/corpus.h"

namespace unitdisc {

struct FeatureEntry {
  std::string id;
  std::string speaker;
  Matrix frames;  // n_frames x dim
};

// "FEA1" archive: little-endian, magic, u32 count, then per entry u16-length
// id, u16-length speaker, u32 n_frames, u32 dim and row-major f32 data.
void WriteFeatureArchive(std::ostream &os, const std::vector<FeatureEntry> &entries);
std::vector<FeatureEntry> ReadFeatureArchive(std::istream &is);
void WriteFeatureArchive(const std::string &path,
                         const std::vector<FeatureEntry> &entries);
std::vector<FeatureEntry> ReadFeatureArchive(const std::string &path);

std::vector<FeatureEntry> CorpusToEntries(const Corpus &corpus);

// Text label file, one line per utterance: "utt_id<TAB>l0 l1 l2 ...".
// The same layout is used for unit transcriptions.
using LabelTable = std::vector<std::pair<std::string, std::vector<int>>>;
void WriteLabelFile(std::ostream &os, const LabelTable &labels);
LabelTable ReadLabelFile(std::istream &is);
void WriteLabelFile(const std::string &path, const LabelTable &labels);
LabelTable ReadLabelFile(const std::string &path);

// Builds a labeled corpus from an archive plus optional phone labels.
Corpus EntriesToCorpus(const std::vector<FeatureEntry> &entries,
                       const LabelTable *labels = nullptr);

// Little-endian primitives shared by the checkpoint formats.
namespace binio {
void WriteU8(std::ostream &os, uint8_t v);
void WriteU16(std::ostream &os, uint16_t v);
void WriteU32(std::ostream &os, uint32_t v);
void WriteF32(std::ostream &os, float v);
void WriteString16(std::ostream &os, const std::string &s);
void WriteMagic(std::ostream &os, const char *magic);
uint8_t ReadU8(std::istream &is);
uint16_t ReadU16(std::istream &is);
uint32_t ReadU32(std::istream &is);
float ReadF32(std::istream &is);
std::string ReadString16(std::istream &is);
void ExpectMagic(std::istream &is, const char *magic);
// Returns the next four bytes without consuming them; empty at EOF.
std::string PeekMagic(std::istream &is);
}  // namespace binio

}  // namespace unitdisc

#endif  // UNITDISC_FEATURE_IO_H_
