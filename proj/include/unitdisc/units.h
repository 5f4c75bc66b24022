// unitdisc/units.h

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

#ifndef UNITDISC_UNITS_H_
#define UNITDISC_UNITS_H_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "unitdisc/common.h"

namespace unitdisc {

// A posteriorgram is a Matrix with one probability row per frame.

// Throws ParameterError unless entries are >= 0 and rows sum to 1 within tol.
void CheckPosteriorgram(const Matrix &pg, double tol = 1e-6);

// Per-frame argmax; ties go to the smallest index.
std::vector<int> FrameArgmax(const Matrix &pg);

struct UnitSequence {
  std::vector<int> symbols;
  // [begin, end) frame ranges, one per symbol; empty when unknown.
  std::vector<std::pair<int, int>> frame_spans;
  double duration_seconds = 0.0;

  int Size() const { return static_cast<int>(symbols.size()); }
};

// Maximal runs become single symbols. frame_rate > 0 sets the duration.
UnitSequence CollapseRepeats(const std::vector<int> &labels, double frame_rate = 0.0);

// Combination of the last two boundary flags in the smoothing condition.
enum class SmoothRule { kOr, kXor };

// Boundary-flag smoothing: flags start true at each label change (and at the
// first frame); while scanning i = 5..N (1-based), b[i-4] is cleared when
// b[i-4], b[i-3], b[i-2] are set and rule(b[i-1], b[i]) holds. Returns the
// flags.
std::vector<bool> SmoothBoundaries(const std::vector<int> &labels,
                                   SmoothRule rule = SmoothRule::kOr);

// The labels at the surviving flagged positions.
std::vector<int> SmoothUnits(const std::vector<int> &labels,
                             SmoothRule rule = SmoothRule::kOr);

// Smoothed transcription: each surviving flag opens a span running to the
// next one (frames before the first flag join the first span), then equal
// neighbours are merged.
UnitSequence SmoothedTranscription(const std::vector<int> &labels, double frame_rate,
                                   SmoothRule rule = SmoothRule::kOr);

// Unigram entropy rate: sum over all symbols of -log2 p(s), divided by the
// total duration, with p estimated over the whole document.
double Bitrate(const std::vector<UnitSequence> &sequences);

// Per-frame labels spelled back out from spans. Requires spans.
std::vector<int> ExpandToFrames(const UnitSequence &seq);

using Transcription = std::vector<std::pair<std::string, UnitSequence>>;

// `utt_id<TAB>space-separated unit ids` per line.
void WriteTranscription(std::ostream &os, const Transcription &t);
// Symbols only; spans and durations are not stored.
Transcription ReadTranscription(std::istream &is);

}  // namespace unitdisc

#endif  // UNITDISC_UNITS_H_
