// unitdisc/abx.h

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

#ifndef UNITDISC_ABX_H_
#define UNITDISC_ABX_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "unitdisc/common.h"
#include "unitdisc/corpus.h"

namespace unitdisc {

// 1 - cos(u, v); 1 when either vector is zero.
double CosineFrameDistance(const Vector &u, const Vector &v);

// DTW over rows (frames) with steps (1,0), (0,1), (1,1) and cosine frame
// cost; the minimum-cost path's total cost divided by its length.
double DtwDistance(const Matrix &a, const Matrix &b);

enum class AbxMode { kWithin, kAcross };
const char *AbxModeName(AbxMode mode);

struct SegmentRef {
  std::string utt_id;
  int begin = 0;  // frames [begin, end)
  int end = 0;
};

// A and B share a speaker and differ in phone; X has A's phone and either
// A's speaker (within, X != A) or another speaker (across).
struct AbxTriplet {
  SegmentRef a, b, x;
  int category_a = 0;
  int category_b = 0;
  std::string speaker_ab;
  std::string speaker_x;
};

struct AbxTask {
  AbxMode mode = AbxMode::kWithin;
  std::vector<AbxTriplet> triplets;
  int64_t total_triplets = 0;  // before subsampling
};

// Phone segments are maximal runs of one ground-truth label that are at least
// `min_span` frames long. All valid triplets are enumerated implicitly and
// `max_triplets` of them are drawn uniformly without replacement (all of
// them when there are fewer).
AbxTask BuildAbxTask(const Corpus &corpus, AbxMode mode, int64_t max_triplets,
                     uint64_t seed, int min_span = 3);

// Frame features per utterance id, rows are frames.
using FeatureMap = std::map<std::string, Matrix>;

struct AbxCell {
  double error_sum = 0.0;  // ties count 0.5
  int64_t count = 0;
  double Rate() const { return count ? 100.0 * error_sum / static_cast<double>(count) : 0.0; }
};

struct AbxScore {
  // Keyed by unordered phone pair (smaller id first).
  std::map<std::pair<int, int>, AbxCell> cells;
  double error_rate = 0.0;  // percent, macro-averaged over cells
  int64_t num_triplets = 0;
};

AbxScore ScoreAbx(const FeatureMap &features, const AbxTask &task);

struct AbxSettings {
  int64_t max_triplets = 20000;
  int min_span = 3;
  uint64_t seed = 0;
};

struct AbxReport {
  AbxScore within, across;
  double error_rate_within() const { return within.error_rate; }
  double error_rate_across() const { return across.error_rate; }
};

// Both modes on one representation.
AbxReport EvaluateAbx(const Corpus &corpus, const FeatureMap &features,
                      const AbxSettings &settings);

// "key: value" header lines, then one line per phone pair.
void WriteAbxReport(std::ostream &os, const AbxReport &report, const std::string &name);
// pair,within_err,across_err,count
void WriteAbxCsv(std::ostream &os, const AbxReport &report);

// Corpus frames keyed by utterance id.
FeatureMap CorpusFeatures(const Corpus &corpus);
// One-hot rows over n_units classes.
Matrix OneHotFrames(const std::vector<int> &labels, int n_units);

}  // namespace unitdisc

#endif  // UNITDISC_ABX_H_
