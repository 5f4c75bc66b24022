// unitdisc/corpus.h

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

#ifndef UNITDISC_CORPUS_H_
#define UNITDISC_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "unitdisc/common.h"

namespace unitdisc {

// Parameters of the synthetic multi-speaker corpus. Each phone has a
// prototype frame; each speaker applies a per-dimension gain and an additive
// bias to it; frames add isotropic Gaussian noise on top.
struct SyntheticSpec {
  int n_phones = 10;
  int n_speakers = 8;
  int feat_dim = 13;
  int utt_per_speaker = 4;
  int phones_per_utt = 30;
  int dur_min = 3;   // frames per phone, inclusive
  int dur_max = 10;
  double speaker_shift_scale = 1.0;
  double noise_std = 0.3;
  double frame_rate = 100.0;

  void Check() const;
};

struct Utterance {
  std::string utt_id;
  std::string speaker_id;
  Matrix frames;                  // n_frames x feat_dim
  std::vector<int> phone_labels;  // empty when unlabeled

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
  bool HasLabels() const { return !phone_labels.empty(); }
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<std::string> speakers;
  // Generator ground truth; empty for corpora loaded from disk.
  Matrix phone_prototypes;        // n_phones x feat_dim
  double frame_rate = 100.0;

  // Throws ParameterError when the corpus invariants do not hold.
  void Check() const;
  int SpeakerIndex(const std::string &speaker_id) const;
  const Utterance &Find(const std::string &utt_id) const;
  int64_t TotalFrames() const;
  int Dim() const;
};

// Deterministic in (spec, seed). speaker_shift_scale == 0 disables the
// speaker perturbation entirely (unit gain, zero bias).
Corpus GenerateCorpus(const SyntheticSpec &spec, uint64_t seed);

// Subtracts each speaker's mean frame from all frames of that speaker.
Corpus SpeakerCmn(const Corpus &corpus);

// Per-speaker mean and variance normalization.
Corpus SpeakerCmvn(const Corpus &corpus);

// Mean and variance normalization with statistics pooled over the corpus.
Corpus CorpusCmvn(const Corpus &corpus);

// Appends delta and delta-delta features (window 2, edge frames replicated);
// output is n_frames x (3 * dim).
Matrix AddDeltas(const Matrix &frames);

struct SegmentList {
  // Each column is one segment flattened frame-major (frame 0 dims, frame 1
  // dims, ...), so rows = seg_len * feat_dim.
  Matrix segments;
  std::vector<int> start_frames;
  // Set when the utterance was too short to yield any segment.
  bool skipped = false;

  int Size() const { return static_cast<int>(start_frames.size()); }
};

SegmentList MakeSegments(const Matrix &frames, int seg_len = 10, int shift = 1);
inline SegmentList MakeSegments(const Utterance &utt, int seg_len = 10,
                                int shift = 1) {
  return MakeSegments(utt.frames, seg_len, shift);
}

// Index of the segment whose latent stands in for frame t when latents are
// padded back to frame rate: the segment centered on t, clamped to the first
// and last segment at the utterance edges.
int SegmentForFrame(int t, int n_frames, int seg_len);

// Stacks frames t-context..t+context (edges replicated) into one column per
// frame: result is ((2 * context + 1) * dim) x n_frames.
Matrix SpliceFrames(const Matrix &frames, int context);

}  // namespace unitdisc

#endif  // UNITDISC_CORPUS_H_
