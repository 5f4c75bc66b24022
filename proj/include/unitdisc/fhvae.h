// unitdisc/fhvae.h

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

#ifndef UNITDISC_FHVAE_H_
#define UNITDISC_FHVAE_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "unitdisc/common.h"
#include "unitdisc/corpus.h"
#include "unitdisc/nnkit.h"

namespace unitdisc {

// Factorized hierarchical VAE over fixed-length segments.
//
// Generative side: an s-vector mu2 per sequence with prior N(0, var_mu2 I);
// per segment z1 ~ N(0, var_z1 I), z2 ~ N(mu2, var_z2 I) and
// x ~ N(f_mu(z1, z2), diag(f_var(z1, z2))).
// Inference side: q(z2 | x) and q(z1 | x, z2) are diagonal Gaussians from two
// feedforward encoders over the flattened segment; q(mu2) is a point estimate
// held in a per-sequence lookup table.
struct FhvaeConfig {
  int z1_dim = 32;
  int z2_dim = 32;
  double var_mu2 = 1.0;
  double var_z1 = 1.0;
  double var_z2 = 0.25;
  double alpha_dis = 10.0;
  int seg_len = 10;
  std::vector<int> hidden = {256, 256};  // hidden layers in every network
  Activation hidden_activation = Activation::kTanh;

  // Training.
  int epochs = 30;
  int batch_size = 64;
  double lr = 1e-3;
  double heldout_fraction = 0.1;

  void Check() const;
};

struct GaussianParams {
  Vector mean;
  Vector logvar;
};

struct FhvaeModel {
  FhvaeConfig config;
  int feat_dim = 0;
  NetParams z2_encoder;  // segment -> [mean; logvar] of z2
  NetParams z1_encoder;  // [segment; z2] -> [mean; logvar] of z1
  NetParams decoder;     // [z1; z2] -> [mean; logvar] of the segment
  // s-vector table: one column per training sequence.
  std::vector<std::string> seq_ids;
  Matrix svectors;                     // z2_dim x n_seqs
  std::vector<int> seq_num_segments;   // training segments per sequence

  int SegDim() const { return config.seg_len * feat_dim; }
  int NumSeqs() const { return static_cast<int>(seq_ids.size()); }
  // -1 when absent.
  int FindSeq(const std::string &id) const;
  int SeqIndex(const std::string &id) const;  // throws LookupError
  Vector SVector(const std::string &id) const;

  static FhvaeModel Init(const FhvaeConfig &config, int feat_dim,
                         const std::vector<std::string> &seq_ids,
                         const std::vector<int> &seq_num_segments, uint64_t seed);
};

// Posterior parameters for a batch of segments (one column each). z1 is
// evaluated at the z2 posterior mean.
struct BatchPosterior {
  Matrix z2_mean, z2_logvar;
  Matrix z1_mean, z1_logvar;
};
BatchPosterior EncodeBatch(const FhvaeModel &model, const Matrix &segments);

struct EncodeResult {
  GaussianParams z2;
  GaussianParams z1;
};
EncodeResult Encode(const FhvaeModel &model, const Vector &segment);

GaussianParams Decode(const FhvaeModel &model, const Vector &z1, const Vector &z2);
// Batched decoder; returns [mean; logvar] stacked row-wise per column.
Matrix DecodeBatch(const FhvaeModel &model, const Matrix &z1, const Matrix &z2);

// KL(N(mean, exp(logvar)) || N(prior_mean, prior_var I)), summed over dims.
double GaussianKl(const Vector &mean, const Vector &logvar, const Vector &prior_mean,
                  double prior_var);

// Reparameterization noise; zero matrices make the bound deterministic.
struct FhvaeNoise {
  Matrix eps_z2;  // z2_dim x batch
  Matrix eps_z1;  // z1_dim x batch

  static FhvaeNoise Zero(const FhvaeModel &model, int batch);
  static FhvaeNoise Sample(const FhvaeModel &model, int batch, std::mt19937_64 &rng);
};

struct FhvaeGrads {
  NetParams z2_encoder, z1_encoder, decoder;
  Matrix svectors;
};

// Batch means of the lower-bound terms; total = log_px - kl_z1 - kl_z2 +
// log_pmu2 + alpha_dis * log_pdis.
struct LowerBoundTerms {
  double total = 0.0;
  double log_px = 0.0;
  double kl_z1 = 0.0;
  double kl_z2 = 0.0;
  double log_pmu2 = 0.0;  // already divided by the sequence segment count
  double log_pdis = 0.0;
  int dis_correct = 0;    // argmax_j p(j | z2 mean) == own sequence
};

struct LowerBoundResult {
  LowerBoundTerms terms;
  FhvaeGrads grads;  // gradient of terms.total (ascent direction)
};

// Discriminative segmental lower bound averaged over the batch. `seq_index`
// gives the table column of each segment.
LowerBoundResult LowerBound(const FhvaeModel &model, const Matrix &segments,
                            const std::vector<int> &seq_index,
                            const FhvaeNoise &noise, bool want_grads = true);
// Same, addressing sequences by id (LookupError on unknown ids).
LowerBoundResult LowerBound(const FhvaeModel &model, const Matrix &segments,
                            const std::vector<std::string> &seq_ids,
                            const FhvaeNoise &noise, bool want_grads = true);

struct FhvaeTrainLog {
  std::vector<double> heldout_bound;  // per epoch, zero-noise bound
  std::vector<double> train_bound;    // per epoch, running mean
  int best_epoch = 0;                 // 0-based
  double dis_accuracy = 0.0;          // on all training segments, best model
};

// One training sequence per speaker (all of that speaker's utterances);
// segments never straddle utterance boundaries. The returned model is the
// parameter snapshot with the best held-out bound.
FhvaeModel TrainFhvae(const Corpus &corpus, const FhvaeConfig &config, uint64_t seed,
                      FhvaeTrainLog *log = nullptr);

// MAP estimate of mu2 from the z2 posterior means of one sequence.
Vector InferSVectorMap(const FhvaeModel &model, const Matrix &segments);

// Fraction of segments whose z2 mean is closest (in the discriminative
// softmax sense) to their own sequence's s-vector.
double DiscriminativeAccuracy(const FhvaeModel &model, const Matrix &segments,
                              const std::vector<int> &seq_index);

// Reconstruction with z2 shifted by (target - source) before decoding.
// Per frame t the decoded mean of segment SegmentForFrame(t) is used at the
// matching offset, so interior frames come from the centered segment and
// edges reuse the first/last segment. source == target is exactly the plain
// reconstruction.
Matrix ReconstructUnified(const FhvaeModel &model, const Matrix &frames,
                          const Vector &source_svector, const Vector &target_svector);
// Resolves the source s-vector: table entry when the utterance's speaker is a
// training sequence, MAP estimate otherwise.
Matrix ReconstructUnified(const FhvaeModel &model, const Utterance &utt,
                          const Vector &target_svector);

// Training sequence with the most training segments (ties: first in table).
std::string RepresentativeSequence(const FhvaeModel &model);

// Checkpoint: three NNP1 blocks followed by an "SVT1" s-vector block.
void WriteFhvae(std::ostream &os, const FhvaeModel &model);
FhvaeModel ReadFhvae(std::istream &is);
void WriteFhvae(const std::string &path, const FhvaeModel &model);
FhvaeModel ReadFhvae(const std::string &path);

}  // namespace unitdisc

#endif  // UNITDISC_FHVAE_H_
