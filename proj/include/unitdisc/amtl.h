// unitdisc/amtl.h

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

#ifndef UNITDISC_AMTL_H_
#define UNITDISC_AMTL_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "unitdisc/common.h"
#include "unitdisc/corpus.h"
#include "unitdisc/nnkit.h"

namespace unitdisc {

// Adversarial multi-task bottleneck network. M_h maps a spliced frame to a
// linear bottleneck (the BNF); M_p classifies units from the BNF; M_s
// classifies speakers behind a gradient reversal layer, attached either to
// the BNF or to the output of M_p's hidden layer.

enum class GrlPlacement : uint8_t { kOnMh = 0, kOnMpFfl = 1 };

const char *GrlPlacementName(GrlPlacement p);
// Accepts "on_Mh" and "on_Mp_ffl".
GrlPlacement ParseGrlPlacement(const std::string &name);

struct AmtlConfig {
  std::vector<int> hidden = {1024, 1024, 1024, 1024, 1024};
  int bottleneck_dim = 40;
  int head_hidden = 1024;
  int context = 5;  // frames on each side of the current one
  Activation hidden_activation = Activation::kTanh;
  double lambda = 0.0;
  GrlPlacement grl_placement = GrlPlacement::kOnMh;
  bool speaker_branch = true;

  double lr_start = 8e-3;
  double lr_end = 8e-4;
  int epochs = 5;
  int batch_size = 256;

  void Check() const;
  int InputDim(int feat_dim) const { return (2 * context + 1) * feat_dim; }
};

struct AmtlModel {
  NetParams theta_h;  // spliced input -> bottleneck (linear)
  NetParams theta_p;  // one sigmoid layer -> unit logits
  NetParams theta_s;  // one sigmoid layer -> speaker logits
  AmtlConfig config;
  int feat_dim = 0;

  int NumUnits() const { return theta_p.OutputDim(); }
  int NumSpeakers() const { return theta_s.OutputDim(); }
  // Throws ParameterError if the sub-network dims disagree with the config.
  void Check() const;

  static AmtlModel Init(const AmtlConfig &config, int feat_dim, int n_units,
                        int n_speakers, uint64_t seed);
};

struct AmtlOutput {
  Matrix unit_logits;     // n_units x batch
  Matrix speaker_logits;  // n_speakers x batch; empty without speaker branch
  Matrix bnf;             // bottleneck_dim x batch
};

// `input` is InputDim x batch (see SpliceFrames).
AmtlOutput AmtlForward(const AmtlModel &model, const Matrix &input);

struct AmtlGrads {
  NetParams h, p, s;
  double unit_loss = 0.0;     // mean over the batch
  double speaker_loss = 0.0;  // mean over the batch; 0 without speaker branch
  int unit_correct = 0;
  int speaker_correct = 0;
};

// Gradients for one composite update: d L_p for theta_p, d L_s for theta_s,
// and d L_p - lambda d L_s for theta_h, the latter through the GRL.
AmtlGrads AmtlGradients(const AmtlModel &model, const Matrix &input,
                        const std::vector<int> &unit_labels,
                        const std::vector<int> &speaker_labels);

// Plain SGD with the gradients above. Returns them for logging.
AmtlGrads AmtlTrainStep(AmtlModel &model, const Matrix &input,
                        const std::vector<int> &unit_labels,
                        const std::vector<int> &speaker_labels, double lr);

struct AmtlTrainLog {
  std::vector<double> unit_loss;  // per epoch means
  std::vector<double> speaker_loss;
  std::vector<double> unit_acc;
  std::vector<double> speaker_acc;
};

// `unit_labels[u]` gives one label per frame of utterance u. Speakers are
// indexed by corpus.SpeakerIndex. Frames are shuffled every epoch.
AmtlModel TrainAmtl(const Corpus &corpus, const std::vector<std::vector<int>> &unit_labels,
                    int n_units, const AmtlConfig &config, uint64_t seed,
                    AmtlTrainLog *log = nullptr);

// Per-frame outputs; rows are frames (n_frames x dim), matching Utterance.
Matrix ExtractBnf(const AmtlModel &model, const Matrix &frames);
Matrix ExtractPg(const AmtlModel &model, const Matrix &frames);

// An "AMC1" header (placement, lambda, context, feature dim) followed by
// three NNP1 blocks named theta_h, theta_p and theta_s.
void WriteAmtl(std::ostream &os, const AmtlModel &model);
AmtlModel ReadAmtl(std::istream &is);
void WriteAmtl(const std::string &path, const AmtlModel &model);
AmtlModel ReadAmtl(const std::string &path);

}  // namespace unitdisc

#endif  // UNITDISC_AMTL_H_
