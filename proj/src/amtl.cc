// src/amtl.cc

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

#include "unitdisc/amtl.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "unitdisc/feature-io.h"

namespace unitdisc {

const char *GrlPlacementName(GrlPlacement p) {
  return p == GrlPlacement::kOnMh ? "on_Mh" : "on_Mp_ffl";
}

GrlPlacement ParseGrlPlacement(const std::string &name) {
  if (name == "on_Mh") return GrlPlacement::kOnMh;
  if (name == "on_Mp_ffl") return GrlPlacement::kOnMpFfl;
  throw ParameterError("unknown GRL placement '" + name + "'");
}

void AmtlConfig::Check() const {
  for (int h : hidden)
    if (h < 1) throw ParameterError("hidden sizes must be positive");
  if (bottleneck_dim < 1 || head_hidden < 1)
    throw ParameterError("bottleneck and head sizes must be positive");
  if (context < 0) throw ParameterError("context must be nonnegative");
  if (!(lambda >= 0)) throw ParameterError("lambda must be nonnegative");
  if (!(lr_start > 0) || !(lr_end > 0)) throw ParameterError("learning rates must be positive");
  if (epochs < 1 || batch_size < 1) throw ParameterError("epochs and batch size must be >= 1");
}

void AmtlModel::Check() const {
  config.Check();
  theta_h.Check();
  theta_p.Check();
  theta_s.Check();
  if (theta_h.InputDim() != config.InputDim(feat_dim))
    throw ParameterError("theta_h input does not match context and feature dim");
  if (theta_h.OutputDim() != config.bottleneck_dim)
    throw ParameterError("theta_h output is not the bottleneck dim");
  if (theta_p.layers.size() != 2 || theta_s.layers.size() != 2)
    throw ParameterError("heads must have exactly two layers");
  if (theta_p.InputDim() != config.bottleneck_dim)
    throw ParameterError("theta_p input is not the bottleneck dim");
  const int s_in = config.grl_placement == GrlPlacement::kOnMh
                       ? config.bottleneck_dim
                       : theta_p.layers[0].OutDim();
  if (theta_s.InputDim() != s_in)
    throw ParameterError("theta_s input does not match the GRL placement");
}

AmtlModel AmtlModel::Init(const AmtlConfig &config, int feat_dim, int n_units,
                          int n_speakers, uint64_t seed) {
  config.Check();
  if (feat_dim < 1 || n_units < 1 || n_speakers < 1)
    throw ParameterError("feature dim, unit and speaker counts must be positive");
  AmtlModel m;
  m.config = config;
  m.feat_dim = feat_dim;
  std::mt19937_64 rng(seed);
  m.theta_h = NetParams::Init(StackSpecs(config.InputDim(feat_dim), config.hidden,
                                         config.bottleneck_dim, config.hidden_activation,
                                         Activation::kLinear),
                              rng);
  m.theta_p = NetParams::Init(StackSpecs(config.bottleneck_dim, {config.head_hidden}, n_units,
                                         config.hidden_activation, Activation::kLinear),
                              rng);
  const int s_in =
      config.grl_placement == GrlPlacement::kOnMh ? config.bottleneck_dim : config.head_hidden;
  m.theta_s = NetParams::Init(StackSpecs(s_in, {config.head_hidden}, n_speakers,
                                         config.hidden_activation, Activation::kLinear),
                              rng);
  return m;
}

namespace {

struct Caches {
  ForwardCache h, p, s;
};

Caches ForwardAll(const AmtlModel &model, const Matrix &input, bool with_speaker) {
  if (input.rows() != model.theta_h.InputDim())
    throw ParameterError("AMTL input has " + std::to_string(input.rows()) + " rows, expected " +
                         std::to_string(model.theta_h.InputDim()));
  Caches c;
  c.h = NetForward(model.theta_h, input);
  c.p = NetForward(model.theta_p, c.h.Output());
  if (with_speaker) {
    const Matrix &tap = model.config.grl_placement == GrlPlacement::kOnMh
                            ? c.h.Output()
                            : c.p.activations[1];
    c.s = NetForward(model.theta_s, GrlForward(tap));
  }
  return c;
}

}  // namespace

AmtlOutput AmtlForward(const AmtlModel &model, const Matrix &input) {
  Caches c = ForwardAll(model, input, model.config.speaker_branch);
  AmtlOutput out;
  out.bnf = c.h.Output();
  out.unit_logits = c.p.Output();
  if (model.config.speaker_branch) out.speaker_logits = c.s.Output();
  return out;
}

AmtlGrads AmtlGradients(const AmtlModel &model, const Matrix &input,
                        const std::vector<int> &unit_labels,
                        const std::vector<int> &speaker_labels) {
  const bool spk = model.config.speaker_branch;
  if (static_cast<Eigen::Index>(unit_labels.size()) != input.cols() ||
      (spk && static_cast<Eigen::Index>(speaker_labels.size()) != input.cols()))
    throw ParameterError("label count does not match batch size");
  Caches c = ForwardAll(model, input, spk);
  AmtlGrads g;
  BatchXentResult xp = SoftmaxXentBatch(c.p.Output(), unit_labels);
  g.unit_loss = xp.mean_loss;
  g.unit_correct = xp.correct;

  // Speaker branch first: its reversed input gradient enters below M_s.
  Matrix reversed;
  const double lambda = model.config.lambda;
  if (spk) {
    BatchXentResult xs = SoftmaxXentBatch(c.s.Output(), speaker_labels);
    g.speaker_loss = xs.mean_loss;
    g.speaker_correct = xs.correct;
    BackwardResult bs = NetBackward(model.theta_s, c.s, xs.logit_grad);
    g.s = std::move(bs.param_grads);
    if (lambda != 0.0) reversed = GrlBackward(bs.input_grad, lambda);
  } else {
    g.s = NetParams::ZerosLike(model.theta_s);
  }

  const bool on_ffl = model.config.grl_placement == GrlPlacement::kOnMpFfl;
  std::map<int, Matrix> injected;
  if (reversed.size() > 0 && on_ffl) injected.emplace(0, std::move(reversed));
  BackwardResult bp = NetBackward(model.theta_p, c.p, xp.logit_grad, injected);
  g.p = std::move(bp.param_grads);
  Matrix bnf_grad = std::move(bp.input_grad);
  if (reversed.size() > 0 && !on_ffl) bnf_grad += reversed;
  g.h = NetBackward(model.theta_h, c.h, bnf_grad).param_grads;
  return g;
}

AmtlGrads AmtlTrainStep(AmtlModel &model, const Matrix &input,
                        const std::vector<int> &unit_labels,
                        const std::vector<int> &speaker_labels, double lr) {
  AmtlGrads g = AmtlGradients(model, input, unit_labels, speaker_labels);
  SgdStep(model.theta_h, g.h, lr);
  SgdStep(model.theta_p, g.p, lr);
  if (model.config.speaker_branch) SgdStep(model.theta_s, g.s, lr);
  return g;
}

AmtlModel TrainAmtl(const Corpus &corpus, const std::vector<std::vector<int>> &unit_labels,
                    int n_units, const AmtlConfig &config, uint64_t seed,
                    AmtlTrainLog *log) {
  config.Check();
  corpus.Check();
  if (unit_labels.size() != corpus.utterances.size())
    throw ParameterError("need one label sequence per utterance");
  const int dim = corpus.Dim();
  const int in_dim = config.InputDim(dim);
  const int64_t n = corpus.TotalFrames();
  if (n == 0) throw ParameterError("no training frames");

  Matrix inputs(in_dim, n);
  std::vector<int> units(n), speakers(n);
  int64_t col = 0;
  for (std::size_t u = 0; u < corpus.utterances.size(); u++) {
    const Utterance &utt = corpus.utterances[u];
    if (static_cast<int>(unit_labels[u].size()) != utt.NumFrames())
      throw ParameterError("label count differs from frame count for " + utt.utt_id);
    const int spk = corpus.SpeakerIndex(utt.speaker_id);
    inputs.middleCols(col, utt.NumFrames()) = SpliceFrames(utt.frames, config.context);
    for (int t = 0; t < utt.NumFrames(); t++, col++) {
      const int label = unit_labels[u][t];
      if (label < 0 || label >= n_units) throw ParameterError("unit label out of range");
      units[col] = label;
      speakers[col] = spk;
    }
  }

  AmtlModel model = AmtlModel::Init(config, dim, n_units,
                                    static_cast<int>(corpus.speakers.size()), MixSeed(seed, 0));
  std::mt19937_64 rng(MixSeed(seed, 1));
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int64_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const int64_t total_steps = batches_per_epoch * config.epochs;
  int64_t step = 0;
  Matrix batch;
  std::vector<int> bu, bs;
  for (int epoch = 0; epoch < config.epochs; epoch++) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum_lp = 0, sum_ls = 0;
    int64_t hit_p = 0, hit_s = 0;
    for (int64_t b = 0; b < n; b += config.batch_size, step++) {
      const int64_t e = std::min<int64_t>(n, b + config.batch_size);
      batch.resize(in_dim, e - b);
      bu.resize(e - b);
      bs.resize(e - b);
      for (int64_t i = b; i < e; i++) {
        batch.col(i - b) = inputs.col(order[i]);
        bu[i - b] = units[order[i]];
        bs[i - b] = speakers[order[i]];
      }
      const double lr = ExponentialDecayLr(config.lr_start, config.lr_end, step,
                                           std::max<int64_t>(1, total_steps - 1));
      AmtlGrads g = AmtlTrainStep(model, batch, bu, bs, lr);
      sum_lp += g.unit_loss * static_cast<double>(e - b);
      sum_ls += g.speaker_loss * static_cast<double>(e - b);
      hit_p += g.unit_correct;
      hit_s += g.speaker_correct;
    }
    if (log) {
      const double nn = static_cast<double>(n);
      log->unit_loss.push_back(sum_lp / nn);
      log->speaker_loss.push_back(sum_ls / nn);
      log->unit_acc.push_back(static_cast<double>(hit_p) / nn);
      log->speaker_acc.push_back(static_cast<double>(hit_s) / nn);
    }
  }
  return model;
}

Matrix ExtractBnf(const AmtlModel &model, const Matrix &frames) {
  if (frames.cols() != model.feat_dim) throw ParameterError("frame dim does not match model");
  if (frames.rows() == 0) return Matrix(0, model.config.bottleneck_dim);
  return NetForward(model.theta_h, SpliceFrames(frames, model.config.context))
      .Output()
      .transpose();
}

Matrix ExtractPg(const AmtlModel &model, const Matrix &frames) {
  if (frames.cols() != model.feat_dim) throw ParameterError("frame dim does not match model");
  if (frames.rows() == 0) return Matrix(0, model.NumUnits());
  const Matrix bnf = NetForward(model.theta_h, SpliceFrames(frames, model.config.context)).Output();
  return Softmax(NetForward(model.theta_p, bnf).Output()).transpose();
}

void WriteAmtl(std::ostream &os, const AmtlModel &model) {
  model.Check();
  binio::WriteMagic(os, "AMC1");
  binio::WriteU8(os, static_cast<uint8_t>(model.config.grl_placement));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", model.config.lambda);
  binio::WriteString16(os, buf);
  binio::WriteU32(os, static_cast<uint32_t>(model.config.context));
  binio::WriteU32(os, static_cast<uint32_t>(model.feat_dim));
  WriteNetParams(os, "theta_h", model.theta_h);
  WriteNetParams(os, "theta_p", model.theta_p);
  WriteNetParams(os, "theta_s", model.theta_s);
  if (!os) throw FormatError("write failed");
}

AmtlModel ReadAmtl(std::istream &is) {
  binio::ExpectMagic(is, "AMC1");
  AmtlModel m;
  const uint8_t place = binio::ReadU8(is);
  if (place > 1) throw FormatError("bad GRL placement tag");
  m.config.grl_placement = static_cast<GrlPlacement>(place);
  m.config.lambda = std::stod(binio::ReadString16(is));
  m.config.context = static_cast<int>(binio::ReadU32(is));
  m.feat_dim = static_cast<int>(binio::ReadU32(is));
  const char *names[3] = {"theta_h", "theta_p", "theta_s"};
  NetParams *nets[3] = {&m.theta_h, &m.theta_p, &m.theta_s};
  for (int i = 0; i < 3; i++) {
    std::string name;
    *nets[i] = ReadNetParams(is, &name);
    if (name != names[i]) throw FormatError("expected sub-network " + std::string(names[i]));
  }
  m.config.hidden.clear();
  for (std::size_t l = 0; l + 1 < m.theta_h.layers.size(); l++)
    m.config.hidden.push_back(m.theta_h.layers[l].OutDim());
  m.config.bottleneck_dim = m.theta_h.OutputDim();
  m.config.hidden_activation = m.theta_h.layers.front().activation;
  if (m.theta_p.layers.empty()) throw FormatError("empty theta_p");
  m.config.head_hidden = m.theta_p.layers[0].OutDim();
  try {
    m.Check();
  } catch (const ParameterError &e) {
    throw FormatError(std::string("inconsistent AMTL checkpoint: ") + e.what());
  }
  return m;
}

void WriteAmtl(const std::string &path, const AmtlModel &model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  WriteAmtl(os, model);
}

AmtlModel ReadAmtl(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return ReadAmtl(is);
}

}  // namespace unitdisc
