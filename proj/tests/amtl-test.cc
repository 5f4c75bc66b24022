// tests/amtl-test.cc

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

#include <cstring>
#include <random>
#include <sstream>

#include "doctest.h"
#include "test-util.h"
#include "unitdisc/amtl.h"

using namespace unitdisc;
using unitdisc::testing::CompareGradients;
using unitdisc::testing::NumericGradient;

namespace {

AmtlConfig SmallConfig(GrlPlacement place, double lambda) {
  AmtlConfig c;
  c.hidden = {6, 5};
  c.bottleneck_dim = 4;
  c.head_hidden = 5;
  c.context = 1;
  c.lambda = lambda;
  c.grl_placement = place;
  return c;
}

struct Batch {
  Matrix x;
  std::vector<int> units, speakers;
};

Batch RandomBatch(int in_dim, int n, int n_units, int n_spk, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Batch b;
  b.x = Matrix::NullaryExpr(in_dim, n, [&]() { return g(rng); });
  for (int i = 0; i < n; i++) {
    b.units.push_back(static_cast<int>(rng() % n_units));
    b.speakers.push_back(static_cast<int>(rng() % n_spk));
  }
  return b;
}

double UnitLoss(const AmtlModel &m, const Batch &b) {
  return SoftmaxXentBatch(AmtlForward(m, b.x).unit_logits, b.units).mean_loss;
}

double SpeakerLoss(const AmtlModel &m, const Batch &b) {
  return SoftmaxXentBatch(AmtlForward(m, b.x).speaker_logits, b.speakers).mean_loss;
}

bool BitEqual(const NetParams &a, const NetParams &b) {
  const Vector fa = a.Flatten(), fb = b.Flatten();
  return fa.size() == fb.size() &&
         std::memcmp(fa.data(), fb.data(), sizeof(double) * fa.size()) == 0;
}

// d L_s / d theta_h by plain backprop through M_s with no reversal.
NetParams SpeakerGradForTrunk(const AmtlModel &m, const Batch &b) {
  ForwardCache h = NetForward(m.theta_h, b.x);
  ForwardCache p = NetForward(m.theta_p, h.Output());
  const bool on_mh = m.config.grl_placement == GrlPlacement::kOnMh;
  ForwardCache s = NetForward(m.theta_s, on_mh ? h.Output() : p.activations[1]);
  BatchXentResult xs = SoftmaxXentBatch(s.Output(), b.speakers);
  Matrix g = NetBackward(m.theta_s, s, xs.logit_grad).input_grad;
  if (!on_mh) {
    // Route through M_p's hidden layer only.
    NetParams p_hidden;
    p_hidden.layers = {m.theta_p.layers[0]};
    ForwardCache ph;
    ph.activations = {p.activations[0], p.activations[1]};
    g = NetBackward(p_hidden, ph, g).input_grad;
  }
  return NetBackward(m.theta_h, h, g).param_grads;
}

}  // namespace

TEST_CASE("forward shapes and softmax") {
  AmtlModel m = AmtlModel::Init(SmallConfig(GrlPlacement::kOnMh, 0.1), 3, 4, 3, 1);
  Batch b = RandomBatch(9, 7, 4, 3, 2);
  AmtlOutput out = AmtlForward(m, b.x);
  CHECK(out.bnf.rows() == 4);
  CHECK(out.unit_logits.rows() == 4);
  CHECK(out.speaker_logits.rows() == 3);
  Matrix pg = Softmax(out.unit_logits);
  for (int i = 0; i < pg.cols(); i++) CHECK(std::abs(pg.col(i).sum() - 1.0) < 1e-9);
  CHECK(AmtlForward(m, b.x).bnf == out.bnf);
  CHECK_THROWS_AS(AmtlForward(m, Matrix::Zero(8, 2)), ParameterError);

  AmtlModel full = AmtlModel::Init(AmtlConfig(), 13, 10, 8, 1);
  CHECK(full.theta_h.layers.size() == 6);
  CHECK(ExtractBnf(full, Matrix::Zero(3, 13)).cols() == 40);
}

TEST_CASE("composite gradient matches finite differences") {
  for (GrlPlacement place : {GrlPlacement::kOnMh, GrlPlacement::kOnMpFfl}) {
    CAPTURE(GrlPlacementName(place));
    const double lambda = 0.3;
    AmtlModel m = AmtlModel::Init(SmallConfig(place, lambda), 3, 4, 3, 7);
    Batch b = RandomBatch(9, 6, 4, 3, 8);
    AmtlGrads g = AmtlGradients(m, b.x, b.units, b.speakers);

    auto trunk = [&](const Vector &flat) {
      AmtlModel probe = m;
      probe.theta_h.Unflatten(flat);
      return UnitLoss(probe, b) - lambda * SpeakerLoss(probe, b);
    };
    auto ch = CompareGradients(g.h.Flatten(), NumericGradient(trunk, m.theta_h.Flatten()));
    CHECK(ch.checked > 50);
    CHECK(ch.max_rel_err < 1e-4);

    // theta_p feeds M_s only through its hidden layer, and only for on_Mp_ffl.
    const double lp_weight = place == GrlPlacement::kOnMh ? 0.0 : lambda;
    auto head_p = [&](const Vector &flat) {
      AmtlModel probe = m;
      probe.theta_p.Unflatten(flat);
      return UnitLoss(probe, b) - lp_weight * SpeakerLoss(probe, b);
    };
    auto cp = CompareGradients(g.p.Flatten(), NumericGradient(head_p, m.theta_p.Flatten()));
    CHECK(cp.max_rel_err < 1e-4);

    auto head_s = [&](const Vector &flat) {
      AmtlModel probe = m;
      probe.theta_s.Unflatten(flat);
      return SpeakerLoss(probe, b);
    };
    auto cs = CompareGradients(g.s.Flatten(), NumericGradient(head_s, m.theta_s.Flatten()));
    CHECK(cs.max_rel_err < 1e-4);
    CHECK(g.unit_loss == doctest::Approx(UnitLoss(m, b)));
  }
}

TEST_CASE("composite trunk update equals the explicit two-term formula") {
  for (GrlPlacement place : {GrlPlacement::kOnMh, GrlPlacement::kOnMpFfl}) {
    const double lambda = 0.07;
    AmtlModel m = AmtlModel::Init(SmallConfig(place, lambda), 3, 4, 3, 11);
    Batch b = RandomBatch(9, 16, 4, 3, 12);
    AmtlModel no_spk = m;
    no_spk.config.speaker_branch = false;
    const Vector dp = AmtlGradients(no_spk, b.x, b.units, b.speakers).h.Flatten();
    const Vector ds = SpeakerGradForTrunk(m, b).Flatten();
    const Vector composite = AmtlGradients(m, b.x, b.units, b.speakers).h.Flatten();
    CHECK((composite - (dp - lambda * ds)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("trunk update is linear in lambda") {
  AmtlModel m = AmtlModel::Init(SmallConfig(GrlPlacement::kOnMh, 0.0), 3, 4, 3, 13);
  Batch b = RandomBatch(9, 10, 4, 3, 14);
  auto at = [&](double lambda) {
    AmtlModel probe = m;
    probe.config.lambda = lambda;
    return AmtlGradients(probe, b.x, b.units, b.speakers).h.Flatten();
  };
  const Vector u0 = at(0.0), u1 = at(1.0);
  for (double lambda : {0.02, 0.06, 0.12, 0.5})
    CHECK((at(lambda) - (u0 + lambda * (u1 - u0))).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lambda zero is bit-identical to no speaker branch") {
  for (GrlPlacement place : {GrlPlacement::kOnMh, GrlPlacement::kOnMpFfl}) {
    AmtlModel with = AmtlModel::Init(SmallConfig(place, 0.0), 3, 4, 3, 15);
    AmtlModel without = with;
    without.config.speaker_branch = false;
    for (int step = 0; step < 5; step++) {
      Batch b = RandomBatch(9, 8, 4, 3, 100 + step);
      AmtlTrainStep(with, b.x, b.units, b.speakers, 0.1);
      AmtlTrainStep(without, b.x, b.units, b.speakers, 0.1);
    }
    CHECK(BitEqual(with.theta_h, without.theta_h));
    CHECK(BitEqual(with.theta_p, without.theta_p));
  }
}

TEST_CASE("speaker head step decreases speaker loss") {
  AmtlModel m = AmtlModel::Init(SmallConfig(GrlPlacement::kOnMh, 0.1), 3, 4, 3, 17);
  Batch b = RandomBatch(9, 32, 4, 3, 18);
  AmtlGrads g = AmtlGradients(m, b.x, b.units, b.speakers);
  AmtlModel stepped = m;
  SgdStep(stepped.theta_s, g.s, 1e-3);
  CHECK(SpeakerLoss(stepped, b) < SpeakerLoss(m, b));
}

TEST_CASE("training, extraction and checkpoint") {
  SyntheticSpec spec;
  spec.n_speakers = 3;
  spec.utt_per_speaker = 2;
  spec.n_phones = 5;
  spec.feat_dim = 4;
  Corpus corpus = CorpusCmvn(GenerateCorpus(spec, 3));
  std::vector<std::vector<int>> labels;
  for (const Utterance &u : corpus.utterances) labels.push_back(u.phone_labels);

  AmtlConfig c;
  c.hidden = {32, 32};
  c.bottleneck_dim = 8;
  c.head_hidden = 32;
  c.context = 2;
  c.lambda = 0.05;
  c.epochs = 20;
  c.batch_size = 32;
  c.lr_start = 0.5;
  c.lr_end = 0.05;
  AmtlTrainLog log;
  AmtlModel m = TrainAmtl(corpus, labels, 5, c, 21, &log);
  REQUIRE(log.unit_loss.size() == 20);
  CHECK(log.unit_loss.back() < log.unit_loss.front());
  CHECK(log.unit_acc.back() > 0.5);

  AmtlModel again = TrainAmtl(corpus, labels, 5, c, 21);
  CHECK(BitEqual(m.theta_h, again.theta_h));

  const Utterance &utt = corpus.utterances[0];
  Matrix pg = ExtractPg(m, utt.frames);
  Matrix bnf = ExtractBnf(m, utt.frames);
  CHECK(pg.rows() == utt.NumFrames());
  CHECK(bnf.rows() == utt.NumFrames());
  CHECK(bnf.cols() == 8);
  for (int t = 0; t < pg.rows(); t++) CHECK(std::abs(pg.row(t).sum() - 1.0) < 1e-6);
  CHECK(ExtractPg(m, utt.frames) == pg);
  CHECK_THROWS_AS(ExtractBnf(m, Matrix::Zero(3, 5)), ParameterError);

  AmtlModel no_spk_cfg = TrainAmtl(corpus, labels, 5, [&] {
    AmtlConfig z = c;
    z.lambda = 0;
    z.speaker_branch = false;
    return z;
  }(), 21);
  AmtlConfig zero = c;
  zero.lambda = 0;
  CHECK(BitEqual(TrainAmtl(corpus, labels, 5, zero, 21).theta_h, no_spk_cfg.theta_h));

  std::stringstream ss;
  WriteAmtl(ss, m);
  AmtlModel back = ReadAmtl(ss);
  CHECK(back.config.lambda == 0.05);
  CHECK(back.config.grl_placement == GrlPlacement::kOnMh);
  CHECK(back.config.context == 2);
  CHECK((ExtractPg(back, utt.frames) - pg).cwiseAbs().maxCoeff() < 1e-5);

  std::stringstream bad("AMC0xxxx");
  CHECK_THROWS_AS(ReadAmtl(bad), FormatError);
  std::vector<std::vector<int>> short_labels = labels;
  short_labels[0].pop_back();
  CHECK_THROWS_AS(TrainAmtl(corpus, short_labels, 5, c, 1), ParameterError);
}

TEST_CASE("placement names") {
  CHECK(ParseGrlPlacement("on_Mh") == GrlPlacement::kOnMh);
  CHECK(ParseGrlPlacement("on_Mp_ffl") == GrlPlacement::kOnMpFfl);
  CHECK_THROWS_AS(ParseGrlPlacement("top"), ParameterError);
  AmtlConfig c;
  c.lambda = -0.1;
  CHECK_THROWS_AS(c.Check(), ParameterError);
}
