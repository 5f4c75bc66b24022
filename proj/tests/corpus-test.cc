// tests/corpus-test.cc

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
#include <sstream>

#include "doctest.h"
#include "unitdisc/corpus.h"
#include "unitdisc/feature-io.h"

using namespace unitdisc;

namespace {

SyntheticSpec SmallSpec() {
  SyntheticSpec spec;
  spec.n_phones = 5;
  spec.n_speakers = 3;
  spec.utt_per_speaker = 2;
  spec.phones_per_utt = 12;
  spec.dur_min = 3;
  spec.dur_max = 10;
  return spec;
}

bool BitIdentical(const Corpus &a, const Corpus &b) {
  if (a.utterances.size() != b.utterances.size()) return false;
  for (std::size_t i = 0; i < a.utterances.size(); i++) {
    const Utterance &x = a.utterances[i], &y = b.utterances[i];
    if (x.utt_id != y.utt_id || x.speaker_id != y.speaker_id) return false;
    if (x.phone_labels != y.phone_labels) return false;
    if (x.frames.rows() != y.frames.rows() || x.frames.cols() != y.frames.cols())
      return false;
    if (std::memcmp(x.frames.data(), y.frames.data(),
                    sizeof(double) * x.frames.size()) != 0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("noise-free unperturbed corpus reproduces prototypes") {
  SyntheticSpec spec = SmallSpec();
  spec.noise_std = 0.0;
  spec.speaker_shift_scale = 0.0;
  spec.n_speakers = 2;
  Corpus c = GenerateCorpus(spec, 7);
  for (const Utterance &u : c.utterances)
    for (int t = 0; t < u.NumFrames(); t++)
      CHECK((u.frames.row(t) - c.phone_prototypes.row(u.phone_labels[t])).norm() == 0.0);
}

TEST_CASE("corpus generation is deterministic in (spec, seed)") {
  SyntheticSpec spec = SmallSpec();
  CHECK(BitIdentical(GenerateCorpus(spec, 11), GenerateCorpus(spec, 11)));
  CHECK_FALSE(BitIdentical(GenerateCorpus(spec, 11), GenerateCorpus(spec, 12)));
}

TEST_CASE("phone runs honor the duration range") {
  SyntheticSpec spec = SmallSpec();
  Corpus c = GenerateCorpus(spec, 3);
  c.Check();
  for (const Utterance &u : c.utterances) {
    REQUIRE(static_cast<int>(u.phone_labels.size()) == u.NumFrames());
    int run = 1;
    for (std::size_t t = 1; t <= u.phone_labels.size(); t++) {
      if (t < u.phone_labels.size() && u.phone_labels[t] == u.phone_labels[t - 1]) {
        run++;
        continue;
      }
      CHECK(run >= 3);
      CHECK(run <= 10);
      run = 1;
    }
  }
}

TEST_CASE("invalid synthetic specs are rejected") {
  SyntheticSpec spec = SmallSpec();
  spec.n_phones = 1;
  CHECK_THROWS_AS(GenerateCorpus(spec, 0), ParameterError);
  spec = SmallSpec();
  spec.n_speakers = 1;
  CHECK_THROWS_AS(GenerateCorpus(spec, 0), ParameterError);
  spec = SmallSpec();
  spec.dur_min = 0;
  CHECK_THROWS_AS(GenerateCorpus(spec, 0), ParameterError);
  spec = SmallSpec();
  spec.feat_dim = 0;
  CHECK_THROWS_AS(GenerateCorpus(spec, 0), ParameterError);
}

TEST_CASE("speaker CMN zeroes per-speaker means and is idempotent") {
  Corpus c = SpeakerCmn(GenerateCorpus(SmallSpec(), 5));
  for (const std::string &spk : c.speakers) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(c.Dim());
    int64_t n = 0;
    for (const Utterance &u : c.utterances)
      if (u.speaker_id == spk) {
        sum += u.frames.colwise().sum();
        n += u.NumFrames();
      }
    CHECK((sum / static_cast<double>(n)).cwiseAbs().maxCoeff() < 1e-10);
  }
  Corpus twice = SpeakerCmn(c);
  for (std::size_t i = 0; i < c.utterances.size(); i++)
    CHECK((twice.utterances[i].frames - c.utterances[i].frames).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("speaker CMN hand cases") {
  Corpus c;
  c.speakers = {"a", "b"};
  Utterance u1{"u1", "a", Matrix(2, 1), {}};
  u1.frames << 2, 4;
  Utterance u2{"u2", "b", Matrix::Constant(3, 2, 5.0), {}};
  c.utterances = {u1, u2};
  Corpus out = SpeakerCmn(c);
  CHECK(out.utterances[0].frames(0, 0) == doctest::Approx(-1.0));
  CHECK(out.utterances[0].frames(1, 0) == doctest::Approx(1.0));
  CHECK(out.utterances[1].frames.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(SpeakerCmn(Corpus{}), ParameterError);
}

TEST_CASE("CMVN variants give unit variance") {
  Corpus raw = GenerateCorpus(SmallSpec(), 9);
  for (const Corpus &c : {SpeakerCmvn(raw), CorpusCmvn(raw)}) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(c.Dim());
    Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(c.Dim());
    for (const Utterance &u : c.utterances) {
      sum += u.frames.colwise().sum();
      sq += u.frames.array().square().matrix().colwise().sum();
    }
    const double n = static_cast<double>(c.TotalFrames());
    CHECK((sum / n).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(((sq / n).array() - 1.0).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("deltas") {
  SUBCASE("constant sequence has zero deltas") {
    Matrix x = Matrix::Constant(7, 2, 3.5);
    Matrix d = AddDeltas(x);
    CHECK(d.rightCols(4).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("ramp gives unit delta in the interior") {
    Matrix x(9, 1);
    for (int t = 0; t < 9; t++) x(t, 0) = t;
    Matrix d = AddDeltas(x);
    for (int t = 2; t < 7; t++) CHECK(d(t, 1) == doctest::Approx(1.0).epsilon(1e-12));
    // (1*1 + 2*2) / 10 at the left edge with replication.
    CHECK(d(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("13 dims become 39 and frame count is preserved") {
    Matrix x = Matrix::Random(20, 13);
    Matrix d = AddDeltas(x);
    CHECK(d.cols() == 39);
    CHECK(d.rows() == 20);
    CHECK(d.leftCols(13) == x);
  }
}

TEST_CASE("segments") {
  Matrix x = Matrix::Random(12, 3);
  SegmentList s = MakeSegments(x, 10, 1);
  REQUIRE(s.Size() == 3);
  CHECK(s.start_frames == std::vector<int>{0, 1, 2});
  CHECK(s.segments.rows() == 30);
  CHECK(s.segments(3 * 4 + 1, 2) == x(6, 1));
  CHECK(MakeSegments(Matrix::Random(10, 3), 10, 1).Size() == 1);
  SegmentList short_utt = MakeSegments(Matrix::Random(9, 3), 10, 1);
  CHECK(short_utt.skipped);
  CHECK(short_utt.Size() == 0);

  // Latent padding: 12 frames -> 3 segments; edge frames reuse the first and
  // last segment.
  std::vector<int> expect = {0, 0, 0, 0, 0, 0, 1, 2, 2, 2, 2, 2};
  for (int t = 0; t < 12; t++) CHECK(SegmentForFrame(t, 12, 10) == expect[t]);
}

TEST_CASE("splicing replicates edges") {
  Matrix x(3, 1);
  x << 1, 2, 3;
  Matrix s = SpliceFrames(x, 1);
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == 3);
  CHECK(s(0, 0) == 1);
  CHECK(s(2, 0) == 2);
  CHECK(s(0, 2) == 2);
  CHECK(s(2, 2) == 3);
}

TEST_CASE("FEA1 archive and label file round trip") {
  Corpus c = GenerateCorpus(SmallSpec(), 1);
  std::stringstream ss;
  WriteFeatureArchive(ss, CorpusToEntries(c));
  std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "FEA1");
  auto back = ReadFeatureArchive(ss);
  REQUIRE(back.size() == c.utterances.size());
  for (std::size_t i = 0; i < back.size(); i++) {
    CHECK(back[i].id == c.utterances[i].utt_id);
    CHECK((back[i].frames - c.utterances[i].frames).cwiseAbs().maxCoeff() < 1e-5);
  }

  LabelTable labels;
  for (const Utterance &u : c.utterances) labels.emplace_back(u.utt_id, u.phone_labels);
  std::stringstream ls;
  WriteLabelFile(ls, labels);
  CHECK(ReadLabelFile(ls) == labels);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(ReadFeatureArchive(truncated), FormatError);
  std::stringstream bad("FEA2xxxx");
  CHECK_THROWS_AS(ReadFeatureArchive(bad), FormatError);
}
