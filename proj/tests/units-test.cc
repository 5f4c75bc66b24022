// tests/units-test.cc

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

#include <random>
#include <sstream>

#include "doctest.h"
#include "unitdisc/units.h"

using namespace unitdisc;

namespace {

// Literal transcription of the smoothing pseudocode with 1-based arrays.
std::vector<int> PseudocodeSmooth(const std::vector<int> &S, bool use_xor) {
  const int N = static_cast<int>(S.size());
  std::vector<int> s(N + 1), B(N + 1, 0);
  for (int j = 1; j <= N; j++) s[j] = S[j - 1];
  B[1] = 1;
  for (int j = 2; j <= N; j++) B[j] = s[j] != s[j - 1] ? 1 : 0;
  int i = 5;
  while (i <= N) {
    int tail = use_xor ? (B[i - 1] ^ B[i]) : (B[i - 1] | B[i]);
    if (B[i - 4] == 1 && B[i - 3] == 1 && B[i - 2] == 1 && tail == 1) B[i - 4] = 0;
    i = i + 1;
  }
  std::vector<int> T;
  for (int j = 1; j <= N; j++)
    if (B[j] == 1) T.push_back(s[j]);
  return T;
}

}  // namespace

TEST_CASE("frame argmax") {
  Matrix pg(3, 3);
  pg << 0.2, 0.7, 0.1, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0;
  CHECK(FrameArgmax(pg) == std::vector<int>{1, 0, 2});
  CHECK(FrameArgmax(Matrix::Identity(4, 4)) == std::vector<int>{0, 1, 2, 3});
  CHECK_THROWS_AS(FrameArgmax(Matrix(0, 3)), ParameterError);
  CHECK_NOTHROW(CheckPosteriorgram(pg));
  pg(0, 0) = 0.3;
  CHECK_THROWS_AS(CheckPosteriorgram(pg), ParameterError);
}

TEST_CASE("collapse repeats") {
  UnitSequence s = CollapseRepeats({0, 0, 1, 1, 1, 2}, 100.0);
  CHECK(s.symbols == std::vector<int>{0, 1, 2});
  CHECK(s.frame_spans == std::vector<std::pair<int, int>>{{0, 2}, {2, 5}, {5, 6}});
  CHECK(s.duration_seconds == doctest::Approx(0.06));
  CHECK(CollapseRepeats({4}).symbols == std::vector<int>{4});
  CHECK(CollapseRepeats(s.symbols).symbols == s.symbols);
  CHECK(ExpandToFrames(s) == std::vector<int>{0, 0, 1, 1, 1, 2});
}

TEST_CASE("smoothing hand traces") {
  // a b c d d
  CHECK(SmoothUnits({0, 1, 2, 3, 3}) == std::vector<int>{1, 2, 3});
  // a a b c d e e
  CHECK(SmoothUnits({0, 0, 1, 2, 3, 4, 4}) == std::vector<int>{0, 2, 3, 4});
  std::vector<bool> flags = SmoothBoundaries({0, 0, 1, 2, 3, 4, 4});
  CHECK(flags == std::vector<bool>{true, false, false, true, true, true, false});
  // Runs of length >= 2 leave nothing to smooth.
  std::vector<int> slow = {3, 3, 1, 1, 1, 4, 4, 2, 2};
  CHECK(SmoothUnits(slow) == CollapseRepeats(slow).symbols);
  CHECK(SmoothUnits({7}) == std::vector<int>{7});
  CHECK_THROWS_AS(SmoothUnits({}), ParameterError);
  // XOR differs from OR when both trailing flags are set.
  CHECK(SmoothUnits({0, 1, 2, 3, 4}, SmoothRule::kXor) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(SmoothUnits({0, 1, 2, 3, 4}, SmoothRule::kOr) == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("smoothing matches the pseudocode oracle on random sequences") {
  std::mt19937_64 rng(42);
  int mismatches = 0;
  for (int trial = 0; trial < 10000; trial++) {
    const int alphabet = 1 + static_cast<int>(rng() % 8);
    const int len = 1 + static_cast<int>(rng() % 64);
    std::vector<int> s(len);
    for (int &v : s) v = static_cast<int>(rng() % alphabet);
    for (bool use_xor : {false, true}) {
      const SmoothRule rule = use_xor ? SmoothRule::kXor : SmoothRule::kOr;
      std::vector<int> t = SmoothUnits(s, rule);
      mismatches += t != PseudocodeSmooth(s, use_xor);
      // Subsequence property.
      std::size_t k = 0;
      for (std::size_t j = 0; j < s.size() && k < t.size(); j++)
        if (s[j] == t[k]) k++;
      mismatches += k != t.size();
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("smoothed transcription") {
  const std::vector<int> s = {0, 1, 2, 3, 3};
  UnitSequence t = SmoothedTranscription(s, 100.0);
  CHECK(t.symbols == std::vector<int>{1, 2, 3});
  CHECK(t.frame_spans == std::vector<std::pair<int, int>>{{0, 2}, {2, 3}, {3, 5}});
  CHECK(t.duration_seconds == doctest::Approx(0.05));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; trial++) {
    std::vector<int> labels(1 + rng() % 60);
    for (int &v : labels) v = static_cast<int>(rng() % 4);
    UnitSequence u = SmoothedTranscription(labels, 100.0);
    CHECK(ExpandToFrames(u).size() == labels.size());
    for (int k = 1; k < u.Size(); k++) CHECK(u.symbols[k] != u.symbols[k - 1]);
    CHECK(u.Size() <= static_cast<int>(SmoothUnits(labels).size()));
    CHECK(CollapseRepeats(SmoothUnits(labels)).symbols == u.symbols);
  }
}

TEST_CASE("bitrate") {
  UnitSequence constant;
  constant.symbols = {3, 3, 3};
  constant.duration_seconds = 1.5;
  CHECK(Bitrate({constant}) == 0.0);

  UnitSequence uniform;
  uniform.symbols = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  uniform.duration_seconds = 2.0;
  CHECK(Bitrate({uniform}) == 5.0);
  UnitSequence longer = uniform;
  longer.duration_seconds = 4.0;
  CHECK(Bitrate({longer}) == 2.5);
  // Pooled over documents: same counts split in two.
  UnitSequence half_a, half_b;
  half_a.symbols = {0, 1, 0, 1, 0};
  half_b.symbols = {1, 0, 1, 0, 1};
  half_a.duration_seconds = half_b.duration_seconds = 1.0;
  CHECK(Bitrate({half_a, half_b}) == 5.0);

  UnitSequence zero;
  zero.symbols = {1};
  CHECK_THROWS_AS(Bitrate({zero}), ParameterError);
}

TEST_CASE("transcription file round trip") {
  Transcription t;
  t.emplace_back("spk000_u000", CollapseRepeats({1, 1, 5, 12}));
  t.emplace_back("spk001_u003", CollapseRepeats({0}));
  std::stringstream ss;
  WriteTranscription(ss, t);
  CHECK(ss.str() == "spk000_u000\t1 5 12\nspk001_u003\t0\n");
  Transcription back = ReadTranscription(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].first == "spk000_u000");
  CHECK(back[0].second.symbols == t[0].second.symbols);
  CHECK(back[1].second.symbols == t[1].second.symbols);
  std::stringstream bad("utt\t1 x 2\n");
  CHECK_THROWS_AS(ReadTranscription(bad), FormatError);
  std::stringstream noid("1 2 3\n");
  CHECK_THROWS_AS(ReadTranscription(noid), FormatError);
}
