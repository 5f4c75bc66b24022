// tests/abx-test.cc

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

#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <Eigen/QR>

#include "doctest.h"
#include "unitdisc/abx.h"

using namespace unitdisc;

namespace {

// Minimum (cost, length) over all monotone paths, by exhaustive recursion.
std::pair<double, int> BrutePath(const Matrix &a, const Matrix &b, int i, int j) {
  const double c = CosineFrameDistance(a.row(i).transpose(), b.row(j).transpose());
  if (i == 0 && j == 0) return {c, 1};
  std::pair<double, int> best = {std::numeric_limits<double>::infinity(), 0};
  auto take = [&](std::pair<double, int> p) {
    if (p.first < best.first || (p.first == best.first && p.second < best.second)) best = p;
  };
  if (i > 0 && j > 0) take(BrutePath(a, b, i - 1, j - 1));
  if (i > 0) take(BrutePath(a, b, i - 1, j));
  if (j > 0) take(BrutePath(a, b, i, j - 1));
  return {best.first + c, best.second + 1};
}

Matrix RandomFrames(int n, int d, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0, 1);
  return Matrix::NullaryExpr(n, d, [&]() { return g(rng); });
}

// Utterance with the given (phone, run length) runs and random frames.
Utterance MakeUtt(const std::string &id, const std::string &spk,
                  const std::vector<std::pair<int, int>> &runs, std::mt19937_64 &rng) {
  Utterance u;
  u.utt_id = id;
  u.speaker_id = spk;
  for (auto [p, len] : runs) u.phone_labels.insert(u.phone_labels.end(), len, p);
  u.frames = RandomFrames(static_cast<int>(u.phone_labels.size()), 3, rng);
  return u;
}

Corpus ToyCorpus() {
  std::mt19937_64 rng(9);
  Corpus c;
  c.speakers = {"s0", "s1"};
  // s0: phone 0 twice, phone 1 once; s1: phone 0 once, phone 1 twice.
  // Runs shorter than 3 frames never form segments.
  c.utterances.push_back(MakeUtt("s0_a", "s0", {{0, 4}, {1, 3}, {0, 5}, {1, 2}}, rng));
  c.utterances.push_back(MakeUtt("s1_a", "s1", {{1, 3}, {0, 1}, {0 + 1, 1}, {0, 3}}, rng));
  c.utterances.push_back(MakeUtt("s1_b", "s1", {{1, 6}}, rng));
  return c;
}

struct Seg {
  std::string utt, spk;
  int phone, b, e;
};

std::vector<Seg> BruteSegments(const Corpus &c, int min_span) {
  std::vector<Seg> out;
  for (const Utterance &u : c.utterances) {
    int b = 0;
    for (int t = 1; t <= u.NumFrames(); t++) {
      if (t == u.NumFrames() || u.phone_labels[t] != u.phone_labels[b]) {
        if (t - b >= min_span) out.push_back({u.utt_id, u.speaker_id, u.phone_labels[b], b, t});
        b = t;
      }
    }
  }
  return out;
}

// Brute-force ABX: explicit loops over all triplets, cells keyed by pair.
double BruteAbx(const Corpus &c, const FeatureMap &f, AbxMode mode, int64_t *count) {
  std::vector<Seg> segs = BruteSegments(c, 3);
  std::map<std::pair<int, int>, std::pair<double, int64_t>> cells;
  auto slice = [&](const Seg &s) { return Matrix(f.at(s.utt).middleRows(s.b, s.e - s.b)); };
  *count = 0;
  for (std::size_t ia = 0; ia < segs.size(); ia++)
    for (std::size_t ib = 0; ib < segs.size(); ib++)
      for (std::size_t ix = 0; ix < segs.size(); ix++) {
        const Seg &a = segs[ia], &b = segs[ib], &x = segs[ix];
        if (a.phone == b.phone || a.spk != b.spk || x.phone != a.phone || ix == ia) continue;
        if ((mode == AbxMode::kWithin) != (x.spk == a.spk)) continue;
        const double dax = DtwDistance(slice(a), slice(x));
        const double dbx = DtwDistance(slice(b), slice(x));
        auto &cell = cells[{std::min(a.phone, b.phone), std::max(a.phone, b.phone)}];
        cell.first += dax > dbx ? 1.0 : (dax == dbx ? 0.5 : 0.0);
        cell.second++;
        ++*count;
      }
  double sum = 0;
  for (const auto &[k, v] : cells) sum += 100.0 * v.first / static_cast<double>(v.second);
  return sum / static_cast<double>(cells.size());
}

Corpus SmallSynthetic(double noise, uint64_t seed) {
  SyntheticSpec spec;
  spec.n_phones = 4;
  spec.n_speakers = 3;
  spec.utt_per_speaker = 1;
  spec.phones_per_utt = 8;
  spec.feat_dim = 5;
  spec.noise_std = noise;
  return GenerateCorpus(spec, seed);
}

}  // namespace

TEST_CASE("cosine frame distance") {
  Vector u(3), v(3);
  u << 1, 2, 3;
  CHECK(CosineFrameDistance(u, u) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(CosineFrameDistance(u, -u) == doctest::Approx(2.0));
  u << 1, 0, 0;
  v << 0, 1, 0;
  CHECK(CosineFrameDistance(u, v) == doctest::Approx(1.0));
  CHECK(CosineFrameDistance(Vector::Zero(3), v) == 1.0);
}

TEST_CASE("DTW matches exhaustive path search") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 40; trial++) {
    const int n = 1 + static_cast<int>(rng() % 5), m = 1 + static_cast<int>(rng() % 5);
    Matrix a = RandomFrames(n, 3, rng), b = RandomFrames(m, 3, rng);
    auto [cost, len] = BrutePath(a, b, n - 1, m - 1);
    CHECK(DtwDistance(a, b) == doctest::Approx(cost / len).epsilon(1e-12));
    CHECK(std::abs(DtwDistance(a, b) - DtwDistance(b, a)) < 1e-12);
    CHECK(DtwDistance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  }
  Matrix x = RandomFrames(1, 4, rng), y = RandomFrames(1, 4, rng);
  CHECK(DtwDistance(x, y) ==
        doctest::Approx(CosineFrameDistance(x.row(0).transpose(), y.row(0).transpose())));
  CHECK_THROWS_AS(DtwDistance(Matrix(0, 4), y), ParameterError);
}

TEST_CASE("task enumeration on a hand-counted toy corpus") {
  Corpus c = ToyCorpus();
  // Segments of >= 3 frames: s0 {0,0,1}; s1 {1,0,1}.
  // within: s0 (A=0,B=1): 2*1*1 = 2; s1 (A=1,B=0): 2*1*1 = 2.
  AbxTask within = BuildAbxTask(c, AbxMode::kWithin, 1000, 0);
  CHECK(within.total_triplets == 4);
  // across: s0 (0,1): 2*1*1, (1,0): 1*2*2; s1 (0,1): 1*2*2, (1,0): 2*1*1.
  AbxTask across = BuildAbxTask(c, AbxMode::kAcross, 1000, 0);
  CHECK(across.total_triplets == 12);
  CHECK(across.triplets.size() == 12);

  for (const AbxTask *t : {&within, &across}) {
    std::set<std::tuple<std::string, int, std::string, int, std::string, int>> seen;
    for (const AbxTriplet &tr : t->triplets) {
      CHECK(tr.category_a != tr.category_b);
      CHECK(tr.a.end - tr.a.begin >= 3);
      CHECK(tr.b.end - tr.b.begin >= 3);
      CHECK(tr.x.end - tr.x.begin >= 3);
      const Utterance &ua = c.Find(tr.a.utt_id), &ub = c.Find(tr.b.utt_id),
                      &ux = c.Find(tr.x.utt_id);
      CHECK(ua.speaker_id == ub.speaker_id);
      CHECK(ua.phone_labels[tr.a.begin] == tr.category_a);
      CHECK(ub.phone_labels[tr.b.begin] == tr.category_b);
      CHECK(ux.phone_labels[tr.x.begin] == tr.category_a);
      if (t->mode == AbxMode::kWithin) {
        CHECK(ux.speaker_id == ua.speaker_id);
        CHECK((tr.x.utt_id != tr.a.utt_id || tr.x.begin != tr.a.begin));
      } else {
        CHECK(ux.speaker_id != ua.speaker_id);
      }
      seen.insert({tr.a.utt_id, tr.a.begin, tr.b.utt_id, tr.b.begin, tr.x.utt_id, tr.x.begin});
    }
    CHECK(seen.size() == t->triplets.size());
  }

  Corpus one = c;
  one.speakers = {"s0"};
  one.utterances.resize(1);
  CHECK_THROWS_AS(BuildAbxTask(one, AbxMode::kAcross, 10, 0), ParameterError);
  Corpus mono = c;
  for (Utterance &u : mono.utterances) std::fill(u.phone_labels.begin(), u.phone_labels.end(), 0);
  CHECK_THROWS_AS(BuildAbxTask(mono, AbxMode::kWithin, 10, 0), ParameterError);
}

TEST_CASE("subsampling is uniform without replacement and seeded") {
  Corpus c = SmallSynthetic(0.3, 4);
  AbxTask full = BuildAbxTask(c, AbxMode::kAcross, 1 << 30, 0);
  REQUIRE(full.total_triplets > 500);
  AbxTask sub = BuildAbxTask(c, AbxMode::kAcross, 200, 3);
  CHECK(sub.triplets.size() == 200);
  CHECK(sub.total_triplets == full.total_triplets);
  auto key = [](const AbxTriplet &t) {
    return std::make_tuple(t.a.utt_id, t.a.begin, t.b.utt_id, t.b.begin, t.x.utt_id, t.x.begin);
  };
  std::set<decltype(key(sub.triplets[0]))> all, picked;
  for (const auto &t : full.triplets) all.insert(key(t));
  for (const auto &t : sub.triplets) picked.insert(key(t));
  CHECK(picked.size() == 200);
  for (const auto &k : picked) CHECK(all.count(k) == 1);
  AbxTask again = BuildAbxTask(c, AbxMode::kAcross, 200, 3);
  bool same = true;
  for (std::size_t i = 0; i < 200; i++) same = same && key(again.triplets[i]) == key(sub.triplets[i]);
  CHECK(same);
}

TEST_CASE("score equals brute-force enumeration") {
  Corpus c = SmallSynthetic(0.8, 5);
  FeatureMap f = CorpusFeatures(c);
  for (AbxMode mode : {AbxMode::kWithin, AbxMode::kAcross}) {
    AbxTask task = BuildAbxTask(c, mode, 1 << 30, 0);
    int64_t count = 0;
    const double brute = BruteAbx(c, f, mode, &count);
    CHECK(count == task.total_triplets);
    AbxScore s = ScoreAbx(f, task);
    CHECK(s.num_triplets == count);
    CHECK(s.error_rate == brute);
  }
  AbxTask small = BuildAbxTask(c, AbxMode::kWithin, 1 << 30, 0);
  CHECK(small.triplets.size() <= 200);
}

TEST_CASE("separable, identical and random features") {
  Corpus c = SmallSynthetic(0.3, 6);
  FeatureMap onehot, same, random;
  std::mt19937_64 rng(7);
  for (const Utterance &u : c.utterances) {
    onehot[u.utt_id] = OneHotFrames(u.phone_labels, 4);
    same[u.utt_id] = Matrix::Ones(u.NumFrames(), 3);
    random[u.utt_id] = RandomFrames(u.NumFrames(), 6, rng);
  }
  AbxSettings st;
  AbxReport r = EvaluateAbx(c, onehot, st);
  CHECK(r.error_rate_within() == 0.0);
  CHECK(r.error_rate_across() == 0.0);
  r = EvaluateAbx(c, same, st);
  CHECK(r.error_rate_within() == 50.0);
  CHECK(r.error_rate_across() == 50.0);

  SyntheticSpec spec;
  spec.n_phones = 4;
  spec.n_speakers = 3;
  Corpus big = GenerateCorpus(spec, 8);
  FeatureMap rnd;
  for (const Utterance &u : big.utterances) rnd[u.utt_id] = RandomFrames(u.NumFrames(), 6, rng);
  st.max_triplets = 4000;
  r = EvaluateAbx(big, rnd, st);
  CHECK(r.across.num_triplets >= 2000);
  CHECK(std::abs(r.error_rate_across() - 50.0) < 3.0);
  CHECK(std::abs(r.error_rate_within() - 50.0) < 3.0);
}

TEST_CASE("rotation invariance") {
  Corpus c = SmallSynthetic(0.5, 10);
  FeatureMap f = CorpusFeatures(c), rotated;
  std::mt19937_64 rng(11);
  Eigen::HouseholderQR<Matrix> qr(RandomFrames(5, 5, rng));
  const Matrix q = qr.householderQ();
  for (const auto &[id, m] : f) rotated[id] = m * q;
  AbxSettings st;
  AbxReport a = EvaluateAbx(c, f, st), b = EvaluateAbx(c, rotated, st);
  CHECK(std::abs(a.error_rate_within() - b.error_rate_within()) < 1e-9);
  CHECK(std::abs(a.error_rate_across() - b.error_rate_across()) < 1e-9);
}

TEST_CASE("error rate does not decrease with noise") {
  double prev = -1;
  for (double noise : {0.2, 0.8, 1.6, 3.2}) {
    double mean = 0;
    for (uint64_t seed = 0; seed < 5; seed++) {
      SyntheticSpec spec;
      spec.n_phones = 5;
      spec.n_speakers = 3;
      spec.utt_per_speaker = 2;
      spec.noise_std = noise;
      Corpus c = GenerateCorpus(spec, 100 + seed);
      AbxSettings st;
      st.max_triplets = 2000;
      mean += EvaluateAbx(c, CorpusFeatures(c), st).error_rate_across() / 5;
    }
    CHECK(mean >= prev);
    prev = mean;
  }
}

TEST_CASE("missing features and report formats") {
  Corpus c = ToyCorpus();
  FeatureMap f = CorpusFeatures(c);
  f.erase("s1_b");
  CHECK_THROWS_AS(ScoreAbx(f, BuildAbxTask(c, AbxMode::kAcross, 100, 0)), LookupError);

  AbxReport r = EvaluateAbx(c, CorpusFeatures(c), AbxSettings());
  std::ostringstream csv, text;
  WriteAbxCsv(csv, r);
  CHECK(csv.str().rfind("pair,within_err,across_err,count\n0-1,", 0) == 0);
  WriteAbxReport(text, r, "raw");
  CHECK(text.str().find("dtw_normalization: path_length") != std::string::npos);
  CHECK(text.str().find("triplets_across: 12") != std::string::npos);
}
