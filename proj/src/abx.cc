// src/abx.cc

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

#include "unitdisc/abx.h"

#include <algorithm>
#include <limits>
#include <ostream>
#include <random>
#include <set>

namespace unitdisc {

double CosineFrameDistance(const Vector &u, const Vector &v) {
  if (u.size() != v.size()) throw ParameterError("frame dims differ");
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 1.0;
  const double c = u.dot(v) / (nu * nv);
  return 1.0 - std::clamp(c, -1.0, 1.0);
}

double DtwDistance(const Matrix &a, const Matrix &b) {
  if (a.rows() == 0 || b.rows() == 0) throw ParameterError("DTW needs nonempty segments");
  if (a.cols() != b.cols()) throw ParameterError("frame dims differ");
  const Eigen::Index n = a.rows(), m = b.rows();
  // Cost matrix from row-normalized frames; zero rows keep distance 1.
  Vector na = a.rowwise().norm(), nb = b.rowwise().norm();
  Matrix an = a, bn = b;
  for (Eigen::Index i = 0; i < n; i++)
    if (na(i) > 0) an.row(i) /= na(i);
  for (Eigen::Index j = 0; j < m; j++)
    if (nb(j) > 0) bn.row(j) /= nb(j);
  Matrix cost = an * bn.transpose();
  for (Eigen::Index i = 0; i < n; i++)
    for (Eigen::Index j = 0; j < m; j++)
      cost(i, j) = (na(i) == 0 || nb(j) == 0) ? 1.0 : 1.0 - std::clamp(cost(i, j), -1.0, 1.0);

  Matrix acc(n, m);
  Eigen::MatrixXi len(n, m);
  for (Eigen::Index i = 0; i < n; i++) {
    for (Eigen::Index j = 0; j < m; j++) {
      double best = 0;
      int best_len = 0;
      if (i > 0 || j > 0) {
        best = std::numeric_limits<double>::infinity();
        auto consider = [&](Eigen::Index pi, Eigen::Index pj) {
          if (acc(pi, pj) < best || (acc(pi, pj) == best && len(pi, pj) < best_len)) {
            best = acc(pi, pj);
            best_len = len(pi, pj);
          }
        };
        if (i > 0 && j > 0) consider(i - 1, j - 1);
        if (i > 0) consider(i - 1, j);
        if (j > 0) consider(i, j - 1);
      }
      acc(i, j) = best + cost(i, j);
      len(i, j) = best_len + 1;
    }
  }
  return acc(n - 1, m - 1) / len(n - 1, m - 1);
}

const char *AbxModeName(AbxMode mode) { return mode == AbxMode::kWithin ? "within" : "across"; }

namespace {

struct Segment {
  SegmentRef ref;
  int phone = 0;
  int speaker = 0;
};

// Triplets for one (phone A, phone B, speaker) block, with A-phone segments
// of every speaker stored contiguously by speaker.
struct Block {
  int pa = 0, pb = 0, spk = 0;
  int64_t n_a = 0, n_b = 0, n_x = 0;
  int64_t Count() const { return n_a * n_b * n_x; }
};

}  // namespace

AbxTask BuildAbxTask(const Corpus &corpus, AbxMode mode, int64_t max_triplets,
                     uint64_t seed, int min_span) {
  if (max_triplets < 1) throw ParameterError("max_triplets must be >= 1");
  if (min_span < 1) throw ParameterError("min_span must be >= 1");
  const int n_spk = static_cast<int>(corpus.speakers.size());
  if (mode == AbxMode::kAcross && n_spk < 2)
    throw ParameterError("across-speaker ABX needs at least two speakers");

  int n_phones = 0;
  std::vector<Segment> segs;
  for (const Utterance &utt : corpus.utterances) {
    if (!utt.HasLabels()) throw ParameterError("utterance " + utt.utt_id + " has no labels");
    const int spk = corpus.SpeakerIndex(utt.speaker_id);
    const int n = utt.NumFrames();
    for (int b = 0; b < n;) {
      int e = b + 1;
      while (e < n && utt.phone_labels[e] == utt.phone_labels[b]) e++;
      const int phone = utt.phone_labels[b];
      if (phone < 0) throw ParameterError("negative phone label");
      n_phones = std::max(n_phones, phone + 1);
      if (e - b >= min_span) segs.push_back({{utt.utt_id, b, e}, phone, spk});
      b = e;
    }
  }
  if (n_phones < 2) throw ParameterError("ABX needs at least two phones");

  // by_phone[p] holds segments of phone p ordered by speaker; range[p][s] is
  // the [lo, hi) slice of speaker s.
  std::vector<std::vector<const Segment *>> by_phone(n_phones);
  std::stable_sort(segs.begin(), segs.end(),
                   [](const Segment &x, const Segment &y) { return x.speaker < y.speaker; });
  for (const Segment &s : segs) by_phone[s.phone].push_back(&s);
  std::vector<std::vector<std::pair<int64_t, int64_t>>> range(
      n_phones, std::vector<std::pair<int64_t, int64_t>>(n_spk, {0, 0}));
  for (int p = 0; p < n_phones; p++) {
    const auto &v = by_phone[p];
    for (int s = 0; s < n_spk; s++) {
      auto lo = std::lower_bound(v.begin(), v.end(), s,
                                 [](const Segment *x, int k) { return x->speaker < k; });
      auto hi = std::upper_bound(v.begin(), v.end(), s,
                                 [](int k, const Segment *x) { return k < x->speaker; });
      range[p][s] = {lo - v.begin(), hi - v.begin()};
    }
  }

  std::vector<Block> blocks;
  std::vector<int64_t> offsets = {0};
  for (int pa = 0; pa < n_phones; pa++) {
    for (int pb = 0; pb < n_phones; pb++) {
      if (pa == pb) continue;
      for (int s = 0; s < n_spk; s++) {
        Block bl{pa, pb, s, 0, 0, 0};
        bl.n_a = range[pa][s].second - range[pa][s].first;
        bl.n_b = range[pb][s].second - range[pb][s].first;
        bl.n_x = mode == AbxMode::kWithin
                     ? bl.n_a - 1
                     : static_cast<int64_t>(by_phone[pa].size()) - bl.n_a;
        if (bl.Count() <= 0) continue;
        blocks.push_back(bl);
        offsets.push_back(offsets.back() + bl.Count());
      }
    }
  }
  AbxTask task;
  task.mode = mode;
  task.total_triplets = offsets.back();
  if (task.total_triplets == 0) throw ParameterError("no valid ABX triplets");

  std::vector<int64_t> picks;
  if (task.total_triplets <= max_triplets) {
    picks.resize(task.total_triplets);
    for (int64_t i = 0; i < task.total_triplets; i++) picks[i] = i;
  } else {
    // Floyd's sampling of distinct indices.
    std::mt19937_64 rng(seed);
    std::set<int64_t> chosen;
    for (int64_t j = task.total_triplets - max_triplets; j < task.total_triplets; j++) {
      const int64_t t = std::uniform_int_distribution<int64_t>(0, j)(rng);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    picks.assign(chosen.begin(), chosen.end());
  }

  task.triplets.reserve(picks.size());
  for (int64_t idx : picks) {
    const std::size_t k =
        std::upper_bound(offsets.begin(), offsets.end(), idx) - offsets.begin() - 1;
    const Block &bl = blocks[k];
    int64_t r = idx - offsets[k];
    const int64_t ix = r % bl.n_x;
    r /= bl.n_x;
    const int64_t ib = r % bl.n_b;
    const int64_t ia = r / bl.n_b;
    const auto [a_lo, a_hi] = range[bl.pa][bl.spk];
    const int64_t a_pos = a_lo + ia;
    int64_t x_pos;
    if (mode == AbxMode::kWithin) {
      x_pos = a_lo + ix;
      if (x_pos >= a_pos) x_pos++;
    } else {
      x_pos = ix < a_lo ? ix : ix + (a_hi - a_lo);
    }
    const Segment &a = *by_phone[bl.pa][a_pos];
    const Segment &b = *by_phone[bl.pb][range[bl.pb][bl.spk].first + ib];
    const Segment &x = *by_phone[bl.pa][x_pos];
    task.triplets.push_back({a.ref, b.ref, x.ref, bl.pa, bl.pb, corpus.speakers[bl.spk],
                             corpus.speakers[x.speaker]});
  }
  return task;
}

namespace {

Matrix Slice(const FeatureMap &features, const SegmentRef &ref) {
  auto it = features.find(ref.utt_id);
  if (it == features.end()) throw LookupError("no features for utterance " + ref.utt_id);
  if (ref.begin < 0 || ref.end > it->second.rows() || ref.begin >= ref.end)
    throw ParameterError("segment outside the features of " + ref.utt_id);
  return it->second.middleRows(ref.begin, ref.end - ref.begin);
}

}  // namespace

AbxScore ScoreAbx(const FeatureMap &features, const AbxTask &task) {
  AbxScore score;
  for (const AbxTriplet &t : task.triplets) {
    const Matrix x = Slice(features, t.x);
    const double dax = DtwDistance(Slice(features, t.a), x);
    const double dbx = DtwDistance(Slice(features, t.b), x);
    AbxCell &cell = score.cells[{std::min(t.category_a, t.category_b),
                                 std::max(t.category_a, t.category_b)}];
    cell.error_sum += dax > dbx ? 1.0 : (dax == dbx ? 0.5 : 0.0);
    cell.count++;
    score.num_triplets++;
  }
  if (score.cells.empty()) return score;
  double sum = 0;
  for (const auto &[key, cell] : score.cells) sum += cell.Rate();
  score.error_rate = sum / static_cast<double>(score.cells.size());
  return score;
}

AbxReport EvaluateAbx(const Corpus &corpus, const FeatureMap &features,
                      const AbxSettings &settings) {
  AbxReport r;
  r.within = ScoreAbx(features, BuildAbxTask(corpus, AbxMode::kWithin, settings.max_triplets,
                                             MixSeed(settings.seed, 0), settings.min_span));
  r.across = ScoreAbx(features, BuildAbxTask(corpus, AbxMode::kAcross, settings.max_triplets,
                                             MixSeed(settings.seed, 1), settings.min_span));
  return r;
}

namespace {

std::set<std::pair<int, int>> AllPairs(const AbxReport &r) {
  std::set<std::pair<int, int>> keys;
  for (const auto &[k, c] : r.within.cells) keys.insert(k);
  for (const auto &[k, c] : r.across.cells) keys.insert(k);
  return keys;
}

void PutRate(std::ostream &os, const AbxScore &s, const std::pair<int, int> &key) {
  auto it = s.cells.find(key);
  if (it == s.cells.end())
    os << "nan";
  else
    os << it->second.Rate();
}

int64_t PairCount(const AbxReport &r, const std::pair<int, int> &key) {
  int64_t n = 0;
  if (auto it = r.within.cells.find(key); it != r.within.cells.end()) n += it->second.count;
  if (auto it = r.across.cells.find(key); it != r.across.cells.end()) n += it->second.count;
  return n;
}

}  // namespace

void WriteAbxReport(std::ostream &os, const AbxReport &report, const std::string &name) {
  const auto flags = os.flags();
  const auto prec = os.precision(6);
  os << std::fixed;
  os << "representation: " << name << '\n'
     << "distance: cosine\n"
     << "dtw_normalization: path_length\n"
     << "aggregation: macro_phone_pair\n"
     << "error_rate_within: " << report.within.error_rate << '\n'
     << "error_rate_across: " << report.across.error_rate << '\n'
     << "triplets_within: " << report.within.num_triplets << '\n'
     << "triplets_across: " << report.across.num_triplets << '\n'
     << "pair within across count\n";
  for (const auto &key : AllPairs(report)) {
    os << key.first << '-' << key.second << ' ';
    PutRate(os, report.within, key);
    os << ' ';
    PutRate(os, report.across, key);
    os << ' ' << PairCount(report, key) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

void WriteAbxCsv(std::ostream &os, const AbxReport &report) {
  const auto flags = os.flags();
  const auto prec = os.precision(6);
  os << std::fixed << "pair,within_err,across_err,count\n";
  for (const auto &key : AllPairs(report)) {
    os << key.first << '-' << key.second << ',';
    PutRate(os, report.within, key);
    os << ',';
    PutRate(os, report.across, key);
    os << ',' << PairCount(report, key) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

FeatureMap CorpusFeatures(const Corpus &corpus) {
  FeatureMap m;
  for (const Utterance &u : corpus.utterances) m[u.utt_id] = u.frames;
  return m;
}

Matrix OneHotFrames(const std::vector<int> &labels, int n_units) {
  if (n_units < 1) throw ParameterError("need at least one unit");
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), n_units);
  for (std::size_t t = 0; t < labels.size(); t++) {
    if (labels[t] < 0 || labels[t] >= n_units) throw ParameterError("unit id out of range");
    m(t, labels[t]) = 1.0;
  }
  return m;
}

}  // namespace unitdisc
