// src/corpus.cc

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

#include "unitdisc/corpus.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

namespace unitdisc {

void SyntheticSpec::Check() const {
  if (n_phones < 2) throw ParameterError("n_phones must be >= 2");
  if (n_speakers < 2) throw ParameterError("n_speakers must be >= 2");
  if (feat_dim < 1) throw ParameterError("feat_dim must be >= 1");
  if (utt_per_speaker < 1) throw ParameterError("utt_per_speaker must be >= 1");
  if (phones_per_utt < 1) throw ParameterError("phones_per_utt must be >= 1");
  if (dur_min < 1 || dur_max < dur_min)
    throw ParameterError("dur_range must satisfy 1 <= min <= max");
  if (!(speaker_shift_scale >= 0.0))
    throw ParameterError("speaker_shift_scale must be nonnegative");
  if (!(noise_std >= 0.0)) throw ParameterError("noise_std must be nonnegative");
  if (!(frame_rate > 0.0)) throw ParameterError("frame_rate must be positive");
}

void Corpus::Check() const {
  std::set<std::string> spk(speakers.begin(), speakers.end());
  if (spk.size() != speakers.size())
    throw ParameterError("duplicate speaker ids in corpus");
  std::set<std::string> ids;
  for (const Utterance &u : utterances) {
    if (!spk.count(u.speaker_id))
      throw ParameterError("utterance " + u.utt_id + " has unknown speaker " +
                           u.speaker_id);
    if (!ids.insert(u.utt_id).second)
      throw ParameterError("duplicate utterance id " + u.utt_id);
    if (u.NumFrames() < 1)
      throw ParameterError("utterance " + u.utt_id + " has no frames");
    if (u.HasLabels() &&
        static_cast<int>(u.phone_labels.size()) != u.NumFrames())
      throw ParameterError("label length mismatch for " + u.utt_id);
  }
}

int Corpus::SpeakerIndex(const std::string &speaker_id) const {
  auto it = std::find(speakers.begin(), speakers.end(), speaker_id);
  if (it == speakers.end()) throw LookupError("unknown speaker " + speaker_id);
  return static_cast<int>(it - speakers.begin());
}

const Utterance &Corpus::Find(const std::string &utt_id) const {
  for (const Utterance &u : utterances)
    if (u.utt_id == utt_id) return u;
  throw LookupError("unknown utterance " + utt_id);
}

int64_t Corpus::TotalFrames() const {
  int64_t n = 0;
  for (const Utterance &u : utterances) n += u.NumFrames();
  return n;
}

int Corpus::Dim() const {
  return utterances.empty() ? 0 : utterances.front().Dim();
}

Corpus GenerateCorpus(const SyntheticSpec &spec, uint64_t seed) {
  spec.Check();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int dim = spec.feat_dim;

  Corpus corpus;
  corpus.frame_rate = spec.frame_rate;
  corpus.phone_prototypes.resize(spec.n_phones, dim);
  for (int k = 0; k < spec.n_phones; k++)
    for (int d = 0; d < dim; d++) corpus.phone_prototypes(k, d) = 3.0 * gauss(rng);

  const bool perturb = spec.speaker_shift_scale > 0.0;
  std::uniform_real_distribution<double> gain_dist(0.8, 1.2);
  std::vector<Eigen::RowVectorXd> gains, biases;
  for (int s = 0; s < spec.n_speakers; s++) {
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Ones(dim);
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(dim);
    if (perturb) {
      for (int d = 0; d < dim; d++) g(d) = gain_dist(rng);
      for (int d = 0; d < dim; d++) b(d) = spec.speaker_shift_scale * gauss(rng);
    }
    gains.push_back(g);
    biases.push_back(b);
    char name[32];
    std::snprintf(name, sizeof(name), "spk%03d", s);
    corpus.speakers.emplace_back(name);
  }

  std::uniform_int_distribution<int> dur_dist(spec.dur_min, spec.dur_max);
  std::uniform_int_distribution<int> first_phone(0, spec.n_phones - 1);
  std::uniform_int_distribution<int> next_phone(0, spec.n_phones - 2);
  for (int s = 0; s < spec.n_speakers; s++) {
    for (int u = 0; u < spec.utt_per_speaker; u++) {
      std::vector<int> labels;
      int prev = -1;
      for (int p = 0; p < spec.phones_per_utt; p++) {
        // Consecutive phones differ so every phone token is one maximal run.
        int phone = first_phone(rng);
        if (prev >= 0) {
          phone = next_phone(rng);
          if (phone >= prev) phone++;
        }
        int dur = dur_dist(rng);
        labels.insert(labels.end(), dur, phone);
        prev = phone;
      }
      Utterance utt;
      char name[48];
      std::snprintf(name, sizeof(name), "%s_u%03d", corpus.speakers[s].c_str(), u);
      utt.utt_id = name;
      utt.speaker_id = corpus.speakers[s];
      utt.frames.resize(static_cast<int>(labels.size()), dim);
      for (int t = 0; t < utt.frames.rows(); t++) {
        utt.frames.row(t) = gains[s].cwiseProduct(corpus.phone_prototypes.row(labels[t])) +
                            biases[s];
        if (spec.noise_std > 0.0)
          for (int d = 0; d < dim; d++) utt.frames(t, d) += spec.noise_std * gauss(rng);
      }
      utt.phone_labels = std::move(labels);
      corpus.utterances.push_back(std::move(utt));
    }
  }
  return corpus;
}

namespace {

struct Moments {
  Eigen::RowVectorXd sum, sumsq;
  int64_t count = 0;
};

std::map<std::string, Moments> PerSpeakerMoments(const Corpus &corpus) {
  std::map<std::string, Moments> stats;
  for (const Utterance &u : corpus.utterances) {
    Moments &m = stats[u.speaker_id];
    if (m.count == 0) {
      m.sum = Eigen::RowVectorXd::Zero(u.Dim());
      m.sumsq = Eigen::RowVectorXd::Zero(u.Dim());
    }
    m.sum += u.frames.colwise().sum();
    m.sumsq += u.frames.array().square().matrix().colwise().sum();
    m.count += u.NumFrames();
  }
  return stats;
}

Eigen::RowVectorXd StdDev(const Moments &m, const Eigen::RowVectorXd &mean) {
  Eigen::RowVectorXd var = m.sumsq / static_cast<double>(m.count) -
                           mean.cwiseProduct(mean);
  // Constant dimensions are left unscaled.
  return var.unaryExpr([](double v) { return v > 1e-12 ? std::sqrt(v) : 1.0; });
}

}  // namespace

Corpus SpeakerCmn(const Corpus &corpus) {
  if (corpus.utterances.empty()) throw ParameterError("empty corpus");
  std::map<std::string, Eigen::RowVectorXd> means;
  for (const Utterance &u : corpus.utterances) {
    auto it = means.find(u.speaker_id);
    if (it != means.end()) continue;
    // Two-pass mean for accuracy.
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(u.Dim());
    int64_t n = 0;
    for (const Utterance &v : corpus.utterances)
      if (v.speaker_id == u.speaker_id) {
        sum += v.frames.colwise().sum();
        n += v.NumFrames();
      }
    means[u.speaker_id] = sum / static_cast<double>(n);
  }
  Corpus out = corpus;
  for (Utterance &u : out.utterances)
    u.frames.rowwise() -= means.at(u.speaker_id);
  return out;
}

Corpus SpeakerCmvn(const Corpus &corpus) {
  if (corpus.utterances.empty()) throw ParameterError("empty corpus");
  Corpus out = SpeakerCmn(corpus);
  auto stats = PerSpeakerMoments(out);
  for (Utterance &u : out.utterances) {
    const Moments &m = stats.at(u.speaker_id);
    Eigen::RowVectorXd mean = m.sum / static_cast<double>(m.count);
    Eigen::RowVectorXd sd = StdDev(m, mean);
    u.frames.array().rowwise() /= sd.array();
  }
  return out;
}

Corpus CorpusCmvn(const Corpus &corpus) {
  if (corpus.utterances.empty()) throw ParameterError("empty corpus");
  const int dim = corpus.Dim();
  Moments m;
  m.sum = Eigen::RowVectorXd::Zero(dim);
  m.sumsq = Eigen::RowVectorXd::Zero(dim);
  for (const Utterance &u : corpus.utterances) {
    m.sum += u.frames.colwise().sum();
    m.count += u.NumFrames();
  }
  Eigen::RowVectorXd mean = m.sum / static_cast<double>(m.count);
  Corpus out = corpus;
  for (Utterance &u : out.utterances) u.frames.rowwise() -= mean;
  for (const Utterance &u : out.utterances)
    m.sumsq += u.frames.array().square().matrix().colwise().sum();
  // Frames are centered, so the mean passed here is zero.
  Eigen::RowVectorXd sd = StdDev(m, Eigen::RowVectorXd::Zero(dim));
  for (Utterance &u : out.utterances) u.frames.array().rowwise() /= sd.array();
  return out;
}

namespace {

Matrix Delta(const Matrix &x) {
  const int n = static_cast<int>(x.rows());
  const double denom = 2.0 * (1.0 * 1.0 + 2.0 * 2.0);
  Matrix out(n, x.cols());
  auto at = [&](int t) { return x.row(std::clamp(t, 0, n - 1)); };
  for (int t = 0; t < n; t++)
    out.row(t) = (1.0 * (at(t + 1) - at(t - 1)) + 2.0 * (at(t + 2) - at(t - 2))) / denom;
  return out;
}

}  // namespace

Matrix AddDeltas(const Matrix &frames) {
  if (frames.rows() < 1) throw ParameterError("AddDeltas: no frames");
  const auto dim = frames.cols();
  Matrix delta = Delta(frames);
  Matrix out(frames.rows(), 3 * dim);
  out.leftCols(dim) = frames;
  out.middleCols(dim, dim) = delta;
  out.rightCols(dim) = Delta(delta);
  return out;
}

SegmentList MakeSegments(const Matrix &frames, int seg_len, int shift) {
  if (seg_len < 1 || shift < 1)
    throw ParameterError("MakeSegments: seg_len and shift must be >= 1");
  SegmentList out;
  const int n = static_cast<int>(frames.rows());
  const int dim = static_cast<int>(frames.cols());
  if (n < seg_len) {
    out.skipped = true;
    out.segments.resize(seg_len * dim, 0);
    return out;
  }
  for (int start = 0; start + seg_len <= n; start += shift) out.start_frames.push_back(start);
  out.segments.resize(seg_len * dim, out.Size());
  for (int s = 0; s < out.Size(); s++)
    for (int f = 0; f < seg_len; f++)
      out.segments.col(s).segment(f * dim, dim) =
          frames.row(out.start_frames[s] + f).transpose();
  return out;
}

int SegmentForFrame(int t, int n_frames, int seg_len) {
  const int last = n_frames - seg_len;
  return std::clamp(t - seg_len / 2, 0, std::max(last, 0));
}

Matrix SpliceFrames(const Matrix &frames, int context) {
  const int n = static_cast<int>(frames.rows());
  const int dim = static_cast<int>(frames.cols());
  const int width = 2 * context + 1;
  Matrix out(width * dim, n);
  for (int t = 0; t < n; t++)
    for (int k = -context; k <= context; k++)
      out.col(t).segment((k + context) * dim, dim) =
          frames.row(std::clamp(t + k, 0, n - 1)).transpose();
  return out;
}

}  // namespace unitdisc
