// src/units.cc

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

#include "unitdisc/units.h"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace unitdisc {

void CheckPosteriorgram(const Matrix &pg, double tol) {
  if (pg.rows() == 0 || pg.cols() == 0) throw ParameterError("empty posteriorgram");
  if ((pg.array() < 0).any()) throw ParameterError("negative posterior");
  for (Eigen::Index t = 0; t < pg.rows(); t++)
    if (std::abs(pg.row(t).sum() - 1.0) > tol)
      throw ParameterError("posteriorgram row " + std::to_string(t) + " does not sum to 1");
}

std::vector<int> FrameArgmax(const Matrix &pg) {
  if (pg.rows() == 0 || pg.cols() == 0) throw ParameterError("empty posteriorgram");
  std::vector<int> out(pg.rows());
  for (Eigen::Index t = 0; t < pg.rows(); t++) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < pg.cols(); k++)
      if (pg(t, k) > pg(t, best)) best = k;
    out[t] = static_cast<int>(best);
  }
  return out;
}

UnitSequence CollapseRepeats(const std::vector<int> &labels, double frame_rate) {
  UnitSequence seq;
  const int n = static_cast<int>(labels.size());
  for (int t = 0; t < n; t++) {
    if (t == 0 || labels[t] != labels[t - 1]) {
      seq.symbols.push_back(labels[t]);
      seq.frame_spans.emplace_back(t, t + 1);
    } else {
      seq.frame_spans.back().second = t + 1;
    }
  }
  if (frame_rate > 0) seq.duration_seconds = n / frame_rate;
  return seq;
}

std::vector<bool> SmoothBoundaries(const std::vector<int> &labels, SmoothRule rule) {
  const std::size_t n = labels.size();
  if (n == 0) throw ParameterError("cannot smooth an empty label sequence");
  std::vector<bool> b(n);
  b[0] = true;
  for (std::size_t j = 1; j < n; j++) b[j] = labels[j] != labels[j - 1];
  // 1-based index i maps to b[i - 1].
  for (std::size_t i = 5; i <= n; i++) {
    const bool last = rule == SmoothRule::kOr ? (b[i - 2] || b[i - 1]) : (b[i - 2] != b[i - 1]);
    if (b[i - 5] && b[i - 4] && b[i - 3] && last) b[i - 5] = false;
  }
  return b;
}

std::vector<int> SmoothUnits(const std::vector<int> &labels, SmoothRule rule) {
  const std::vector<bool> b = SmoothBoundaries(labels, rule);
  std::vector<int> out;
  for (std::size_t j = 0; j < labels.size(); j++)
    if (b[j]) out.push_back(labels[j]);
  return out;
}

UnitSequence SmoothedTranscription(const std::vector<int> &labels, double frame_rate,
                                   SmoothRule rule) {
  const std::vector<bool> b = SmoothBoundaries(labels, rule);
  const int n = static_cast<int>(labels.size());
  UnitSequence seq;
  for (int t = 0; t < n; t++) {
    if (!b[t]) continue;
    if (!seq.symbols.empty() && seq.symbols.back() == labels[t]) continue;
    if (!seq.frame_spans.empty()) seq.frame_spans.back().second = t;
    seq.symbols.push_back(labels[t]);
    seq.frame_spans.emplace_back(seq.frame_spans.empty() ? 0 : t, n);
  }
  if (frame_rate > 0) seq.duration_seconds = n / frame_rate;
  return seq;
}

double Bitrate(const std::vector<UnitSequence> &sequences) {
  double duration = 0;
  std::map<int, int64_t> counts;
  int64_t total = 0;
  for (const UnitSequence &s : sequences) {
    duration += s.duration_seconds;
    for (int sym : s.symbols) {
      counts[sym]++;
      total++;
    }
  }
  if (!(duration > 0)) throw ParameterError("bitrate needs a positive total duration");
  double bits = 0;
  for (const auto &[sym, c] : counts)
    bits -= static_cast<double>(c) * std::log2(static_cast<double>(c) / static_cast<double>(total));
  return bits / duration;
}

std::vector<int> ExpandToFrames(const UnitSequence &seq) {
  if (seq.frame_spans.size() != seq.symbols.size())
    throw ParameterError("unit sequence has no frame spans");
  std::vector<int> out;
  for (std::size_t k = 0; k < seq.symbols.size(); k++) {
    const auto [b, e] = seq.frame_spans[k];
    if (b != static_cast<int>(out.size()) || e < b)
      throw ParameterError("frame spans do not partition the frames");
    out.insert(out.end(), e - b, seq.symbols[k]);
  }
  return out;
}

void WriteTranscription(std::ostream &os, const Transcription &t) {
  for (const auto &[id, seq] : t) {
    os << id << '\t';
    for (std::size_t k = 0; k < seq.symbols.size(); k++) os << (k ? " " : "") << seq.symbols[k];
    os << '\n';
  }
  if (!os) throw FormatError("transcription write failed");
}

Transcription ReadTranscription(std::istream &is) {
  Transcription t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError("transcription line " + std::to_string(lineno) + " has no id");
    UnitSequence seq;
    std::istringstream ss(line.substr(tab + 1));
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != tok.size())
        throw FormatError("bad unit id '" + tok + "' on line " + std::to_string(lineno));
      seq.symbols.push_back(v);
    }
    t.emplace_back(line.substr(0, tab), std::move(seq));
  }
  return t;
}

}  // namespace unitdisc
