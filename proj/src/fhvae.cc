// src/fhvae.cc

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

#include "unitdisc/fhvae.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "unitdisc/feature-io.h"

namespace unitdisc {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}  // namespace

void FhvaeConfig::Check() const {
  if (z1_dim < 1 || z2_dim < 1) throw ParameterError("latent dims must be >= 1");
  if (!(var_mu2 > 0 && var_z1 > 0 && var_z2 > 0))
    throw ParameterError("prior variances must be positive");
  if (!(alpha_dis >= 0)) throw ParameterError("alpha_dis must be nonnegative");
  if (seg_len < 1) throw ParameterError("seg_len must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ParameterError("hidden sizes must be >= 1");
  if (epochs < 1 || batch_size < 1) throw ParameterError("epochs and batch_size must be >= 1");
  if (!(lr > 0)) throw ParameterError("lr must be positive");
  if (!(heldout_fraction >= 0 && heldout_fraction < 1))
    throw ParameterError("heldout_fraction must be in [0, 1)");
}

int FhvaeModel::FindSeq(const std::string &id) const {
  auto it = std::find(seq_ids.begin(), seq_ids.end(), id);
  return it == seq_ids.end() ? -1 : static_cast<int>(it - seq_ids.begin());
}

int FhvaeModel::SeqIndex(const std::string &id) const {
  int i = FindSeq(id);
  if (i < 0) throw LookupError("sequence " + id + " not in s-vector table");
  return i;
}

Vector FhvaeModel::SVector(const std::string &id) const {
  return svectors.col(SeqIndex(id));
}

FhvaeModel FhvaeModel::Init(const FhvaeConfig &config, int feat_dim,
                            const std::vector<std::string> &seq_ids,
                            const std::vector<int> &seq_num_segments, uint64_t seed) {
  config.Check();
  if (feat_dim < 1) throw ParameterError("feat_dim must be >= 1");
  if (seq_ids.size() != seq_num_segments.size())
    throw ParameterError("sequence ids and counts differ in length");
  FhvaeModel m;
  m.config = config;
  m.feat_dim = feat_dim;
  std::mt19937_64 rng(seed);
  const int seg_dim = m.SegDim();
  const auto sig = config.hidden_activation, lin = Activation::kLinear;
  m.z2_encoder = NetParams::Init(
      StackSpecs(seg_dim, config.hidden, 2 * config.z2_dim, sig, lin), rng);
  m.z1_encoder = NetParams::Init(
      StackSpecs(seg_dim + config.z2_dim, config.hidden, 2 * config.z1_dim, sig, lin), rng);
  m.decoder = NetParams::Init(
      StackSpecs(config.z1_dim + config.z2_dim, config.hidden, 2 * seg_dim, sig, lin), rng);
  m.seq_ids = seq_ids;
  m.seq_num_segments = seq_num_segments;
  m.svectors = Matrix::Zero(config.z2_dim, static_cast<Eigen::Index>(seq_ids.size()));
  return m;
}

namespace {

Matrix StackRows(const Matrix &top, const Matrix &bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

void CheckSegments(const FhvaeModel &model, const Matrix &segments) {
  if (segments.rows() != model.SegDim())
    throw ParameterError("segment dim " + std::to_string(segments.rows()) +
                         " does not match model segment dim " +
                         std::to_string(model.SegDim()));
}

}  // namespace

BatchPosterior EncodeBatch(const FhvaeModel &model, const Matrix &segments) {
  CheckSegments(model, segments);
  const int d2 = model.config.z2_dim, d1 = model.config.z1_dim;
  BatchPosterior post;
  Matrix q2 = NetForward(model.z2_encoder, segments).Output();
  post.z2_mean = q2.topRows(d2);
  post.z2_logvar = q2.bottomRows(d2);
  Matrix q1 = NetForward(model.z1_encoder, StackRows(segments, post.z2_mean)).Output();
  post.z1_mean = q1.topRows(d1);
  post.z1_logvar = q1.bottomRows(d1);
  return post;
}

EncodeResult Encode(const FhvaeModel &model, const Vector &segment) {
  BatchPosterior p = EncodeBatch(model, Matrix(segment));
  return {{p.z2_mean.col(0), p.z2_logvar.col(0)}, {p.z1_mean.col(0), p.z1_logvar.col(0)}};
}

Matrix DecodeBatch(const FhvaeModel &model, const Matrix &z1, const Matrix &z2) {
  if (z1.rows() != model.config.z1_dim || z2.rows() != model.config.z2_dim ||
      z1.cols() != z2.cols())
    throw ParameterError("latent dims do not match model");
  return NetForward(model.decoder, StackRows(z1, z2)).Output();
}

GaussianParams Decode(const FhvaeModel &model, const Vector &z1, const Vector &z2) {
  Matrix out = DecodeBatch(model, Matrix(z1), Matrix(z2));
  const int n = model.SegDim();
  return {out.col(0).head(n), out.col(0).tail(n)};
}

double GaussianKl(const Vector &mean, const Vector &logvar, const Vector &prior_mean,
                  double prior_var) {
  return 0.5 * ((logvar.array().exp() + (mean - prior_mean).array().square()) / prior_var -
                1.0 - logvar.array() + std::log(prior_var))
                   .sum();
}

FhvaeNoise FhvaeNoise::Zero(const FhvaeModel &model, int batch) {
  return {Matrix::Zero(model.config.z2_dim, batch), Matrix::Zero(model.config.z1_dim, batch)};
}

FhvaeNoise FhvaeNoise::Sample(const FhvaeModel &model, int batch, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  FhvaeNoise n;
  n.eps_z2 = Matrix::NullaryExpr(model.config.z2_dim, batch, [&]() { return g(rng); });
  n.eps_z1 = Matrix::NullaryExpr(model.config.z1_dim, batch, [&]() { return g(rng); });
  return n;
}

LowerBoundResult LowerBound(const FhvaeModel &model, const Matrix &segments,
                            const std::vector<int> &seq_index, const FhvaeNoise &noise,
                            bool want_grads) {
  CheckSegments(model, segments);
  const FhvaeConfig &cfg = model.config;
  const int batch = static_cast<int>(segments.cols());
  const int d1 = cfg.z1_dim, d2 = cfg.z2_dim, dx = model.SegDim();
  const int n_seq = model.NumSeqs();
  if (static_cast<int>(seq_index.size()) != batch)
    throw ParameterError("one sequence index per segment required");
  if (noise.eps_z2.rows() != d2 || noise.eps_z2.cols() != batch ||
      noise.eps_z1.rows() != d1 || noise.eps_z1.cols() != batch)
    throw ParameterError("noise shape does not match batch");
  for (int i : seq_index)
    if (i < 0 || i >= n_seq) throw LookupError("sequence index out of range");

  // q(z2 | x), reparameterized sample.
  ForwardCache c2 = NetForward(model.z2_encoder, segments);
  const Matrix mu2 = c2.Output().topRows(d2);
  const Matrix lv2 = c2.Output().bottomRows(d2);
  const Matrix std2 = (0.5 * lv2.array()).exp().matrix();
  const Matrix z2 = mu2 + std2.cwiseProduct(noise.eps_z2);

  // q(z1 | x, z2).
  ForwardCache c1 = NetForward(model.z1_encoder, StackRows(segments, z2));
  const Matrix mu1 = c1.Output().topRows(d1);
  const Matrix lv1 = c1.Output().bottomRows(d1);
  const Matrix std1 = (0.5 * lv1.array()).exp().matrix();
  const Matrix z1 = mu1 + std1.cwiseProduct(noise.eps_z1);

  // p(x | z1, z2).
  ForwardCache cd = NetForward(model.decoder, StackRows(z1, z2));
  const Matrix mux = cd.Output().topRows(dx);
  const Matrix lvx = cd.Output().bottomRows(dx);
  const Matrix resid = segments - mux;
  const Matrix inv_varx = (-lvx.array()).exp().matrix();

  Matrix s_of(d2, batch);  // s-vector of each segment's sequence
  for (int b = 0; b < batch; b++) s_of.col(b) = model.svectors.col(seq_index[b]);

  LowerBoundResult res;
  LowerBoundTerms &t = res.terms;
  const double w = 1.0 / batch;
  Matrix dis_logits(n_seq, batch);
  for (int b = 0; b < batch; b++)
    for (int j = 0; j < n_seq; j++)
      dis_logits(j, b) = -(mu2.col(b) - model.svectors.col(j)).squaredNorm() / (2.0 * cfg.var_z2);
  const Matrix dis_prob = Softmax(dis_logits);

  for (int b = 0; b < batch; b++) {
    const int i = seq_index[b];
    const double log_px =
        -0.5 * (lvx.col(b).array() + resid.col(b).array().square() * inv_varx.col(b).array() +
                kLog2Pi)
                   .sum();
    const double kl1 = GaussianKl(mu1.col(b), lv1.col(b), Vector::Zero(d1), cfg.var_z1);
    const double kl2 = GaussianKl(mu2.col(b), lv2.col(b), s_of.col(b), cfg.var_z2);
    const double lpmu =
        -0.5 * (s_of.col(b).squaredNorm() / cfg.var_mu2 + d2 * std::log(2.0 * std::numbers::pi * cfg.var_mu2)) /
        std::max(model.seq_num_segments[i], 1);
    const double mx = dis_logits.col(b).maxCoeff();
    const double lse = mx + std::log((dis_logits.col(b).array() - mx).exp().sum());
    const double ldis = dis_logits(i, b) - lse;
    Eigen::Index best;
    dis_logits.col(b).maxCoeff(&best);
    if (best == i) t.dis_correct++;
    t.log_px += w * log_px;
    t.kl_z1 += w * kl1;
    t.kl_z2 += w * kl2;
    t.log_pmu2 += w * lpmu;
    t.log_pdis += w * ldis;
  }
  t.total = t.log_px - t.kl_z1 - t.kl_z2 + t.log_pmu2 + cfg.alpha_dis * t.log_pdis;
  if (!want_grads) return res;

  FhvaeGrads &g = res.grads;
  g.svectors = Matrix::Zero(d2, n_seq);

  // Decoder: d log N(x | mu, exp(lv)).
  const Matrix g_mux = w * resid.cwiseProduct(inv_varx);
  const Matrix g_lvx =
      w * (0.5 * resid.array().square() * inv_varx.array() - 0.5).matrix();
  BackwardResult bd = NetBackward(model.decoder, cd, StackRows(g_mux, g_lvx));
  g.decoder = std::move(bd.param_grads);
  const Matrix g_z1 = bd.input_grad.topRows(d1);
  Matrix g_z2 = bd.input_grad.bottomRows(d2);

  // z1 encoder: reparameterization plus -KL(q(z1) || N(0, var_z1)).
  const Matrix g_mu1 = g_z1 - (w / cfg.var_z1) * mu1;
  const Matrix g_lv1 = (0.5 * g_z1.array() * std1.array() * noise.eps_z1.array() -
                        w * 0.5 * (lv1.array().exp() / cfg.var_z1 - 1.0))
                           .matrix();
  BackwardResult b1 = NetBackward(model.z1_encoder, c1, StackRows(g_mu1, g_lv1));
  g.z1_encoder = std::move(b1.param_grads);
  g_z2 += b1.input_grad.bottomRows(d2);

  // z2 encoder: reparameterization, -KL(q(z2) || N(mu2, var_z2)) and the
  // discriminative term through the posterior mean.
  const Matrix diff = mu2 - s_of;
  Matrix g_mu2 = g_z2 - (w / cfg.var_z2) * diff;
  const Matrix g_lv2 = (0.5 * g_z2.array() * std2.array() * noise.eps_z2.array() -
                        w * 0.5 * (lv2.array().exp() / cfg.var_z2 - 1.0))
                           .matrix();
  // coeff(j, b) = w * alpha * (1[j == i_b] - p(j | z2_b)); columns sum to 0.
  Matrix coeff = -w * cfg.alpha_dis * dis_prob;
  for (int b = 0; b < batch; b++) coeff(seq_index[b], b) += w * cfg.alpha_dis;
  g_mu2 += (model.svectors * coeff) / cfg.var_z2 -
           mu2 * coeff.colwise().sum().asDiagonal() / cfg.var_z2;
  g.svectors += (mu2 * coeff.transpose() -
                 model.svectors * coeff.rowwise().sum().asDiagonal()) /
                cfg.var_z2;
  BackwardResult b2 = NetBackward(model.z2_encoder, c2, StackRows(g_mu2, g_lv2));
  g.z2_encoder = std::move(b2.param_grads);

  // s-vectors: KL(q(z2) || N(mu2, .)) and the scaled prior log p(mu2).
  for (int b = 0; b < batch; b++) {
    const int i = seq_index[b];
    g.svectors.col(i) += (w / cfg.var_z2) * diff.col(b) -
                         (w / (cfg.var_mu2 * std::max(model.seq_num_segments[i], 1))) *
                             s_of.col(b);
  }
  return res;
}

LowerBoundResult LowerBound(const FhvaeModel &model, const Matrix &segments,
                            const std::vector<std::string> &seq_ids,
                            const FhvaeNoise &noise, bool want_grads) {
  std::vector<int> idx;
  idx.reserve(seq_ids.size());
  for (const std::string &id : seq_ids) idx.push_back(model.SeqIndex(id));
  return LowerBound(model, segments, idx, noise, want_grads);
}

Vector InferSVectorMap(const FhvaeModel &model, const Matrix &segments) {
  if (segments.cols() < 1) throw ParameterError("MAP s-vector needs at least one segment");
  BatchPosterior post = EncodeBatch(model, segments);
  const double n = static_cast<double>(segments.cols());
  return post.z2_mean.rowwise().sum() /
         (n + model.config.var_z2 / model.config.var_mu2);
}

double DiscriminativeAccuracy(const FhvaeModel &model, const Matrix &segments,
                              const std::vector<int> &seq_index) {
  if (segments.cols() == 0) return 0.0;
  Matrix mu2 = EncodeBatch(model, segments).z2_mean;
  int correct = 0;
  for (Eigen::Index b = 0; b < mu2.cols(); b++) {
    Eigen::Index best;
    (model.svectors.colwise() - mu2.col(b)).colwise().squaredNorm().minCoeff(&best);
    if (best == seq_index[b]) correct++;
  }
  return static_cast<double>(correct) / static_cast<double>(mu2.cols());
}

namespace {

struct SegmentPool {
  Matrix segments;
  std::vector<int> seq_index;
};

Matrix GatherColumns(const Matrix &m, const std::vector<int> &cols, std::size_t begin,
                     std::size_t end) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; k++) out.col(k - begin) = m.col(cols[k]);
  return out;
}

double MeanBound(const FhvaeModel &model, const SegmentPool &pool,
                 const std::vector<int> &which) {
  if (which.empty()) return 0.0;
  double sum = 0.0;
  const std::size_t chunk = 512;
  for (std::size_t b = 0; b < which.size(); b += chunk) {
    std::size_t e = std::min(which.size(), b + chunk);
    std::vector<int> idx;
    for (std::size_t k = b; k < e; k++) idx.push_back(pool.seq_index[which[k]]);
    Matrix seg = GatherColumns(pool.segments, which, b, e);
    LowerBoundResult r = LowerBound(model, seg, idx,
                                    FhvaeNoise::Zero(model, static_cast<int>(e - b)), false);
    sum += r.terms.total * static_cast<double>(e - b);
  }
  return sum / static_cast<double>(which.size());
}

struct AdamSet {
  AdamState z2, z1, dec;
  Matrix m_sv, v_sv;
};

}  // namespace

FhvaeModel TrainFhvae(const Corpus &corpus, const FhvaeConfig &config, uint64_t seed,
                      FhvaeTrainLog *log) {
  config.Check();
  if (corpus.speakers.size() < 2)
    throw ParameterError("FHVAE training needs at least 2 speakers");
  const int dim = corpus.Dim();
  if (dim < 1) throw ParameterError("empty corpus");

  // One sequence per speaker; segments are cut per utterance.
  SegmentPool pool;
  std::vector<Matrix> parts;
  for (std::size_t s = 0; s < corpus.speakers.size(); s++)
    for (const Utterance &u : corpus.utterances) {
      if (u.speaker_id != corpus.speakers[s]) continue;
      SegmentList seg = MakeSegments(u.frames, config.seg_len, 1);
      if (seg.skipped) continue;
      parts.push_back(std::move(seg.segments));
      pool.seq_index.insert(pool.seq_index.end(), parts.back().cols(), static_cast<int>(s));
    }
  pool.segments.resize(config.seg_len * dim, static_cast<Eigen::Index>(pool.seq_index.size()));
  Eigen::Index col = 0;
  for (const Matrix &p : parts) {
    pool.segments.middleCols(col, p.cols()) = p;
    col += p.cols();
  }

  std::mt19937_64 rng(MixSeed(seed, 1));
  std::vector<int> order(pool.seq_index.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_heldout =
      static_cast<std::size_t>(config.heldout_fraction * static_cast<double>(order.size()));
  std::vector<int> heldout(order.begin(), order.begin() + n_heldout);
  std::vector<int> train(order.begin() + n_heldout, order.end());

  std::vector<int> counts(corpus.speakers.size(), 0);
  for (int i : train) counts[pool.seq_index[i]]++;
  for (std::size_t s = 0; s < counts.size(); s++)
    if (counts[s] == 0)
      throw ParameterError("speaker " + corpus.speakers[s] + " has no training segments");

  FhvaeModel model = FhvaeModel::Init(config, dim, corpus.speakers, counts, MixSeed(seed, 0));
  AdamSet adam{AdamState::For(model.z2_encoder), AdamState::For(model.z1_encoder),
               AdamState::For(model.decoder), Matrix::Zero(model.svectors.rows(), model.svectors.cols()),
               Matrix::Zero(model.svectors.rows(), model.svectors.cols())};

  FhvaeTrainLog local_log;
  FhvaeModel best = model;
  double best_bound = -std::numeric_limits<double>::infinity();
  int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; epoch++) {
    std::shuffle(train.begin(), train.end(), rng);
    double running = 0.0;
    for (std::size_t b = 0; b < train.size(); b += config.batch_size) {
      const std::size_t e = std::min(train.size(), b + static_cast<std::size_t>(config.batch_size));
      std::vector<int> idx;
      for (std::size_t k = b; k < e; k++) idx.push_back(pool.seq_index[train[k]]);
      Matrix seg = GatherColumns(pool.segments, train, b, e);
      FhvaeNoise noise = FhvaeNoise::Sample(model, static_cast<int>(e - b), rng);
      LowerBoundResult r = LowerBound(model, seg, idx, noise, true);
      running += r.terms.total * static_cast<double>(e - b);
      // Ascent on the bound = descent on its negation.
      r.grads.z2_encoder.Scale(-1.0);
      r.grads.z1_encoder.Scale(-1.0);
      r.grads.decoder.Scale(-1.0);
      AdamStep(model.z2_encoder, r.grads.z2_encoder, adam.z2, config.lr);
      AdamStep(model.z1_encoder, r.grads.z1_encoder, adam.z1, config.lr);
      AdamStep(model.decoder, r.grads.decoder, adam.dec, config.lr);
      step++;
      AdamUpdate(model.svectors, -r.grads.svectors, adam.m_sv, adam.v_sv, step, config.lr);
    }
    local_log.train_bound.push_back(running / static_cast<double>(train.size()));
    const double hb = heldout.empty() ? local_log.train_bound.back()
                                      : MeanBound(model, pool, heldout);
    local_log.heldout_bound.push_back(hb);
    if (hb > best_bound) {
      best_bound = hb;
      best = model;
      local_log.best_epoch = epoch;
    }
  }
  local_log.dis_accuracy = DiscriminativeAccuracy(best, pool.segments, pool.seq_index);
  if (log) *log = std::move(local_log);
  return best;
}

Matrix ReconstructUnified(const FhvaeModel &model, const Matrix &frames,
                          const Vector &source_svector, const Vector &target_svector) {
  if (frames.cols() != model.feat_dim)
    throw ParameterError("frame dim does not match model");
  const int seg_len = model.config.seg_len;
  SegmentList seg = MakeSegments(frames, seg_len, 1);
  if (seg.skipped)
    throw ParameterError("utterance shorter than one segment (" + std::to_string(seg_len) +
                         " frames)");
  BatchPosterior post = EncodeBatch(model, seg.segments);
  Matrix z2 = post.z2_mean;
  const Vector shift = target_svector - source_svector;
  if ((shift.array() != 0.0).any()) z2.colwise() += shift;
  const Matrix decoded = DecodeBatch(model, post.z1_mean, z2);

  const int n = static_cast<int>(frames.rows());
  const int dim = model.feat_dim;
  Matrix out(n, dim);
  for (int t = 0; t < n; t++) {
    const int s = SegmentForFrame(t, n, seg_len);
    out.row(t) = decoded.col(s).segment((t - s) * dim, dim).transpose();
  }
  return out;
}

Matrix ReconstructUnified(const FhvaeModel &model, const Utterance &utt,
                          const Vector &target_svector) {
  const int idx = model.FindSeq(utt.speaker_id);
  Vector source;
  if (idx >= 0) {
    source = model.svectors.col(idx);
  } else {
    SegmentList seg = MakeSegments(utt.frames, model.config.seg_len, 1);
    if (seg.skipped) throw ParameterError("utterance " + utt.utt_id + " too short");
    source = InferSVectorMap(model, seg.segments);
  }
  return ReconstructUnified(model, utt.frames, source, target_svector);
}

std::string RepresentativeSequence(const FhvaeModel &model) {
  if (model.seq_ids.empty()) throw ParameterError("empty s-vector table");
  auto it = std::max_element(model.seq_num_segments.begin(), model.seq_num_segments.end());
  return model.seq_ids[it - model.seq_num_segments.begin()];
}

void WriteFhvae(std::ostream &os, const FhvaeModel &model) {
  using namespace binio;
  WriteNetParams(os, "z2_encoder", model.z2_encoder);
  WriteNetParams(os, "z1_encoder", model.z1_encoder);
  WriteNetParams(os, "decoder", model.decoder);
  const FhvaeConfig &c = model.config;
  WriteMagic(os, "SVT1");
  WriteU32(os, static_cast<uint32_t>(model.feat_dim));
  WriteU32(os, static_cast<uint32_t>(c.seg_len));
  WriteF32(os, static_cast<float>(c.var_mu2));
  WriteF32(os, static_cast<float>(c.var_z1));
  WriteF32(os, static_cast<float>(c.var_z2));
  WriteF32(os, static_cast<float>(c.alpha_dis));
  WriteU32(os, static_cast<uint32_t>(model.NumSeqs()));
  WriteU32(os, static_cast<uint32_t>(model.svectors.rows()));
  for (int i = 0; i < model.NumSeqs(); i++) {
    WriteString16(os, model.seq_ids[i]);
    WriteU32(os, static_cast<uint32_t>(model.seq_num_segments[i]));
    for (Eigen::Index d = 0; d < model.svectors.rows(); d++)
      WriteF32(os, static_cast<float>(model.svectors(d, i)));
  }
  if (!os) throw FormatError("write failed");
}

FhvaeModel ReadFhvae(std::istream &is) {
  using namespace binio;
  FhvaeModel m;
  m.z2_encoder = ReadNetParams(is);
  m.z1_encoder = ReadNetParams(is);
  m.decoder = ReadNetParams(is);
  ExpectMagic(is, "SVT1");
  m.feat_dim = static_cast<int>(ReadU32(is));
  FhvaeConfig &c = m.config;
  c.seg_len = static_cast<int>(ReadU32(is));
  c.var_mu2 = ReadF32(is);
  c.var_z1 = ReadF32(is);
  c.var_z2 = ReadF32(is);
  c.alpha_dis = ReadF32(is);
  const uint32_t count = ReadU32(is), dim = ReadU32(is);
  c.z2_dim = static_cast<int>(dim);
  c.z1_dim = m.z1_encoder.OutputDim() / 2;
  c.hidden.clear();
  for (std::size_t l = 0; l + 1 < m.z2_encoder.layers.size(); l++)
    c.hidden.push_back(m.z2_encoder.layers[l].OutDim());
  m.svectors.resize(dim, count);
  for (uint32_t i = 0; i < count; i++) {
    m.seq_ids.push_back(ReadString16(is));
    m.seq_num_segments.push_back(static_cast<int>(ReadU32(is)));
    for (uint32_t d = 0; d < dim; d++) m.svectors(d, i) = ReadF32(is);
  }
  if (m.z2_encoder.InputDim() != m.SegDim() || m.z2_encoder.OutputDim() != 2 * c.z2_dim ||
      m.decoder.OutputDim() != 2 * m.SegDim())
    throw FormatError("FHVAE checkpoint networks are inconsistent");
  return m;
}

void WriteFhvae(const std::string &path, const FhvaeModel &model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  WriteFhvae(os, model);
}

FhvaeModel ReadFhvae(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return ReadFhvae(is);
}

}  // namespace unitdisc
