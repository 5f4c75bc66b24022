// src/nnkit.cc

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

#include "unitdisc/nnkit.h"

#include <cmath>
#include <istream>
#include <ostream>

#include "unitdisc/feature-io.h"

namespace unitdisc {

const char *ActivationName(Activation a) {
  switch (a) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
    case Activation::kSoftmax: return "softmax";
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

int NetParams::InputDim() const { return layers.empty() ? 0 : layers.front().InDim(); }
int NetParams::OutputDim() const { return layers.empty() ? 0 : layers.back().OutDim(); }

int64_t NetParams::NumParams() const {
  int64_t n = 0;
  for (const Layer &l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void NetParams::Check() const {
  if (layers.empty()) throw ParameterError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); i++) {
    const Layer &l = layers[i];
    if (l.InDim() < 1 || l.OutDim() < 1) throw ParameterError("layer dims must be >= 1");
    if (l.bias.size() != l.OutDim()) throw ParameterError("bias size mismatch");
    if (i > 0 && layers[i - 1].OutDim() != l.InDim())
      throw ParameterError("layer " + std::to_string(i) + " input dim does not chain");
  }
}

NetParams NetParams::Init(const std::vector<LayerSpec> &specs, std::mt19937_64 &rng) {
  NetParams p;
  for (const LayerSpec &s : specs) {
    if (s.in_dim < 1 || s.out_dim < 1) throw ParameterError("layer dims must be >= 1");
    Layer l;
    l.activation = s.activation;
    const double r = std::sqrt(6.0 / (s.in_dim + s.out_dim));
    std::uniform_real_distribution<double> u(-r, r);
    l.weight.resize(s.out_dim, s.in_dim);
    for (Eigen::Index j = 0; j < l.weight.cols(); j++)
      for (Eigen::Index i = 0; i < l.weight.rows(); i++) l.weight(i, j) = u(rng);
    l.bias = Vector::Zero(s.out_dim);
    p.layers.push_back(std::move(l));
  }
  p.Check();
  return p;
}

NetParams NetParams::ZerosLike(const NetParams &like) {
  NetParams p = like;
  p.SetZero();
  return p;
}

void NetParams::SetZero() {
  for (Layer &l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

void NetParams::AddScaled(const NetParams &other, double alpha) {
  if (other.layers.size() != layers.size()) throw ParameterError("shape mismatch");
  for (std::size_t i = 0; i < layers.size(); i++) {
    layers[i].weight += alpha * other.layers[i].weight;
    layers[i].bias += alpha * other.layers[i].bias;
  }
}

void NetParams::Scale(double alpha) {
  for (Layer &l : layers) {
    l.weight *= alpha;
    l.bias *= alpha;
  }
}

Vector NetParams::Flatten() const {
  Vector flat(NumParams());
  Eigen::Index o = 0;
  for (const Layer &l : layers) {
    flat.segment(o, l.weight.size()) = l.weight.reshaped();
    o += l.weight.size();
    flat.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return flat;
}

void NetParams::Unflatten(const Vector &flat) {
  if (flat.size() != NumParams()) throw ParameterError("flat size mismatch");
  Eigen::Index o = 0;
  for (Layer &l : layers) {
    l.weight.reshaped() = flat.segment(o, l.weight.size());
    o += l.weight.size();
    l.bias = flat.segment(o, l.bias.size());
    o += l.bias.size();
  }
}

std::vector<LayerSpec> StackSpecs(int in_dim, const std::vector<int> &hidden,
                                  int out_dim, Activation hidden_act,
                                  Activation out_act) {
  std::vector<LayerSpec> specs;
  int prev = in_dim;
  for (int h : hidden) {
    specs.push_back({prev, h, hidden_act});
    prev = h;
  }
  specs.push_back({prev, out_dim, out_act});
  return specs;
}

Matrix Softmax(const Matrix &logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); j++) {
    const double mx = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - mx).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

namespace {

Matrix Activate(const Matrix &z, Activation a) {
  switch (a) {
    case Activation::kSigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::kLinear:
      return z;
    case Activation::kSoftmax:
      return Softmax(z);
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

// d loss / d preactivation, given d loss / d activation output y.
Matrix ActivationBackward(const Matrix &y, const Matrix &grad, Activation a) {
  switch (a) {
    case Activation::kSigmoid:
      return (grad.array() * y.array() * (1.0 - y.array())).matrix();
    case Activation::kLinear:
      return grad;
    case Activation::kTanh:
      return (grad.array() * (1.0 - y.array().square())).matrix();
    case Activation::kSoftmax: {
      Matrix out(y.rows(), y.cols());
      for (Eigen::Index j = 0; j < y.cols(); j++) {
        const double dot = grad.col(j).dot(y.col(j));
        out.col(j) = (y.col(j).array() * (grad.col(j).array() - dot)).matrix();
      }
      return out;
    }
  }
  return grad;
}

}  // namespace

ForwardCache NetForward(const NetParams &params, const Matrix &input) {
  if (params.layers.empty()) throw ParameterError("network has no layers");
  if (input.rows() != params.InputDim())
    throw ParameterError("input dim " + std::to_string(input.rows()) +
                         " does not match network input dim " +
                         std::to_string(params.InputDim()));
  ForwardCache cache;
  cache.activations.reserve(params.layers.size() + 1);
  cache.activations.push_back(input);
  for (const Layer &l : params.layers) {
    Matrix z = l.weight * cache.activations.back();
    z.colwise() += l.bias;
    cache.activations.push_back(Activate(z, l.activation));
  }
  return cache;
}

Vector ForwardOne(const NetParams &params, const Vector &input) {
  Matrix in = input;
  return NetForward(params, in).Output().col(0);
}

BackwardResult NetBackward(const NetParams &params, const ForwardCache &cache,
                           const Matrix &output_grad,
                           const std::map<int, Matrix> &injected) {
  const int n_layers = static_cast<int>(params.layers.size());
  if (static_cast<int>(cache.activations.size()) != n_layers + 1)
    throw ParameterError("cache does not match network");
  BackwardResult res;
  res.param_grads = NetParams::ZerosLike(params);
  Matrix grad = output_grad;
  for (int l = n_layers - 1; l >= 0; l--) {
    auto inj = injected.find(l);
    if (inj != injected.end()) grad += inj->second;
    const Layer &layer = params.layers[l];
    Matrix dz = ActivationBackward(cache.activations[l + 1], grad, layer.activation);
    res.param_grads.layers[l].weight.noalias() = dz * cache.activations[l].transpose();
    res.param_grads.layers[l].bias = dz.rowwise().sum();
    grad.noalias() = layer.weight.transpose() * dz;
  }
  res.input_grad = std::move(grad);
  return res;
}

XentResult SoftmaxXent(const Vector &logits, int target) {
  if (target < 0 || target >= logits.size()) throw ParameterError("target out of range");
  XentResult r;
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  r.loss = lse - logits(target);
  r.logit_grad = (logits.array() - lse).exp().matrix();
  r.logit_grad(target) -= 1.0;
  return r;
}

BatchXentResult SoftmaxXentBatch(const Matrix &logits, const std::vector<int> &targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.cols())
    throw ParameterError("target count does not match batch");
  BatchXentResult r;
  r.logit_grad.resize(logits.rows(), logits.cols());
  const double inv = 1.0 / static_cast<double>(logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); j++) {
    XentResult x = SoftmaxXent(logits.col(j), targets[j]);
    r.mean_loss += x.loss * inv;
    r.logit_grad.col(j) = x.logit_grad * inv;
    Eigen::Index best;
    logits.col(j).maxCoeff(&best);
    if (best == targets[j]) r.correct++;
  }
  return r;
}

Matrix GrlBackward(const Matrix &upstream, double lambda) { return -lambda * upstream; }

void SgdStep(NetParams &params, const NetParams &grads, double lr) {
  params.AddScaled(grads, -lr);
}

AdamState AdamState::For(const NetParams &params) {
  AdamState s;
  s.m = NetParams::ZerosLike(params);
  s.v = NetParams::ZerosLike(params);
  return s;
}

void AdamUpdate(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix> &grad,
                Eigen::Ref<Matrix> m, Eigen::Ref<Matrix> v, int64_t step,
                double lr, double beta1, double beta2, double eps) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void AdamStep(NetParams &params, const NetParams &grads, AdamState &state, double lr) {
  if (state.m.layers.size() != params.layers.size()) state = AdamState::For(params);
  state.step++;
  for (std::size_t i = 0; i < params.layers.size(); i++) {
    Layer &p = params.layers[i];
    AdamUpdate(p.weight, grads.layers[i].weight, state.m.layers[i].weight,
               state.v.layers[i].weight, state.step, lr, state.beta1, state.beta2,
               state.eps);
    AdamUpdate(p.bias, grads.layers[i].bias, state.m.layers[i].bias,
               state.v.layers[i].bias, state.step, lr, state.beta1, state.beta2,
               state.eps);
  }
}

double ExponentialDecayLr(double lr_start, double lr_end, int64_t t, int64_t total) {
  if (total <= 0) return lr_start;
  return lr_start * std::pow(lr_end / lr_start,
                             static_cast<double>(t) / static_cast<double>(total));
}

void WriteNetParams(std::ostream &os, const std::string &name, const NetParams &params) {
  using namespace binio;
  WriteMagic(os, "NNP1");
  WriteString16(os, name);
  WriteU32(os, static_cast<uint32_t>(params.layers.size()));
  for (const Layer &l : params.layers) {
    WriteU32(os, static_cast<uint32_t>(l.InDim()));
    WriteU32(os, static_cast<uint32_t>(l.OutDim()));
    WriteU8(os, static_cast<uint8_t>(l.activation));
    for (Eigen::Index i = 0; i < l.weight.rows(); i++)
      for (Eigen::Index j = 0; j < l.weight.cols(); j++)
        WriteF32(os, static_cast<float>(l.weight(i, j)));
    for (Eigen::Index i = 0; i < l.bias.size(); i++)
      WriteF32(os, static_cast<float>(l.bias(i)));
  }
}

NetParams ReadNetParams(std::istream &is, std::string *name) {
  using namespace binio;
  ExpectMagic(is, "NNP1");
  std::string n = ReadString16(is);
  if (name) *name = n;
  uint32_t count = ReadU32(is);
  NetParams p;
  for (uint32_t k = 0; k < count; k++) {
    Layer l;
    uint32_t in = ReadU32(is), out = ReadU32(is);
    uint8_t tag = ReadU8(is);
    if (tag > 3) throw FormatError("bad activation tag");
    l.activation = static_cast<Activation>(tag);
    l.weight.resize(out, in);
    for (uint32_t i = 0; i < out; i++)
      for (uint32_t j = 0; j < in; j++) l.weight(i, j) = ReadF32(is);
    l.bias.resize(out);
    for (uint32_t i = 0; i < out; i++) l.bias(i) = ReadF32(is);
    p.layers.push_back(std::move(l));
  }
  p.Check();
  return p;
}

}  // namespace unitdisc
