// unitdisc/nnkit.h

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

#ifndef UNITDISC_NNKIT_H_
#define UNITDISC_NNKIT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "unitdisc/common.h"

namespace unitdisc {

// A small dense-network toolkit: feedforward layers with exact
// backpropagation, softmax cross-entropy, gradient reversal, SGD and Adam.
// Batches are column-major: an input of shape (in_dim x batch) is processed
// one column per sample.

enum class Activation : uint8_t { kSigmoid = 0, kLinear = 1, kSoftmax = 2, kTanh = 3 };

const char *ActivationName(Activation a);

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::kSigmoid;
};

struct Layer {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
  Activation activation = Activation::kSigmoid;

  int InDim() const { return static_cast<int>(weight.cols()); }
  int OutDim() const { return static_cast<int>(weight.rows()); }
};

// Ordered layers; also used for gradients and optimizer moments, which
// share the shape of the parameters they belong to.
struct NetParams {
  std::vector<Layer> layers;

  int InputDim() const;
  int OutputDim() const;
  int64_t NumParams() const;
  // Throws ParameterError when adjacent layer dims do not chain.
  void Check() const;

  // Weights uniform in +-sqrt(6 / (in + out)), zero biases.
  static NetParams Init(const std::vector<LayerSpec> &specs, std::mt19937_64 &rng);
  // All-zero parameters with the same shape as `like`.
  static NetParams ZerosLike(const NetParams &like);

  void SetZero();
  // this += alpha * other (shapes must match).
  void AddScaled(const NetParams &other, double alpha);
  void Scale(double alpha);

  // Flat views in a fixed order (layer by layer, weight column-major then
  // bias), used by gradient checks and comparisons.
  Vector Flatten() const;
  void Unflatten(const Vector &flat);
};

// Builds a stack: hidden layers with `hidden_act`, a final layer with
// `out_act`.
std::vector<LayerSpec> StackSpecs(int in_dim, const std::vector<int> &hidden,
                                  int out_dim, Activation hidden_act,
                                  Activation out_act);

struct ForwardCache {
  // activations[0] is the input; activations[l + 1] is the output of layer l.
  std::vector<Matrix> activations;

  const Matrix &Output() const { return activations.back(); }
};

ForwardCache NetForward(const NetParams &params, const Matrix &input);
// Single-sample convenience.
Vector ForwardOne(const NetParams &params, const Vector &input);

struct BackwardResult {
  NetParams param_grads;
  Matrix input_grad;
};

// Gradients of a scalar loss, given d loss / d output. `injected` adds extra
// gradient directly at the output of layer l (key l), for losses that tap an
// intermediate activation.
BackwardResult NetBackward(const NetParams &params, const ForwardCache &cache,
                           const Matrix &output_grad,
                           const std::map<int, Matrix> &injected = {});

// Column-wise softmax.
Matrix Softmax(const Matrix &logits);

struct XentResult {
  double loss = 0.0;
  Vector logit_grad;
};
XentResult SoftmaxXent(const Vector &logits, int target);

struct BatchXentResult {
  double mean_loss = 0.0;
  Matrix logit_grad;  // gradient of the mean loss
  int correct = 0;    // argmax hits
};
BatchXentResult SoftmaxXentBatch(const Matrix &logits, const std::vector<int> &targets);

// Gradient reversal: the forward pass is the identity; the backward pass
// returns -lambda * upstream.
inline const Matrix &GrlForward(const Matrix &x) { return x; }
Matrix GrlBackward(const Matrix &upstream, double lambda);

void SgdStep(NetParams &params, const NetParams &grads, double lr);

struct AdamState {
  NetParams m, v;
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState For(const NetParams &params);
};
void AdamStep(NetParams &params, const NetParams &grads, AdamState &state, double lr);

// Adam on a bare matrix; `step` is the already-incremented step count.
void AdamUpdate(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix> &grad,
                Eigen::Ref<Matrix> m, Eigen::Ref<Matrix> v, int64_t step,
                double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

// lr_t = lr_start * (lr_end / lr_start)^(t / total), t in [0, total].
double ExponentialDecayLr(double lr_start, double lr_end, int64_t t, int64_t total);

// "NNP1" block: magic, u16-length name, u32 layer count, per layer u32 in,
// u32 out, u8 activation tag, f32 weights (row-major out x in), f32 biases.
void WriteNetParams(std::ostream &os, const std::string &name, const NetParams &params);
NetParams ReadNetParams(std::istream &is, std::string *name = nullptr);

}  // namespace unitdisc

#endif  // UNITDISC_NNKIT_H_
