// src/dpgmm.cc

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

#include "unitdisc/dpgmm.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace unitdisc {

void NiwPrior::Check() const {
  const int d = Dim();
  if (d < 1) throw ParameterError("NIW prior has zero dimension");
  if (!(k0 > 0)) throw ParameterError("NIW k0 must be positive");
  if (!(v0 > d - 1)) throw ParameterError("NIW v0 must exceed dim - 1");
  if (S0.rows() != d || S0.cols() != d) throw ParameterError("NIW S0 shape mismatch");
  Eigen::LLT<Matrix> llt(S0);
  if (llt.info() != Eigen::Success) throw ParameterError("NIW S0 must be positive definite");
}

NiwPrior NiwPrior::FromData(const Matrix &data, double scatter_scale, double k0) {
  if (data.rows() < 1) throw ParameterError("cannot derive a prior from no data");
  if (!(scatter_scale > 0)) throw ParameterError("scatter scale must be positive");
  const int d = static_cast<int>(data.cols());
  NiwPrior p;
  p.m0 = data.colwise().mean().transpose();
  Vector var = (data.rowwise() - p.m0.transpose()).array().square().colwise().mean();
  for (int i = 0; i < d; i++)
    if (!(var(i) > 1e-8)) var(i) = 1.0;
  p.k0 = k0;
  p.v0 = d + 3.0;
  p.S0 = (scatter_scale * var).asDiagonal();
  return p;
}

DpgmmState::DpgmmState(NiwPrior prior, double alpha, int n_points, uint64_t seed)
    : prior_(std::move(prior)), alpha_(alpha), seed_(seed),
      assignments_(n_points, kUnassigned) {
  prior_.Check();
  if (!(alpha_ > 0)) throw ParameterError("DP concentration must be positive");
  if (n_points < 0) throw ParameterError("negative point count");
  new_cluster_ = BuildPredictive(nullptr);
}

void DpgmmState::AddToCluster(int cluster, const Vector &x) {
  if (x.size() != prior_.Dim()) throw ParameterError("point dim does not match prior");
  if (cluster < 0) throw ParameterError("cluster ids are nonnegative");
  auto [it, inserted] = clusters_.try_emplace(cluster);
  ClusterStats &s = it->second;
  if (inserted) {
    s.sum = Vector::Zero(x.size());
    s.outer = Matrix::Zero(x.size(), x.size());
    if (cluster >= next_id_) next_id_ = cluster + 1;
  }
  s.count++;
  s.sum += x;
  s.outer.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
  cache_.erase(cluster);
}

void DpgmmState::RemoveFromCluster(int cluster, const Vector &x) {
  auto it = clusters_.find(cluster);
  if (it == clusters_.end() || it->second.count <= 0)
    throw InternalLogicError("remove from empty or missing cluster " + std::to_string(cluster));
  ClusterStats &s = it->second;
  s.count--;
  cache_.erase(cluster);
  if (s.count == 0) {
    clusters_.erase(it);
    return;
  }
  s.sum -= x;
  s.outer.selfadjointView<Eigen::Lower>().rankUpdate(x, -1.0);
}

void DpgmmState::AddPoint(int index, int cluster, const Vector &x) {
  if (index < 0 || index >= NumPoints()) throw ParameterError("point index out of range");
  if (assignments_[index] != kUnassigned)
    throw InternalLogicError("point " + std::to_string(index) + " is already assigned");
  AddToCluster(cluster, x);
  assignments_[index] = cluster;
}

void DpgmmState::RemovePoint(int index, const Vector &x) {
  if (index < 0 || index >= NumPoints()) throw ParameterError("point index out of range");
  if (assignments_[index] == kUnassigned)
    throw InternalLogicError("point " + std::to_string(index) + " is not assigned");
  RemoveFromCluster(assignments_[index], x);
  assignments_[index] = kUnassigned;
}

DpgmmState::Predictive DpgmmState::BuildPredictive(const ClusterStats *stats) const {
  const int d = prior_.Dim();
  const double n = stats ? stats->count : 0.0;
  const double kn = prior_.k0 + n;
  const double vn = prior_.v0 + n;
  Predictive p;
  Matrix scatter;
  if (stats) {
    p.location = (prior_.k0 * prior_.m0 + stats->sum) / kn;
    // S_n = S0 + sum x x^T + k0 m0 m0^T - kn mn mn^T (outer kept lower-only).
    scatter = prior_.S0;
    scatter += stats->outer.selfadjointView<Eigen::Lower>();
    scatter += prior_.k0 * prior_.m0 * prior_.m0.transpose();
    scatter -= kn * p.location * p.location.transpose();
  } else {
    p.location = prior_.m0;
    scatter = prior_.S0;
  }
  p.dof = vn - d + 1.0;
  const Matrix scale = scatter * ((kn + 1.0) / (kn * p.dof));
  p.chol.compute(scale);
  if (p.chol.info() != Eigen::Success)
    throw InternalLogicError("predictive scale matrix is not positive definite");
  const double logdet = 2.0 * p.chol.matrixLLT().diagonal().array().log().sum();
  p.log_norm = std::lgamma(0.5 * (p.dof + d)) - std::lgamma(0.5 * p.dof) -
               0.5 * d * std::log(p.dof * std::numbers::pi) - 0.5 * logdet;
  return p;
}

double DpgmmState::EvalPredictive(const Predictive &p, const Vector &x) const {
  const int d = prior_.Dim();
  Vector r = x - p.location;
  p.chol.matrixL().solveInPlace(r);
  return p.log_norm - 0.5 * (p.dof + d) * std::log1p(r.squaredNorm() / p.dof);
}

const DpgmmState::Predictive &DpgmmState::CachedPredictive(int cluster) const {
  auto it = cache_.find(cluster);
  if (it != cache_.end()) return it->second;
  auto cl = clusters_.find(cluster);
  if (cl == clusters_.end()) throw LookupError("no cluster " + std::to_string(cluster));
  return cache_.emplace(cluster, BuildPredictive(&cl->second)).first->second;
}

double DpgmmState::PredictiveLogPdf(int cluster, const Vector &x) const {
  if (x.size() != prior_.Dim()) throw ParameterError("point dim does not match prior");
  if (cluster == kNewCluster) return EvalPredictive(new_cluster_, x);
  return EvalPredictive(CachedPredictive(cluster), x);
}

void DpgmmState::GibbsSweep(const Matrix &data) {
  if (data.rows() != NumPoints() || data.cols() != prior_.Dim())
    throw ParameterError("data does not match the sampler state");
  std::mt19937_64 rng(MixSeed(seed_, static_cast<uint64_t>(sweeps_done_)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> ids;
  std::vector<double> logw;
  const double log_alpha = std::log(alpha_);
  for (int i = 0; i < NumPoints(); i++) {
    const Vector x = data.row(i).transpose();
    if (assignments_[i] != kUnassigned) RemovePoint(i, x);
    ids.clear();
    logw.clear();
    for (const auto &[id, stats] : clusters_) {
      ids.push_back(id);
      logw.push_back(std::log(static_cast<double>(stats.count)) + PredictiveLogPdf(id, x));
    }
    ids.push_back(kNewCluster);
    logw.push_back(log_alpha + PredictiveLogPdf(kNewCluster, x));

    double mx = -std::numeric_limits<double>::infinity();
    for (double w : logw) mx = std::max(mx, w);
    double total = 0.0;
    for (double &w : logw) {
      w = std::exp(w - mx);
      total += w;
    }
    double u = unif(rng) * total;
    std::size_t pick = 0;
    for (; pick + 1 < logw.size(); pick++) {
      u -= logw[pick];
      if (u < 0.0) break;
    }
    const int target = ids[pick] == kNewCluster ? NewClusterId() : ids[pick];
    AddPoint(i, target, x);
  }
  sweeps_done_++;
}

double DpgmmState::ConsistencyError(const Matrix &data) const {
  std::map<int, ClusterStats> batch;
  for (int i = 0; i < NumPoints(); i++) {
    if (assignments_[i] == kUnassigned) continue;
    ClusterStats &s = batch[assignments_[i]];
    const Vector x = data.row(i).transpose();
    if (s.count == 0) {
      s.sum = Vector::Zero(x.size());
      s.outer = Matrix::Zero(x.size(), x.size());
    }
    s.count++;
    s.sum += x;
    s.outer += x * x.transpose();
  }
  if (batch.size() != clusters_.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (const auto &[id, s] : batch) {
    auto it = clusters_.find(id);
    if (it == clusters_.end() || it->second.count != s.count)
      return std::numeric_limits<double>::infinity();
    Matrix inc = it->second.outer.selfadjointView<Eigen::Lower>();
    err = std::max(err, (it->second.sum - s.sum).cwiseAbs().maxCoeff());
    err = std::max(err, (inc - s.outer).cwiseAbs().maxCoeff());
  }
  return err;
}

std::vector<int> DenseRelabel(const std::vector<int> &labels, int *num_labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  if (num_labels) *num_labels = static_cast<int>(remap.size());
  return out;
}

ClusteringResult RunClustering(const Matrix &features, int iters, double alpha,
                               uint64_t seed, const std::optional<NiwPrior> &prior,
                               ClusterInit init) {
  if (features.rows() < 1) throw ParameterError("clustering needs at least one frame");
  if (iters < 1) throw ParameterError("clustering needs at least one iteration");
  DpgmmState state(prior ? *prior : NiwPrior::FromData(features), alpha,
                   static_cast<int>(features.rows()), seed);
  if (init == ClusterInit::kOneCluster) {
    const int first = state.NewClusterId();
    for (int i = 0; i < features.rows(); i++)
      state.AddPoint(i, first, features.row(i).transpose());
  }
  ClusteringResult res;
  for (int it = 0; it < iters; it++) {
    state.GibbsSweep(features);
    res.clusters_per_sweep.push_back(state.NumClusters());
    res.max_consistency_error =
        std::max(res.max_consistency_error, state.ConsistencyError(features));
  }
  res.labels = DenseRelabel(state.assignments(), &res.num_clusters);
  return res;
}

double AdjustedRandIndex(const std::vector<int> &a, const std::vector<int> &b) {
  if (a.size() != b.size()) throw ParameterError("label vectors differ in length");
  std::map<std::pair<int, int>, int64_t> table;
  std::map<int, int64_t> rows, cols;
  for (std::size_t i = 0; i < a.size(); i++) {
    table[{a[i], b[i]}]++;
    rows[a[i]]++;
    cols[b[i]]++;
  }
  auto choose2 = [](int64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); };
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (const auto &[k, n] : table) sum_ij += choose2(n);
  for (const auto &[k, n] : rows) sum_a += choose2(n);
  for (const auto &[k, n] : cols) sum_b += choose2(n);
  const double total = choose2(static_cast<int64_t>(a.size()));
  const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

void WriteClusterSummary(std::ostream &os, const Matrix &features,
                         const std::vector<int> &labels) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw ParameterError("label count does not match features");
  std::map<int, std::pair<int64_t, Vector>> acc;
  for (std::size_t i = 0; i < labels.size(); i++) {
    auto &[n, sum] = acc[labels[i]];
    if (n == 0) sum = Vector::Zero(features.cols());
    n++;
    sum += features.row(static_cast<Eigen::Index>(i)).transpose();
  }
  for (const auto &[id, entry] : acc)
    os << id << ' ' << entry.first << ' ' << std::fixed << std::setprecision(6)
       << (entry.second / static_cast<double>(entry.first)).norm() << '\n';
  os.unsetf(std::ios::floatfield);
}

}  // namespace unitdisc
