// unitdisc/dpgmm.h

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

#ifndef UNITDISC_DPGMM_H_
#define UNITDISC_DPGMM_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "unitdisc/common.h"

namespace unitdisc {

// Normal-inverse-Wishart prior over (mean, covariance) of each component.
struct NiwPrior {
  Vector m0;
  double k0 = 1.0;
  double v0 = 0.0;  // must exceed dim - 1
  Matrix S0;        // positive definite scatter

  int Dim() const { return static_cast<int>(m0.size()); }
  void Check() const;

  // m0 = data mean, v0 = dim + 3, S0 = scatter_scale * diag(data variances).
  // `data` is n_points x dim.
  static NiwPrior FromData(const Matrix &data, double scatter_scale = 0.1,
                           double k0 = 0.01);
};

// Sufficient statistics of one component.
struct ClusterStats {
  int count = 0;
  Vector sum;
  Matrix outer;  // sum of x x^T
};

// Collapsed Gibbs state of a Dirichlet-process Gaussian mixture.
class DpgmmState {
 public:
  static constexpr int kNewCluster = -1;
  static constexpr int kUnassigned = -1;

  DpgmmState(NiwPrior prior, double alpha, int n_points, uint64_t seed);

  const NiwPrior &prior() const { return prior_; }
  double alpha() const { return alpha_; }
  uint64_t seed() const { return seed_; }
  int sweeps_done() const { return sweeps_done_; }
  int NumClusters() const { return static_cast<int>(clusters_.size()); }
  int NumPoints() const { return static_cast<int>(assignments_.size()); }
  const std::vector<int> &assignments() const { return assignments_; }
  const std::map<int, ClusterStats> &clusters() const { return clusters_; }

  // Fresh id for a cluster that does not exist yet.
  int NewClusterId() { return next_id_++; }

  // Adds x (point `index`) to `cluster`, creating it when absent. The point
  // must be unassigned.
  void AddPoint(int index, int cluster, const Vector &x);
  // Removes point `index` (currently in its assigned cluster). A cluster that
  // loses its last point is deleted. Throws InternalLogicError on count
  // underflow or when the point is not assigned.
  void RemovePoint(int index, const Vector &x);

  // Statistics-only variants that do not touch the assignment vector.
  void AddToCluster(int cluster, const Vector &x);
  void RemoveFromCluster(int cluster, const Vector &x);

  // log of the multivariate Student-t posterior predictive of `cluster` at x;
  // kNewCluster uses the prior alone.
  double PredictiveLogPdf(int cluster, const Vector &x) const;

  // One pass over the points in index order: remove, resample from
  // n_k * pred_k(x) and alpha * pred_new(x), reinsert. The RNG stream is a
  // function of (seed, sweep index).
  void GibbsSweep(const Matrix &data);

  // Max absolute difference between incremental statistics and a batch
  // recomputation from the assignments (infinity on count mismatch).
  double ConsistencyError(const Matrix &data) const;

 private:
  struct Predictive {
    Vector location;
    Eigen::LLT<Matrix> chol;  // of the Student-t scale matrix
    double dof = 0.0;
    double log_norm = 0.0;    // everything except the quadratic term
  };
  Predictive BuildPredictive(const ClusterStats *stats) const;
  double EvalPredictive(const Predictive &p, const Vector &x) const;
  const Predictive &CachedPredictive(int cluster) const;

  NiwPrior prior_;
  double alpha_;
  uint64_t seed_;
  int sweeps_done_ = 0;
  int next_id_ = 0;
  std::vector<int> assignments_;
  std::map<int, ClusterStats> clusters_;
  Predictive new_cluster_;
  mutable std::map<int, Predictive> cache_;
};

struct ClusteringResult {
  std::vector<int> labels;  // dense ids in order of first appearance
  int num_clusters = 0;
  std::vector<int> clusters_per_sweep;
  double max_consistency_error = 0.0;  // over all sweeps
};

// kOneCluster puts every point in one cluster before the first sweep.
// kSequential starts from no assignments, so the first sweep seats points
// one at a time as in the Chinese restaurant process.
enum class ClusterInit { kOneCluster, kSequential };

// `iters` sweeps over n_points x dim features. When `prior` is unset
// NiwPrior::FromData is used.
ClusteringResult RunClustering(const Matrix &features, int iters, double alpha,
                               uint64_t seed,
                               const std::optional<NiwPrior> &prior = std::nullopt,
                               ClusterInit init = ClusterInit::kOneCluster);

// Renumbers ids densely by first appearance.
std::vector<int> DenseRelabel(const std::vector<int> &labels, int *num_labels = nullptr);

double AdjustedRandIndex(const std::vector<int> &a, const std::vector<int> &b);

// Text summary, one line per cluster: "id count mean_norm".
void WriteClusterSummary(std::ostream &os, const Matrix &features,
                         const std::vector<int> &labels);

}  // namespace unitdisc

#endif  // UNITDISC_DPGMM_H_
