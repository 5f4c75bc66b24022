// unitdisc/pipeline.h

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

#ifndef UNITDISC_PIPELINE_H_
#define UNITDISC_PIPELINE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "unitdisc/config.h"

namespace unitdisc {

// Raised when a stage is run before an upstream artifact exists.
class DependencyError : public std::runtime_error {
 public:
  DependencyError(const std::string &missing, const std::string &needed_by);
  const std::string &missing_stage() const { return missing_; }

 private:
  std::string missing_;
};

struct StageArtifact {
  std::string stage;
  std::string input_digest;
  std::vector<std::pair<std::string, std::string>> upstream;  // stage, output digest
  std::vector<std::string> outputs;                           // file paths
  std::string output_digest;
  uint64_t seed = 0;
  double wall_seconds = 0.0;
  bool reused = false;

  // Path of the output whose file name is `name`; throws LookupError.
  const std::string &Output(const std::string &name) const;
};

// gen-corpus, train-fhvae, reconstruct, cluster, train-amtl, infer-units,
// smooth, eval-abx, bitrate.
const std::vector<std::string> &StageNames();

// Stage runner over one config. Artifacts live under
// <out_dir>/artifacts/<stage>-<digest>/ and are described by manifests in
// <out_dir>/stages/. A stage's input digest covers its config sections, its
// seed and the output digests of its upstream stages, so a stage re-runs
// only when one of those changes.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig &config() const { return config_; }
  void set_log(std::ostream *log) { log_ = log; }

  // Stages this one reads from under the current config.
  std::vector<std::string> Upstream(const std::string &stage) const;
  // Throws DependencyError when an upstream artifact is missing.
  std::string InputDigest(const std::string &stage) const;
  // Valid artifact for the current inputs, if present.
  std::optional<StageArtifact> Find(const std::string &stage) const;

  // Runs one stage (no-op when a valid artifact exists). Upstream artifacts
  // must already exist.
  StageArtifact RunStage(const std::string &stage);
  // Runs the stage after building whatever upstream is missing.
  StageArtifact Build(const std::string &stage);
  // Builds every stage and writes <out_dir>/report.txt.
  std::vector<StageArtifact> RunAll();

 private:
  std::vector<std::string> Execute(const std::string &stage, const std::string &dir,
                                   uint64_t seed);
  std::string ManifestPath(const std::string &stage, const std::string &digest) const;
  StageArtifact Require(const std::string &stage, const std::string &needed_by) const;

  PipelineConfig config_;
  std::ostream *log_ = nullptr;
};

// Final summary of a run-all: config, digests, ABX, bitrate.
void WriteRunReport(std::ostream &os, const Pipeline &pipeline);

struct AbxRates {
  double within = 0.0, across = 0.0;  // percent
};
struct AbxSummary {
  AbxRates bnf, pg, units;
};
// Reads abx-summary.csv of an eval-abx artifact.
AbxSummary ReadAbxSummary(const StageArtifact &eval_abx);
// Reads bitrate.txt of a bitrate artifact (bits per second).
double ReadBitrate(const StageArtifact &bitrate);

struct SweepRow {
  double lambda = 0.0;
  double bnf_within = 0.0, bnf_across = 0.0;
  double pg_within = 0.0, pg_across = 0.0;
  double units_within = 0.0, units_across = 0.0;
  double bitrate = 0.0;
  std::string amtl_digest;
};

struct SweepResult {
  LabelSource label_source = LabelSource::kReconstructed;
  std::vector<SweepRow> rows;
};

// One AMTL model per lambda in the grid on shared upstream artifacts.
// Writes <out_dir>/sweep-lambda-<label source>.{txt,csv}.
SweepResult RunLambdaSweep(const PipelineConfig &config, std::ostream *log = nullptr);

// Smallest-lambda row among the lambda > 0 rows with the lowest across-speaker
// BNF error; throws ParameterError when the grid has no lambda > 0.
double BestLambda(const SweepResult &sweep);

struct ComparisonRow {
  LabelSource label_source = LabelSource::kRaw;
  double lambda = 0.0;
  double across = 0.0;  // BNF ABX, percent
  double within = 0.0;
  std::string eval_digest;
  // Output digest of every stage in this row's chain.
  std::vector<std::pair<std::string, std::string>> digests;
};

struct ComparisonResult {
  double best_lambda = 0.0;
  std::vector<ComparisonRow> rows;  // raw/0, raw/best, reconstructed/0, reconstructed/best
};

// Label source x lambda table. Writes <out_dir>/compare-labels.txt.
ComparisonResult RunAbComparison(const PipelineConfig &config, std::ostream *log = nullptr);

void WriteSweep(std::ostream &os, const SweepResult &sweep, const PipelineConfig &config);
void WriteSweepCsv(std::ostream &os, const SweepResult &sweep);
void WriteComparison(std::ostream &os, const ComparisonResult &cmp, const PipelineConfig &config);

}  // namespace unitdisc

#endif  // UNITDISC_PIPELINE_H_
