// unitdisc/config.h

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

#ifndef UNITDISC_CONFIG_H_
#define UNITDISC_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "unitdisc/abx.h"
#include "unitdisc/amtl.h"
#include "unitdisc/corpus.h"
#include "unitdisc/dpgmm.h"
#include "unitdisc/fhvae.h"
#include "unitdisc/units.h"

namespace unitdisc {

struct DpgmmSettings {
  double alpha = 1.0;
  int iters = 20;
  ClusterInit init = ClusterInit::kSequential;
  double scatter_scale = 0.1;
  double k0 = 0.01;
  bool deltas = false;  // append delta and delta-delta before clustering
};

// Which features the frame labels are clustered from.
enum class LabelSource { kRaw, kReconstructed };

// Normalization of the AMTL input features.
enum class InputNorm { kCorpusCmvn, kSpeakerCmn, kSpeakerCmvn };

struct PipelineConfig {
  SyntheticSpec corpus;
  FhvaeConfig fhvae;
  DpgmmSettings dpgmm;
  LabelSource label_source = LabelSource::kReconstructed;
  AmtlConfig amtl;
  InputNorm amtl_input = InputNorm::kCorpusCmvn;
  std::vector<double> lambda_grid = {0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12};
  double best_lambda = -1.0;  // < 0: chosen by a sweep under raw labels
  bool smooth = false;
  SmoothRule smooth_rule = SmoothRule::kOr;
  AbxSettings abx;
  std::string out_dir = "unitdisc-out";
  uint64_t seed = 1;

  void Check() const;
};

// INI text: "[section]" headers and "key = value" lines, '#' or ';'
// comments. Unknown sections or keys are errors. Lists are comma separated.
PipelineConfig ParseConfig(std::istream &is);
PipelineConfig LoadConfig(const std::string &path);

// Canonical "key = value" dump of one section ("corpus", "fhvae", "dpgmm",
// "amtl", "units", "abx", "run"); used for digests and provenance.
std::string SectionText(const PipelineConfig &config, const std::string &section);
// All sections, parseable by ParseConfig.
std::string ConfigText(const PipelineConfig &config);

const char *LabelSourceName(LabelSource s);
const char *InputNormName(InputNorm n);

}  // namespace unitdisc

#endif  // UNITDISC_CONFIG_H_
