// tests/pipeline-test.cc

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "unitdisc/digest.h"
#include "unitdisc/pipeline.h"

using namespace unitdisc;
namespace fs = std::filesystem;

namespace {

// Seconds-scale chain: a handful of short utterances, tiny networks.
PipelineConfig TinyConfig(const std::string &name) {
  PipelineConfig c;
  c.corpus.n_phones = 4;
  c.corpus.n_speakers = 3;
  c.corpus.utt_per_speaker = 2;
  c.corpus.phones_per_utt = 8;
  c.corpus.feat_dim = 4;
  c.corpus.speaker_shift_scale = 2.0;
  c.corpus.noise_std = 0.1;
  c.fhvae.hidden = {16};
  c.fhvae.z1_dim = 4;
  c.fhvae.z2_dim = 4;
  c.fhvae.epochs = 2;
  c.dpgmm.iters = 3;
  c.amtl.hidden = {16};
  c.amtl.head_hidden = 16;
  c.amtl.bottleneck_dim = 4;
  c.amtl.context = 2;
  c.amtl.epochs = 1;
  c.amtl.batch_size = 32;
  c.amtl.lr_start = 0.05;
  c.amtl.lr_end = 0.01;
  c.lambda_grid = {0.0, 0.1};
  c.abx.max_triplets = 300;
  c.out_dir = (fs::temp_directory_path() / ("unitdisc-pipeline-test-" + name)).string();
  fs::remove_all(c.out_dir);
  return c;
}

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config text round trip and errors") {
  PipelineConfig c = TinyConfig("config");
  c.amtl.lambda = 0.1;
  c.smooth = true;
  c.label_source = LabelSource::kRaw;
  std::istringstream is(ConfigText(c));
  PipelineConfig back = ParseConfig(is);
  CHECK(ConfigText(back) == ConfigText(c));
  CHECK(back.amtl.lambda == 0.1);
  CHECK(back.fhvae.hidden == std::vector<int>{16});

  std::istringstream unknown("[amtl]\nlamda = 0.1\n");
  CHECK_THROWS_AS(ParseConfig(unknown), ParameterError);
  std::istringstream outside("seed = 3\n");
  CHECK_THROWS_AS(ParseConfig(outside), FormatError);
  std::istringstream negative("[amtl]\nlambda_grid = 0, -0.1\n");
  CHECK_THROWS_AS(ParseConfig(negative), ParameterError);
  std::istringstream comments("# note\n[run]\n; other note\nseed = 7\n");
  CHECK(ParseConfig(comments).seed == 7);
}

TEST_CASE("stage seeds are stable and distinct") {
  CHECK(StageSeed(1, "cluster") == StageSeed(1, "cluster"));
  CHECK(StageSeed(1, "cluster") != StageSeed(2, "cluster"));
  CHECK(StageSeed(1, "cluster") != StageSeed(1, "train-amtl"));
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("second gen-corpus run is a no-op") {
  Pipeline p(TinyConfig("cache"));
  StageArtifact first = p.RunStage("gen-corpus");
  CHECK_FALSE(first.reused);
  auto stamp = fs::last_write_time(first.Output("corpus.fea"));
  StageArtifact second = p.RunStage("gen-corpus");
  CHECK(second.reused);
  CHECK(second.input_digest == first.input_digest);
  CHECK(second.output_digest == first.output_digest);
  CHECK(fs::last_write_time(second.Output("corpus.fea")) == stamp);

  // A different corpus spec changes the digest and the artifact.
  PipelineConfig other = p.config();
  other.corpus.noise_std = 0.2;
  Pipeline q(other);
  CHECK(q.InputDigest("gen-corpus") != first.input_digest);
  CHECK_FALSE(q.Find("gen-corpus").has_value());
}

TEST_CASE("missing upstream raises a dependency error") {
  Pipeline p(TinyConfig("deps"));
  try {
    p.RunStage("gen-corpus");
    p.RunStage("cluster");
    FAIL("no dependency error");
  } catch (const DependencyError &e) {
    CHECK(e.missing_stage() == "reconstruct");
    CHECK(std::string(e.what()).find("reconstruct") != std::string::npos);
  }
  PipelineConfig raw = TinyConfig("deps-raw");
  raw.label_source = LabelSource::kRaw;
  Pipeline r(raw);
  CHECK_THROWS_AS(r.RunStage("train-fhvae"), DependencyError);
  r.RunStage("gen-corpus");
  CHECK_NOTHROW(r.RunStage("cluster"));
  CHECK_THROWS_AS(r.RunStage("eval-abx"), DependencyError);
  CHECK_THROWS_AS(p.RunStage("no-such-stage"), ParameterError);
}

TEST_CASE("full chain, caching, regeneration and reproducibility") {
  PipelineConfig c = TinyConfig("chain");
  Pipeline p(c);
  std::vector<StageArtifact> arts = p.RunAll();
  REQUIRE(arts.size() == StageNames().size());
  StageArtifact eval = *p.Find("eval-abx");
  for (const char *f : {"abx-bnf.txt", "abx-bnf.csv", "abx-pg.txt", "abx-units.txt",
                        "abx-summary.csv"})
    CHECK(fs::file_size(eval.Output(f)) > 0);
  CHECK(Slurp(eval.Output("abx-bnf.txt")).find("across") != std::string::npos);
  std::string report = Slurp((fs::path(c.out_dir) / "report.txt").string());
  CHECK(report.find("bitrate = ") != std::string::npos);

  // Everything is cached on a second pass.
  for (const StageArtifact &a : p.RunAll()) CHECK(a.reused);
  CHECK(Slurp((fs::path(c.out_dir) / "report.txt").string()) == report);

  // Deleted intermediates come back byte-identical.
  StageArtifact amtl = *p.Find("train-amtl");
  StageArtifact cluster = *p.Find("cluster");
  std::string amtl_bytes = Slurp(amtl.Output("amtl.bin"));
  std::string label_bytes = Slurp(cluster.Output("labels.lab"));
  fs::remove(amtl.Output("amtl.bin"));
  fs::remove(cluster.Output("labels.lab"));
  CHECK_FALSE(p.Find("cluster").has_value());
  CHECK_THROWS_AS(p.RunStage("train-amtl"), DependencyError);
  p.Build("eval-abx");
  CHECK(Slurp(amtl.Output("amtl.bin")) == amtl_bytes);
  CHECK(Slurp(cluster.Output("labels.lab")) == label_bytes);
  CHECK(p.Find("eval-abx")->reused);

  // An ABX-only change leaves training artifacts alone.
  PipelineConfig abx_only = c;
  abx_only.abx.max_triplets = 200;
  Pipeline q(abx_only);
  CHECK(q.Find("train-amtl").has_value());
  CHECK_FALSE(q.Find("eval-abx").has_value());

  // Fresh output directory, same config and seed: identical report.
  PipelineConfig again = TinyConfig("chain-again");
  Pipeline p2(again);
  p2.RunAll();
  CHECK(Slurp((fs::path(again.out_dir) / "report.txt").string()) == report);
}

TEST_CASE("lambda sweep: zero row equals training without the speaker branch") {
  PipelineConfig c = TinyConfig("sweep");
  c.label_source = LabelSource::kRaw;
  SweepResult sweep = RunLambdaSweep(c);
  REQUIRE(sweep.rows.size() == 2);
  CHECK(sweep.rows[0].lambda == 0.0);
  CHECK(sweep.rows[0].amtl_digest != sweep.rows[1].amtl_digest);
  CHECK(fs::exists(fs::path(c.out_dir) / "sweep-lambda-raw.csv"));

  PipelineConfig zero = c;
  zero.amtl.lambda = 0.0;
  PipelineConfig plain = c;
  plain.amtl.speaker_branch = false;
  Pipeline pz(zero), pp(plain);
  StageArtifact a = pz.Build("infer-units"), b = pp.Build("infer-units");
  CHECK(a.input_digest != b.input_digest);
  CHECK(Slurp(a.Output("bnf.fea")) == Slurp(b.Output("bnf.fea")));
  CHECK(Slurp(a.Output("pg.fea")) == Slurp(b.Output("pg.fea")));

  SweepResult again = RunLambdaSweep(c);
  for (size_t i = 0; i < sweep.rows.size(); i++) {
    CHECK(again.rows[i].bnf_across == sweep.rows[i].bnf_across);
    CHECK(again.rows[i].amtl_digest == sweep.rows[i].amtl_digest);
  }
  CHECK(BestLambda(sweep) == 0.1);
  SweepResult only_zero;
  only_zero.rows.push_back(sweep.rows[0]);
  CHECK_THROWS_AS(BestLambda(only_zero), ParameterError);
}

TEST_CASE("label comparison table") {
  PipelineConfig c = TinyConfig("compare");
  c.best_lambda = 0.1;
  ComparisonResult cmp = RunAbComparison(c);
  REQUIRE(cmp.rows.size() == 4);
  CHECK(cmp.rows[0].label_source == LabelSource::kRaw);
  CHECK(cmp.rows[2].label_source == LabelSource::kReconstructed);
  CHECK(cmp.rows[0].lambda == 0.0);
  CHECK(cmp.rows[1].lambda == 0.1);
  std::string txt = Slurp((fs::path(c.out_dir) / "compare-labels.txt").string());
  CHECK(txt.find("best_lambda = 0.10000000000000001") != std::string::npos);
  for (const ComparisonRow &r : cmp.rows) {
    CHECK(txt.find(r.eval_digest) != std::string::npos);
    CHECK(r.digests.size() ==
          (r.label_source == LabelSource::kRaw ? 5u : 7u));
    for (const auto &d : r.digests) CHECK(txt.find(d.second) != std::string::npos);
  }
  CHECK(txt.find("seed = 1") != std::string::npos);
}
