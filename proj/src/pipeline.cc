// src/pipeline.cc

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

#include "unitdisc/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "unitdisc/abx.h"
#include "unitdisc/amtl.h"
#include "unitdisc/corpus.h"
#include "unitdisc/digest.h"
#include "unitdisc/dpgmm.h"
#include "unitdisc/feature-io.h"
#include "unitdisc/fhvae.h"
#include "unitdisc/units.h"

namespace unitdisc {

namespace fs = std::filesystem;
using nlohmann::json;

DependencyError::DependencyError(const std::string &missing, const std::string &needed_by)
    : std::runtime_error("stage '" + needed_by + "' needs the '" + missing +
                         "' artifact, which has not been built"),
      missing_(missing) {}

const std::string &StageArtifact::Output(const std::string &name) const {
  for (const std::string &p : outputs)
    if (fs::path(p).filename() == name) return p;
  throw LookupError("stage " + stage + " has no output " + name);
}

const std::vector<std::string> &StageNames() {
  static const std::vector<std::string> names = {
      "gen-corpus", "train-fhvae", "reconstruct", "cluster", "train-amtl",
      "infer-units", "smooth", "eval-abx", "bitrate"};
  return names;
}

namespace {

std::string Fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path);
  os << text;
  if (!os) throw FormatError("write failed: " + path);
}

std::string ReadText(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Section text without the keys that only steer sweeps.
std::string AmtlDigestText(const PipelineConfig &config) {
  std::istringstream is(SectionText(config, "amtl"));
  std::string line, out;
  while (std::getline(is, line))
    if (line.rfind("lambda_grid ", 0) != 0 && line.rfind("best_lambda ", 0) != 0)
      out += line + "\n";
  return out;
}

std::string StageConfigText(const PipelineConfig &config, const std::string &stage) {
  if (stage == "gen-corpus") return SectionText(config, "corpus");
  if (stage == "train-fhvae") return SectionText(config, "fhvae");
  if (stage == "cluster") return SectionText(config, "dpgmm");
  if (stage == "train-amtl") return AmtlDigestText(config);
  if (stage == "smooth")
    return std::string("rule = ") + (config.smooth_rule == SmoothRule::kOr ? "or" : "xor") + "\n";
  if (stage == "eval-abx")
    return SectionText(config, "abx") + std::string("smooth = ") +
           (config.smooth ? "true" : "false") + "\n";
  if (stage == "bitrate")
    return std::string("smooth = ") + (config.smooth ? "true" : "false") + "\n";
  return "";
}

Corpus LoadCorpus(const StageArtifact &gen, const PipelineConfig &config) {
  LabelTable phones = ReadLabelFile(gen.Output("phones.lab"));
  Corpus c = EntriesToCorpus(ReadFeatureArchive(gen.Output("corpus.fea")), &phones);
  c.frame_rate = config.corpus.frame_rate;
  return c;
}

// Same utterances and speakers as `like`, frames from the archive.
Corpus WithFrames(const Corpus &like, const std::string &archive) {
  std::vector<FeatureEntry> entries = ReadFeatureArchive(archive);
  std::map<std::string, Matrix> by_id;
  for (FeatureEntry &e : entries) by_id[e.id] = std::move(e.frames);
  Corpus c = like;
  for (Utterance &u : c.utterances) {
    auto it = by_id.find(u.utt_id);
    if (it == by_id.end()) throw LookupError("archive " + archive + " lacks " + u.utt_id);
    if (it->second.rows() != u.NumFrames())
      throw FormatError("frame count mismatch for " + u.utt_id + " in " + archive);
    u.frames = it->second;
  }
  return c;
}

std::vector<FeatureEntry> Entries(const Corpus &like, const FeatureMap &features) {
  std::vector<FeatureEntry> out;
  for (const Utterance &u : like.utterances)
    out.push_back({u.utt_id, u.speaker_id, features.at(u.utt_id)});
  return out;
}

FeatureMap ReadFeatureMap(const std::string &archive) {
  FeatureMap m;
  for (FeatureEntry &e : ReadFeatureArchive(archive)) m[e.id] = std::move(e.frames);
  return m;
}

// Input to the FHVAE and to raw-feature clustering.
Corpus FhvaeInput(const Corpus &raw) { return CorpusCmvn(SpeakerCmn(raw)); }

Corpus AmtlInput(const Corpus &raw, InputNorm norm) {
  switch (norm) {
    case InputNorm::kCorpusCmvn: return CorpusCmvn(raw);
    case InputNorm::kSpeakerCmn: return SpeakerCmn(raw);
    case InputNorm::kSpeakerCmvn: return SpeakerCmvn(raw);
  }
  throw ParameterError("bad input normalization");
}

Matrix StackFrames(const Corpus &c, bool deltas) {
  int dim = c.Dim() * (deltas ? 3 : 1);
  Matrix m(c.TotalFrames(), dim);
  int64_t r = 0;
  for (const Utterance &u : c.utterances) {
    Matrix f = deltas ? AddDeltas(u.frames) : u.frames;
    m.middleRows(r, f.rows()) = f;
    r += f.rows();
  }
  return m;
}

std::map<std::string, std::vector<int>> LabelMap(const LabelTable &t) {
  std::map<std::string, std::vector<int>> m;
  for (const auto &[id, labels] : t) m[id] = labels;
  return m;
}

Transcription ReadTranscriptionFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read " + path);
  return ReadTranscription(is);
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  config_.Check();
}

std::vector<std::string> Pipeline::Upstream(const std::string &stage) const {
  if (stage == "gen-corpus") return {};
  if (stage == "train-fhvae") return {"gen-corpus"};
  if (stage == "reconstruct") return {"gen-corpus", "train-fhvae"};
  if (stage == "cluster")
    return {config_.label_source == LabelSource::kRaw ? "gen-corpus" : "reconstruct"};
  if (stage == "train-amtl") return {"gen-corpus", "cluster"};
  if (stage == "infer-units") return {"gen-corpus", "train-amtl"};
  if (stage == "smooth") return {"infer-units"};
  if (stage == "eval-abx" || stage == "bitrate") {
    std::vector<std::string> up = {"gen-corpus", "infer-units"};
    if (config_.smooth) up.push_back("smooth");
    return up;
  }
  throw ParameterError("unknown stage '" + stage + "'");
}

std::string Pipeline::ManifestPath(const std::string &stage, const std::string &digest) const {
  return (fs::path(config_.out_dir) / "stages" / (stage + "-" + digest.substr(0, 16) + ".json"))
      .string();
}

StageArtifact Pipeline::Require(const std::string &stage, const std::string &needed_by) const {
  std::optional<StageArtifact> a = Find(stage);
  if (!a) throw DependencyError(stage, needed_by);
  return *a;
}

std::string Pipeline::InputDigest(const std::string &stage) const {
  Sha256 h;
  h.Update("stage=" + stage + "\n");
  h.Update("seed=" + std::to_string(StageSeed(config_.seed, stage)) + "\n");
  h.Update(StageConfigText(config_, stage));
  for (const std::string &up : Upstream(stage))
    h.Update("upstream " + up + " " + Require(up, stage).output_digest + "\n");
  return h.HexDigest();
}

std::optional<StageArtifact> Pipeline::Find(const std::string &stage) const {
  std::string digest;
  try {
    digest = InputDigest(stage);
  } catch (const DependencyError &) {
    return std::nullopt;
  }
  std::string path = ManifestPath(stage, digest);
  if (!fs::exists(path)) return std::nullopt;
  json j;
  try {
    j = json::parse(ReadText(path));
  } catch (const json::exception &) {
    return std::nullopt;
  }
  StageArtifact a;
  a.stage = j.at("stage").get<std::string>();
  a.input_digest = j.at("input_digest").get<std::string>();
  if (a.stage != stage || a.input_digest != digest) return std::nullopt;
  for (const auto &u : j.at("upstream"))
    a.upstream.emplace_back(u.at(0).get<std::string>(), u.at(1).get<std::string>());
  for (const auto &o : j.at("outputs")) {
    std::string p = (fs::path(config_.out_dir) / o.get<std::string>()).string();
    if (!fs::exists(p)) return std::nullopt;
    a.outputs.push_back(p);
  }
  a.output_digest = j.at("output_digest").get<std::string>();
  a.seed = j.at("seed").get<uint64_t>();
  a.wall_seconds = j.at("wall_seconds").get<double>();
  if (Sha256Files(a.outputs) != a.output_digest) return std::nullopt;
  a.reused = true;
  return a;
}

StageArtifact Pipeline::RunStage(const std::string &stage) {
  std::vector<std::pair<std::string, std::string>> upstream;
  for (const std::string &up : Upstream(stage))
    upstream.emplace_back(up, Require(up, stage).output_digest);
  std::string digest = InputDigest(stage);
  if (std::optional<StageArtifact> found = Find(stage)) {
    if (log_) *log_ << "[" << stage << "] up to date (" << digest.substr(0, 16) << ")\n";
    return *found;
  }
  std::string rel_dir = (fs::path("artifacts") / (stage + "-" + digest.substr(0, 16))).string();
  fs::path dir = fs::path(config_.out_dir) / rel_dir;
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::create_directories(fs::path(config_.out_dir) / "stages");
  uint64_t seed = StageSeed(config_.seed, stage);
  if (log_) *log_ << "[" << stage << "] running (" << digest.substr(0, 16) << ")\n";
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> names = Execute(stage, dir.string(), seed);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  StageArtifact a;
  a.stage = stage;
  a.input_digest = digest;
  a.upstream = upstream;
  a.seed = seed;
  a.wall_seconds = secs;
  json outputs = json::array();
  for (const std::string &n : names) {
    a.outputs.push_back((dir / n).string());
    outputs.push_back((fs::path(rel_dir) / n).string());
  }
  a.output_digest = Sha256Files(a.outputs);
  json j = {{"stage", stage},       {"input_digest", digest}, {"upstream", upstream},
            {"outputs", outputs},   {"output_digest", a.output_digest},
            {"seed", seed},         {"wall_seconds", secs}};
  WriteText(ManifestPath(stage, digest), j.dump(2) + "\n");
  if (log_) *log_ << "[" << stage << "] done in " << Fmt("%.1f", secs) << " s\n";
  return a;
}

StageArtifact Pipeline::Build(const std::string &stage) {
  if (std::optional<StageArtifact> found = Find(stage)) return *found;
  for (const std::string &up : Upstream(stage)) Build(up);
  return RunStage(stage);
}

std::vector<StageArtifact> Pipeline::RunAll() {
  std::vector<StageArtifact> out;
  for (const std::string &s : StageNames()) out.push_back(Build(s));
  std::ostringstream report;
  WriteRunReport(report, *this);
  WriteText((fs::path(config_.out_dir) / "report.txt").string(), report.str());
  return out;
}

std::vector<std::string> Pipeline::Execute(const std::string &stage, const std::string &dir,
                                           uint64_t seed) {
  auto path = [&dir](const std::string &name) { return (fs::path(dir) / name).string(); };
  const PipelineConfig &c = config_;

  if (stage == "gen-corpus") {
    Corpus corpus = GenerateCorpus(c.corpus, seed);
    WriteFeatureArchive(path("corpus.fea"), CorpusToEntries(corpus));
    LabelTable phones;
    for (const Utterance &u : corpus.utterances) phones.emplace_back(u.utt_id, u.phone_labels);
    WriteLabelFile(path("phones.lab"), phones);
    return {"corpus.fea", "phones.lab"};
  }

  Corpus raw = LoadCorpus(Require("gen-corpus", stage), c);

  if (stage == "train-fhvae") {
    FhvaeTrainLog log;
    FhvaeModel model = TrainFhvae(FhvaeInput(raw), c.fhvae, seed, &log);
    WriteFhvae(path("fhvae.bin"), model);
    std::string text = "best_epoch = " + std::to_string(log.best_epoch) + "\n" +
                       "dis_accuracy = " + Fmt("%.6f", log.dis_accuracy) + "\n" +
                       "epoch train_bound heldout_bound\n";
    for (size_t e = 0; e < log.heldout_bound.size(); e++)
      text += std::to_string(e) + " " + Fmt("%.6f", log.train_bound[e]) + " " +
              Fmt("%.6f", log.heldout_bound[e]) + "\n";
    WriteText(path("fhvae-log.txt"), text);
    return {"fhvae.bin", "fhvae-log.txt"};
  }

  if (stage == "reconstruct") {
    FhvaeModel model = ReadFhvae(Require("train-fhvae", stage).Output("fhvae.bin"));
    std::string rep = RepresentativeSequence(model);
    Vector target = model.SVector(rep);
    Corpus in = FhvaeInput(raw);
    for (Utterance &u : in.utterances) u.frames = ReconstructUnified(model, u, target);
    WriteFeatureArchive(path("recon.fea"), CorpusToEntries(in));
    WriteText(path("target.txt"), "target_sequence = " + rep + "\n");
    return {"recon.fea", "target.txt"};
  }

  if (stage == "cluster") {
    Corpus feats = c.label_source == LabelSource::kRaw
                       ? FhvaeInput(raw)
                       : WithFrames(raw, Require("reconstruct", stage).Output("recon.fea"));
    Matrix data = StackFrames(feats, c.dpgmm.deltas);
    NiwPrior prior = NiwPrior::FromData(data, c.dpgmm.scatter_scale, c.dpgmm.k0);
    ClusteringResult r =
        RunClustering(data, c.dpgmm.iters, c.dpgmm.alpha, seed, prior, c.dpgmm.init);
    LabelTable table;
    std::vector<int> truth;
    int64_t row = 0;
    for (const Utterance &u : raw.utterances) {
      table.emplace_back(u.utt_id, std::vector<int>(r.labels.begin() + row,
                                                     r.labels.begin() + row + u.NumFrames()));
      truth.insert(truth.end(), u.phone_labels.begin(), u.phone_labels.end());
      row += u.NumFrames();
    }
    WriteLabelFile(path("labels.lab"), table);
    std::ostringstream summary;
    summary << "label_source = " << LabelSourceName(c.label_source) << "\n"
            << "num_clusters = " << r.num_clusters << "\n"
            << "phone_ari = " << Fmt("%.6f", AdjustedRandIndex(r.labels, truth)) << "\n"
            << "clusters_per_sweep =";
    for (int k : r.clusters_per_sweep) summary << " " << k;
    summary << "\n";
    WriteClusterSummary(summary, data, r.labels);
    WriteText(path("clusters.txt"), summary.str());
    return {"labels.lab", "clusters.txt"};
  }

  if (stage == "train-amtl") {
    auto labels = LabelMap(ReadLabelFile(Require("cluster", stage).Output("labels.lab")));
    std::vector<std::vector<int>> per_utt;
    int n_units = 0;
    for (const Utterance &u : raw.utterances) {
      auto it = labels.find(u.utt_id);
      if (it == labels.end()) throw LookupError("no frame labels for " + u.utt_id);
      for (int l : it->second) n_units = std::max(n_units, l + 1);
      per_utt.push_back(it->second);
    }
    AmtlTrainLog log;
    AmtlModel model =
        TrainAmtl(AmtlInput(raw, c.amtl_input), per_utt, n_units, c.amtl, seed, &log);
    WriteAmtl(path("amtl.bin"), model);
    std::string text = "n_units = " + std::to_string(n_units) + "\n" +
                       "lambda = " + Fmt("%.17g", c.amtl.lambda) + "\n" +
                       "epoch unit_loss unit_acc speaker_loss speaker_acc\n";
    for (size_t e = 0; e < log.unit_loss.size(); e++)
      text += std::to_string(e) + " " + Fmt("%.6f", log.unit_loss[e]) + " " +
              Fmt("%.6f", log.unit_acc[e]) + " " + Fmt("%.6f", log.speaker_loss[e]) + " " +
              Fmt("%.6f", log.speaker_acc[e]) + "\n";
    WriteText(path("amtl-log.txt"), text);
    return {"amtl.bin", "amtl-log.txt"};
  }

  if (stage == "infer-units") {
    AmtlModel model = ReadAmtl(Require("train-amtl", stage).Output("amtl.bin"));
    Corpus in = AmtlInput(raw, c.amtl_input);
    FeatureMap bnf, pg;
    LabelTable frame_units;
    Transcription units;
    for (const Utterance &u : in.utterances) {
      bnf[u.utt_id] = ExtractBnf(model, u.frames);
      pg[u.utt_id] = ExtractPg(model, u.frames);
      std::vector<int> labels = FrameArgmax(pg[u.utt_id]);
      frame_units.emplace_back(u.utt_id, labels);
      units.emplace_back(u.utt_id, CollapseRepeats(labels, raw.frame_rate));
    }
    WriteFeatureArchive(path("bnf.fea"), Entries(raw, bnf));
    WriteFeatureArchive(path("pg.fea"), Entries(raw, pg));
    WriteLabelFile(path("frame-units.lab"), frame_units);
    std::ostringstream t;
    WriteTranscription(t, units);
    WriteText(path("units.txt"), t.str());
    return {"bnf.fea", "pg.fea", "frame-units.lab", "units.txt"};
  }

  if (stage == "smooth") {
    LabelTable frames = ReadLabelFile(Require("infer-units", stage).Output("frame-units.lab"));
    LabelTable smoothed_frames;
    Transcription smoothed;
    for (const auto &[id, labels] : frames) {
      UnitSequence seq = SmoothedTranscription(labels, raw.frame_rate, c.smooth_rule);
      smoothed_frames.emplace_back(id, ExpandToFrames(seq));
      smoothed.emplace_back(id, std::move(seq));
    }
    WriteLabelFile(path("frame-units-smoothed.lab"), smoothed_frames);
    std::ostringstream t;
    WriteTranscription(t, smoothed);
    WriteText(path("units-smoothed.txt"), t.str());
    return {"frame-units-smoothed.lab", "units-smoothed.txt"};
  }

  if (stage == "eval-abx") {
    StageArtifact inf = Require("infer-units", stage);
    LabelTable frame_units =
        c.smooth ? ReadLabelFile(Require("smooth", stage).Output("frame-units-smoothed.lab"))
                 : ReadLabelFile(inf.Output("frame-units.lab"));
    int n_units = 1;
    for (const auto &entry : frame_units)
      for (int l : entry.second) n_units = std::max(n_units, l + 1);
    FeatureMap units;
    for (const auto &[id, labels] : frame_units) units[id] = OneHotFrames(labels, n_units);

    AbxSettings settings = c.abx;
    settings.seed = seed;
    std::vector<std::pair<std::string, AbxReport>> reports = {
        {"bnf", EvaluateAbx(raw, ReadFeatureMap(inf.Output("bnf.fea")), settings)},
        {"pg", EvaluateAbx(raw, ReadFeatureMap(inf.Output("pg.fea")), settings)},
        {"units", EvaluateAbx(raw, units, settings)}};
    std::vector<std::string> names;
    std::string summary = "representation,within_err,across_err\n";
    for (const auto &[name, report] : reports) {
      std::ostringstream txt, csv;
      WriteAbxReport(txt, report, name);
      WriteAbxCsv(csv, report);
      WriteText(path("abx-" + name + ".txt"), txt.str());
      WriteText(path("abx-" + name + ".csv"), csv.str());
      names.push_back("abx-" + name + ".txt");
      names.push_back("abx-" + name + ".csv");
      summary += name + "," + Fmt("%.17g", report.error_rate_within()) + "," +
                 Fmt("%.17g", report.error_rate_across()) + "\n";
    }
    WriteText(path("abx-summary.csv"), summary);
    names.push_back("abx-summary.csv");
    return names;
  }

  if (stage == "bitrate") {
    Transcription t =
        c.smooth ? ReadTranscriptionFile(Require("smooth", stage).Output("units-smoothed.txt"))
                 : ReadTranscriptionFile(Require("infer-units", stage).Output("units.txt"));
    std::vector<UnitSequence> seqs;
    int64_t symbols = 0;
    double seconds = 0.0;
    std::map<std::string, int> frames_of;
    for (const Utterance &u : raw.utterances) frames_of[u.utt_id] = u.NumFrames();
    for (auto &[id, seq] : t) {
      // Durations come from the corpus; transcription files carry symbols only.
      auto it = frames_of.find(id);
      if (it == frames_of.end()) throw LookupError("unknown utterance " + id);
      seq.duration_seconds = it->second / raw.frame_rate;
      symbols += seq.Size();
      seconds += seq.duration_seconds;
      seqs.push_back(seq);
    }
    std::string text = std::string("source = ") + (c.smooth ? "smoothed" : "collapsed") + "\n" +
                       "symbols = " + std::to_string(symbols) + "\n" +
                       "seconds = " + Fmt("%.6f", seconds) + "\n" +
                       "bitrate = " + Fmt("%.17g", Bitrate(seqs)) + "\n";
    WriteText(path("bitrate.txt"), text);
    return {"bitrate.txt"};
  }

  throw ParameterError("unknown stage '" + stage + "'");
}

AbxSummary ReadAbxSummary(const StageArtifact &eval_abx) {
  std::istringstream is(ReadText(eval_abx.Output("abx-summary.csv")));
  std::string line;
  std::getline(is, line);
  std::map<std::string, AbxRates> rates;
  while (std::getline(is, line)) {
    size_t a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) throw FormatError("bad abx summary line: " + line);
    rates[line.substr(0, a)] = {std::stod(line.substr(a + 1, b - a - 1)),
                                std::stod(line.substr(b + 1))};
  }
  for (const char *k : {"bnf", "pg", "units"})
    if (!rates.count(k)) throw FormatError(std::string("abx summary lacks ") + k);
  return {rates["bnf"], rates["pg"], rates["units"]};
}

double ReadBitrate(const StageArtifact &bitrate) {
  std::istringstream is(ReadText(bitrate.Output("bitrate.txt")));
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("bitrate = ", 0) == 0) return std::stod(line.substr(10));
  throw FormatError("bitrate.txt lacks a bitrate line");
}

void WriteRunReport(std::ostream &os, const Pipeline &pipeline) {
  const PipelineConfig &c = pipeline.config();
  os << "unitdisc run report\n"
     << "seed = " << c.seed << "\n";
  for (const char *s : {"corpus", "fhvae", "dpgmm", "amtl", "units", "abx"})
    os << "\n[" << s << "]\n" << SectionText(c, s);
  os << "\nstage input_digest output_digest stage_seed\n";
  for (const std::string &s : StageNames()) {
    std::optional<StageArtifact> a = pipeline.Find(s);
    if (!a) throw DependencyError(s, "report");
    os << s << " " << a->input_digest << " " << a->output_digest << " " << a->seed << "\n";
  }
  AbxSummary abx = ReadAbxSummary(*pipeline.Find("eval-abx"));
  os << "\nrepresentation within_err across_err\n"
     << "bnf " << Fmt("%.4f", abx.bnf.within) << " " << Fmt("%.4f", abx.bnf.across) << "\n"
     << "pg " << Fmt("%.4f", abx.pg.within) << " " << Fmt("%.4f", abx.pg.across) << "\n"
     << "units " << Fmt("%.4f", abx.units.within) << " " << Fmt("%.4f", abx.units.across)
     << "\n"
     << "\nbitrate = " << Fmt("%.4f", ReadBitrate(*pipeline.Find("bitrate"))) << "\n";
}

SweepResult RunLambdaSweep(const PipelineConfig &config, std::ostream *log) {
  SweepResult sweep;
  sweep.label_source = config.label_source;
  for (double lambda : config.lambda_grid) {
    PipelineConfig c = config;
    c.amtl.lambda = lambda;
    Pipeline p(c);
    p.set_log(log);
    StageArtifact eval = p.Build("eval-abx");
    StageArtifact rate = p.Build("bitrate");
    AbxSummary abx = ReadAbxSummary(eval);
    SweepRow row;
    row.lambda = lambda;
    row.bnf_within = abx.bnf.within;
    row.bnf_across = abx.bnf.across;
    row.pg_within = abx.pg.within;
    row.pg_across = abx.pg.across;
    row.units_within = abx.units.within;
    row.units_across = abx.units.across;
    row.bitrate = ReadBitrate(rate);
    row.amtl_digest = p.Find("train-amtl")->output_digest;
    sweep.rows.push_back(row);
  }
  std::string stem = std::string("sweep-lambda-") + LabelSourceName(config.label_source);
  std::ostringstream txt, csv;
  WriteSweep(txt, sweep, config);
  WriteSweepCsv(csv, sweep);
  WriteText((fs::path(config.out_dir) / (stem + ".txt")).string(), txt.str());
  WriteText((fs::path(config.out_dir) / (stem + ".csv")).string(), csv.str());
  return sweep;
}

double BestLambda(const SweepResult &sweep) {
  const SweepRow *best = nullptr;
  for (const SweepRow &r : sweep.rows) {
    if (r.lambda <= 0.0) continue;
    if (!best || r.bnf_across < best->bnf_across ||
        (r.bnf_across == best->bnf_across && r.lambda < best->lambda))
      best = &r;
  }
  if (!best) throw ParameterError("lambda grid has no positive value");
  return best->lambda;
}

ComparisonResult RunAbComparison(const PipelineConfig &config, std::ostream *log) {
  ComparisonResult cmp;
  if (config.best_lambda >= 0.0) {
    cmp.best_lambda = config.best_lambda;
  } else {
    PipelineConfig raw = config;
    raw.label_source = LabelSource::kRaw;
    cmp.best_lambda = BestLambda(RunLambdaSweep(raw, log));
  }
  for (LabelSource src : {LabelSource::kRaw, LabelSource::kReconstructed}) {
    for (double lambda : {0.0, cmp.best_lambda}) {
      PipelineConfig c = config;
      c.label_source = src;
      c.amtl.lambda = lambda;
      Pipeline p(c);
      p.set_log(log);
      StageArtifact eval = p.Build("eval-abx");
      AbxSummary abx = ReadAbxSummary(eval);
      ComparisonRow row{src, lambda, abx.bnf.across, abx.bnf.within, eval.output_digest, {}};
      std::vector<std::string> chain = {"eval-abx"};
      for (size_t i = 0; i < chain.size(); i++)
        for (const std::string &up : p.Upstream(chain[i]))
          if (std::find(chain.begin(), chain.end(), up) == chain.end()) chain.push_back(up);
      for (const std::string &s : StageNames())
        if (std::find(chain.begin(), chain.end(), s) != chain.end())
          row.digests.emplace_back(s, p.Find(s)->output_digest);
      cmp.rows.push_back(row);
    }
  }
  std::ostringstream txt;
  WriteComparison(txt, cmp, config);
  WriteText((fs::path(config.out_dir) / "compare-labels.txt").string(), txt.str());
  return cmp;
}

void WriteSweep(std::ostream &os, const SweepResult &sweep, const PipelineConfig &config) {
  os << "lambda sweep\n"
     << "label_source = " << LabelSourceName(sweep.label_source) << "\n"
     << "seed = " << config.seed << "\n"
     << "grl_placement = " << GrlPlacementName(config.amtl.grl_placement) << "\n"
     << "smooth = " << (config.smooth ? "true" : "false") << "\n\n"
     << "lambda bnf_within bnf_across pg_within pg_across units_within units_across "
        "bitrate amtl_digest\n";
  for (const SweepRow &r : sweep.rows)
    os << Fmt("%.4f", r.lambda) << " " << Fmt("%.4f", r.bnf_within) << " "
       << Fmt("%.4f", r.bnf_across) << " " << Fmt("%.4f", r.pg_within) << " "
       << Fmt("%.4f", r.pg_across) << " " << Fmt("%.4f", r.units_within) << " "
       << Fmt("%.4f", r.units_across) << " " << Fmt("%.4f", r.bitrate) << " "
       << r.amtl_digest << "\n";
}

void WriteSweepCsv(std::ostream &os, const SweepResult &sweep) {
  os << "lambda,bnf_within,bnf_across,pg_within,pg_across,units_within,units_across,bitrate\n";
  for (const SweepRow &r : sweep.rows)
    os << Fmt("%.17g", r.lambda) << "," << Fmt("%.17g", r.bnf_within) << ","
       << Fmt("%.17g", r.bnf_across) << "," << Fmt("%.17g", r.pg_within) << ","
       << Fmt("%.17g", r.pg_across) << "," << Fmt("%.17g", r.units_within) << ","
       << Fmt("%.17g", r.units_across) << "," << Fmt("%.17g", r.bitrate) << "\n";
}

void WriteComparison(std::ostream &os, const ComparisonResult &cmp,
                     const PipelineConfig &config) {
  os << "label source comparison (BNF ABX, percent)\n"
     << "seed = " << config.seed << "\n"
     << "best_lambda = " << Fmt("%.17g", cmp.best_lambda) << "\n\n"
     << "label_source lambda across_err within_err eval_digest\n";
  for (const ComparisonRow &r : cmp.rows)
    os << LabelSourceName(r.label_source) << " " << Fmt("%.4f", r.lambda) << " "
       << Fmt("%.4f", r.across) << " " << Fmt("%.4f", r.within) << " " << r.eval_digest
       << "\n";
  for (const ComparisonRow &r : cmp.rows) {
    os << "\nartifacts " << LabelSourceName(r.label_source) << " lambda "
       << Fmt("%.4f", r.lambda) << "\n";
    for (const auto &[stage, digest] : r.digests) os << stage << " " << digest << "\n";
  }
  os << "\nstage seeds\n";
  for (const std::string &s : StageNames())
    os << s << " " << StageSeed(config.seed, s) << "\n";
}

}  // namespace unitdisc
