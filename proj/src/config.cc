// src/config.cc

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

#include "unitdisc/config.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace unitdisc {

const char *LabelSourceName(LabelSource s) {
  return s == LabelSource::kRaw ? "raw" : "reconstructed";
}

const char *InputNormName(InputNorm n) {
  switch (n) {
    case InputNorm::kCorpusCmvn: return "corpus_cmvn";
    case InputNorm::kSpeakerCmn: return "speaker_cmn";
    case InputNorm::kSpeakerCmvn: return "speaker_cmvn";
  }
  return "?";
}

void PipelineConfig::Check() const {
  corpus.Check();
  fhvae.Check();
  amtl.Check();
  if (!(dpgmm.alpha > 0)) throw ParameterError("dpgmm alpha must be positive");
  if (dpgmm.iters < 1) throw ParameterError("dpgmm iters must be >= 1");
  if (!(dpgmm.scatter_scale > 0) || !(dpgmm.k0 > 0))
    throw ParameterError("dpgmm prior scales must be positive");
  if (lambda_grid.empty()) throw ParameterError("lambda grid is empty");
  for (double l : lambda_grid)
    if (!(l >= 0)) throw ParameterError("lambda grid values must be >= 0");
  if (abx.max_triplets < 1 || abx.min_span < 1) throw ParameterError("bad abx settings");
  if (out_dir.empty()) throw ParameterError("output directory is empty");
}

namespace {

struct Field {
  std::string section, key;
  std::function<std::string()> get;
  std::function<void(const std::string &)> set;
};

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string &s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParameterError("bad number '" + s + "'");
  return v;
}

long long ParseInt(const std::string &s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParameterError("bad integer '" + s + "'");
  return v;
}

bool ParseBool(const std::string &s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParameterError("bad boolean '" + s + "'");
}

std::vector<std::string> SplitList(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string JoinList(const std::vector<T> &v, std::function<std::string(const T &)> fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); i++) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

Activation ParseActivation(const std::string &s) {
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "tanh") return Activation::kTanh;
  throw ParameterError("hidden activation must be sigmoid or tanh, got '" + s + "'");
}

std::vector<Field> Fields(PipelineConfig &c) {
  std::vector<Field> f;
  auto add_int = [&](const char *sec, const char *key, int *p) {
    f.push_back({sec, key, [p] { return std::to_string(*p); },
                 [p](const std::string &s) { *p = static_cast<int>(ParseInt(s)); }});
  };
  auto add_i64 = [&](const char *sec, const char *key, int64_t *p) {
    f.push_back({sec, key, [p] { return std::to_string(*p); },
                 [p](const std::string &s) { *p = ParseInt(s); }});
  };
  auto add_u64 = [&](const char *sec, const char *key, uint64_t *p) {
    f.push_back({sec, key, [p] { return std::to_string(*p); }, [p](const std::string &s) {
                   const long long v = ParseInt(s);
                   if (v < 0) throw ParameterError("seed must be nonnegative");
                   *p = static_cast<uint64_t>(v);
                 }});
  };
  auto add_dbl = [&](const char *sec, const char *key, double *p) {
    f.push_back({sec, key, [p] { return FormatDouble(*p); },
                 [p](const std::string &s) { *p = ParseDouble(s); }});
  };
  auto add_bool = [&](const char *sec, const char *key, bool *p) {
    f.push_back({sec, key, [p] { return std::string(*p ? "true" : "false"); },
                 [p](const std::string &s) { *p = ParseBool(s); }});
  };
  auto add_ints = [&](const char *sec, const char *key, std::vector<int> *p) {
    f.push_back({sec, key,
                 [p] { return JoinList<int>(*p, [](const int &v) { return std::to_string(v); }); },
                 [p](const std::string &s) {
                   p->clear();
                   for (const auto &item : SplitList(s)) p->push_back(static_cast<int>(ParseInt(item)));
                 }});
  };
  auto add_act = [&](const char *sec, const char *key, Activation *p) {
    f.push_back({sec, key, [p] { return std::string(ActivationName(*p)); },
                 [p](const std::string &s) { *p = ParseActivation(s); }});
  };

  SyntheticSpec &cs = c.corpus;
  add_int("corpus", "n_phones", &cs.n_phones);
  add_int("corpus", "n_speakers", &cs.n_speakers);
  add_int("corpus", "feat_dim", &cs.feat_dim);
  add_int("corpus", "utt_per_speaker", &cs.utt_per_speaker);
  add_int("corpus", "phones_per_utt", &cs.phones_per_utt);
  add_int("corpus", "dur_min", &cs.dur_min);
  add_int("corpus", "dur_max", &cs.dur_max);
  add_dbl("corpus", "speaker_shift_scale", &cs.speaker_shift_scale);
  add_dbl("corpus", "noise_std", &cs.noise_std);
  add_dbl("corpus", "frame_rate", &cs.frame_rate);

  FhvaeConfig &fc = c.fhvae;
  add_int("fhvae", "z1_dim", &fc.z1_dim);
  add_int("fhvae", "z2_dim", &fc.z2_dim);
  add_dbl("fhvae", "var_mu2", &fc.var_mu2);
  add_dbl("fhvae", "var_z1", &fc.var_z1);
  add_dbl("fhvae", "var_z2", &fc.var_z2);
  add_dbl("fhvae", "alpha_dis", &fc.alpha_dis);
  add_int("fhvae", "seg_len", &fc.seg_len);
  add_ints("fhvae", "hidden", &fc.hidden);
  add_act("fhvae", "hidden_activation", &fc.hidden_activation);
  add_int("fhvae", "epochs", &fc.epochs);
  add_int("fhvae", "batch_size", &fc.batch_size);
  add_dbl("fhvae", "lr", &fc.lr);
  add_dbl("fhvae", "heldout_fraction", &fc.heldout_fraction);

  DpgmmSettings &dc = c.dpgmm;
  add_dbl("dpgmm", "alpha", &dc.alpha);
  add_int("dpgmm", "iters", &dc.iters);
  f.push_back({"dpgmm", "init",
               [&dc] { return std::string(dc.init == ClusterInit::kOneCluster ? "one_cluster"
                                                                           : "sequential"); },
               [&dc](const std::string &s) {
                 if (s == "one_cluster")
                   dc.init = ClusterInit::kOneCluster;
                 else if (s == "sequential")
                   dc.init = ClusterInit::kSequential;
                 else
                   throw ParameterError("dpgmm init must be one_cluster or sequential");
               }});
  add_dbl("dpgmm", "scatter_scale", &dc.scatter_scale);
  add_dbl("dpgmm", "k0", &dc.k0);
  add_bool("dpgmm", "deltas", &dc.deltas);
  f.push_back({"dpgmm", "label_source", [&c] { return std::string(LabelSourceName(c.label_source)); },
               [&c](const std::string &s) {
                 if (s == "raw")
                   c.label_source = LabelSource::kRaw;
                 else if (s == "reconstructed")
                   c.label_source = LabelSource::kReconstructed;
                 else
                   throw ParameterError("label_source must be raw or reconstructed");
               }});

  AmtlConfig &ac = c.amtl;
  add_ints("amtl", "hidden", &ac.hidden);
  add_int("amtl", "bottleneck_dim", &ac.bottleneck_dim);
  add_int("amtl", "head_hidden", &ac.head_hidden);
  add_int("amtl", "context", &ac.context);
  add_act("amtl", "hidden_activation", &ac.hidden_activation);
  add_dbl("amtl", "lambda", &ac.lambda);
  f.push_back({"amtl", "grl_placement",
               [&ac] { return std::string(GrlPlacementName(ac.grl_placement)); },
               [&ac](const std::string &s) { ac.grl_placement = ParseGrlPlacement(s); }});
  add_bool("amtl", "speaker_branch", &ac.speaker_branch);
  add_dbl("amtl", "lr_start", &ac.lr_start);
  add_dbl("amtl", "lr_end", &ac.lr_end);
  add_int("amtl", "epochs", &ac.epochs);
  add_int("amtl", "batch_size", &ac.batch_size);
  f.push_back({"amtl", "input_norm", [&c] { return std::string(InputNormName(c.amtl_input)); },
               [&c](const std::string &s) {
                 if (s == "corpus_cmvn")
                   c.amtl_input = InputNorm::kCorpusCmvn;
                 else if (s == "speaker_cmn")
                   c.amtl_input = InputNorm::kSpeakerCmn;
                 else if (s == "speaker_cmvn")
                   c.amtl_input = InputNorm::kSpeakerCmvn;
                 else
                   throw ParameterError("input_norm must be corpus_cmvn, speaker_cmn or speaker_cmvn");
               }});
  f.push_back({"amtl", "lambda_grid",
               [&c] {
                 return JoinList<double>(c.lambda_grid, [](const double &v) { return FormatDouble(v); });
               },
               [&c](const std::string &s) {
                 c.lambda_grid.clear();
                 for (const auto &item : SplitList(s)) c.lambda_grid.push_back(ParseDouble(item));
               }});
  add_dbl("amtl", "best_lambda", &c.best_lambda);

  add_bool("units", "smooth", &c.smooth);
  f.push_back({"units", "rule",
               [&c] { return std::string(c.smooth_rule == SmoothRule::kOr ? "or" : "xor"); },
               [&c](const std::string &s) {
                 if (s == "or")
                   c.smooth_rule = SmoothRule::kOr;
                 else if (s == "xor")
                   c.smooth_rule = SmoothRule::kXor;
                 else
                   throw ParameterError("units rule must be or or xor");
               }});

  add_i64("abx", "max_triplets", &c.abx.max_triplets);
  add_int("abx", "min_span", &c.abx.min_span);

  add_u64("run", "seed", &c.seed);
  f.push_back({"run", "out_dir", [&c] { return c.out_dir; },
               [&c](const std::string &s) { c.out_dir = s; }});
  return f;
}

}  // namespace

PipelineConfig ParseConfig(std::istream &is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error &e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  std::vector<Field> fields = Fields(c);
  for (const auto &[section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw FormatError("config: key '" + section + "' outside any section");
    for (const auto &[key, value] : body) {
      Field *hit = nullptr;
      for (Field &fd : fields)
        if (fd.section == section && fd.key == key) hit = &fd;
      if (!hit) throw ParameterError("config: unknown key [" + section + "] " + key);
      try {
        hit->set(Trim(value.data()));
      } catch (const ParameterError &e) {
        throw ParameterError("config: [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  c.Check();
  return c;
}

PipelineConfig LoadConfig(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config " + path);
  return ParseConfig(is);
}

std::string SectionText(const PipelineConfig &config, const std::string &section) {
  PipelineConfig copy = config;
  std::string out;
  bool known = false;
  for (const Field &fd : Fields(copy)) {
    if (fd.section != section) continue;
    known = true;
    out += fd.key + " = " + fd.get() + "\n";
  }
  if (!known) throw ParameterError("unknown config section '" + section + "'");
  return out;
}

std::string ConfigText(const PipelineConfig &config) {
  std::string out;
  for (const char *s : {"corpus", "fhvae", "dpgmm", "amtl", "units", "abx", "run"})
    out += std::string(out.empty() ? "" : "\n") + "[" + s + "]\n" + SectionText(config, s);
  return out;
}

}  // namespace unitdisc
