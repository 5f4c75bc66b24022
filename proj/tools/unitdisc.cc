// tools/unitdisc.cc

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

// Command-line driver: one subcommand per stage plus run-all, sweep-lambda
// and compare-labels.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "unitdisc/config.h"
#include "unitdisc/pipeline.h"

int main(int argc, char **argv) {
  using namespace unitdisc;
  CLI::App app{"unitdisc: acoustic unit discovery pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<double> lambda;
  bool smooth = false, with_deps = false, quiet = false;
  std::optional<std::string> out_dir;

  std::vector<CLI::App *> subs;
  auto add = [&](const std::string &name, const std::string &help) {
    CLI::App *s = app.add_subcommand(name, help);
    s->add_option("--config", config_path, "INI config file");
    s->add_option("--seed", seed, "master seed (overrides [run] seed)");
    s->add_option("--lambda", lambda, "adversarial weight (overrides [amtl] lambda)");
    s->add_flag("--smooth", smooth, "evaluate smoothed unit sequences");
    s->add_option("--out", out_dir, "output directory (overrides [run] out_dir)");
    s->add_flag("-q,--quiet", quiet, "no progress on stderr");
    subs.push_back(s);
    return s;
  };
  for (const std::string &stage : StageNames())
    add(stage, "run the " + stage + " stage")
        ->add_flag("--with-deps", with_deps, "build missing upstream stages first");
  add("run-all", "build every stage and write report.txt");
  add("sweep-lambda", "one AMTL model per lambda in the grid");
  add("compare-labels", "raw vs reconstructed labels crossed with lambda in {0, best}");
  add("print-config", "print the effective config");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig config = config_path.empty() ? PipelineConfig() : LoadConfig(config_path);
    if (seed) config.seed = *seed;
    if (lambda) config.amtl.lambda = *lambda;
    if (smooth) config.smooth = true;
    if (out_dir) config.out_dir = *out_dir;
    config.Check();
    std::ostream *log = quiet ? nullptr : &std::cerr;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "print-config") {
      std::cout << ConfigText(config);
    } else if (cmd == "run-all") {
      Pipeline p(config);
      p.set_log(log);
      p.RunAll();
      WriteRunReport(std::cout, p);
    } else if (cmd == "sweep-lambda") {
      WriteSweep(std::cout, RunLambdaSweep(config, log), config);
    } else if (cmd == "compare-labels") {
      WriteComparison(std::cout, RunAbComparison(config, log), config);
    } else {
      Pipeline p(config);
      p.set_log(log);
      StageArtifact a = with_deps ? p.Build(cmd) : p.RunStage(cmd);
      std::cout << a.stage << " " << a.input_digest << (a.reused ? " reused" : " built")
                << "\n";
      for (const std::string &o : a.outputs) std::cout << "  " << o << "\n";
    }
  } catch (const DependencyError &e) {
    std::cerr << "unitdisc: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "unitdisc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
