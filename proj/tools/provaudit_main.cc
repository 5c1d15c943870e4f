// Copyright 2026 The provaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: provaudit <command> --config <path>
// [--override key=value ...].

#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provaudit/pipeline.h"
#include "provaudit/run_config.h"

namespace {

using Command = std::function<absl::StatusOr<nlohmann::json>(
    const provaudit::RunConfig&, std::ostream*)>;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box membership auditing for text-to-image models"};
  app.require_subcommand(0, 1);

  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"generate", {"Query the model N times per text and cache the images",
                    provaudit::CmdGenerate}},
      {"features", {"Embed texts and images and build membership features",
                    provaudit::CmdFeatures}},
      {"train", {"Train the auditing model", provaudit::CmdTrain}},
      {"eval", {"Evaluate the auditing model on held-out samples",
                provaudit::CmdEval}},
      {"user-audit", {"Audit users under the any-member rule",
                      provaudit::CmdUserAudit}},
  };

  std::string config_path;
  std::vector<std::string> overrides;
  bool quiet = false;
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults,
               "Print the fully defaulted configuration and exit");
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--override", overrides, "Config override key=value")
        ->take_all();
    sub->add_flag("--quiet", quiet, "Suppress progress output");
  }

  CLI11_PARSE(app, argc, argv);
  if (print_defaults) {
    std::cout << provaudit::DefaultConfigJson().dump(2) << std::endl;
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help() << std::endl;
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  absl::StatusOr<provaudit::RunConfig> config =
      provaudit::LoadRunConfig(config_path, overrides);
  if (!config.ok()) {
    std::cerr << provaudit::ErrorReport(name, config.status()).dump(2) << std::endl;
    return 2;
  }
  absl::StatusOr<nlohmann::json> report =
      commands.at(name).second(*config, quiet ? nullptr : &std::cerr);
  if (!report.ok()) {
    std::cerr << provaudit::ErrorReport(name, report.status()).dump(2) << std::endl;
    return 1;
  }
  report->erase("defaults_provenance");
  std::cout << report->dump(2) << std::endl;
  return 0;
}
