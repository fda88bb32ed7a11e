// Copyright 2026 The Modkal Authors
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

// modkal <mode> [flags] <in> <out>

#include <iostream>
#include <string>
#include <vector>

#include "modkal/pipeline.h"
#include "modkal/run_config.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<modkal::RunConfig> cfg;
  try {
    cfg = modkal::ParseConfig(args, std::cout);
  } catch (const modkal::UsageError& e) {
    std::cerr << "modkal: " << e.what() << "\n"
              << "usage: modkal <degrade|enhance|eval|pipeline> [flags] <in> <out>"
              << " (--help for flags)\n";
    return modkal::kExitUsage;
  }
  if (!cfg) return modkal::kExitOk;
  return modkal::RunPipeline(*cfg, std::cout, std::cerr);
}
