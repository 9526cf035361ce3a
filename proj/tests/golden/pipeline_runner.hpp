#pragma once

// Replays tests/golden/pipeline.txt through memctx::run and compares the
// collected stdout with the committed expected files.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "memctx/cli.hpp"

namespace golden {

namespace fs = std::filesystem;

struct Step {
  std::string output;
  std::vector<std::string> args;
};

struct PipelineRun {
  std::map<std::string, std::string> outputs;
  std::vector<std::string> problems;  // failed steps and mismatching files

  bool ok() const noexcept { return problems.empty(); }
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string substitute(std::string s, const std::string& key, const std::string& value) {
  for (auto at = s.find(key); at != std::string::npos; at = s.find(key, at + value.size())) {
    s.replace(at, key.size(), value);
  }
  return s;
}

inline std::vector<Step> read_steps(const fs::path& golden, const fs::path& work) {
  std::vector<Step> steps;
  std::istringstream in(slurp(golden / "pipeline.txt"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream words(line);
    Step s;
    words >> s.output;
    for (std::string w; words >> w;) {
      w = substitute(w, "{cache}", (work / "cache").string());
      w = substitute(w, "{in}", (golden / "inputs").string());
      w = substitute(w, "{out}", (work / "out").string());
      s.args.push_back(w);
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

// `work` must be an empty scratch directory.
inline PipelineRun run_pipeline(const fs::path& golden, const fs::path& work) {
  ::unsetenv("MEMCTX_CONFIG");
  fs::create_directories(work / "out");
  PipelineRun run;
  for (const auto& step : read_steps(golden, work)) {
    std::ostringstream out, err;
    const int code = memctx::run(step.args, out, err);
    if (code != 0) {
      run.problems.push_back(step.output + ": exit " + std::to_string(code) + ": " + err.str());
      continue;
    }
    run.outputs[step.output] += out.str();
    std::ofstream(work / "out" / step.output, std::ios::binary) << run.outputs[step.output];
  }
  for (const auto& entry : fs::directory_iterator(golden / "expected")) {
    const auto name = entry.path().filename().string();
    const auto it = run.outputs.find(name);
    if (it == run.outputs.end()) {
      run.problems.push_back(name + ": not produced");
    } else if (it->second != slurp(entry.path())) {
      run.problems.push_back(name + ": differs from the expected bytes");
    }
  }
  return run;
}

}  // namespace golden
