#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracle.hpp"
#include "twistdec/scene.hpp"

#ifndef TWISTDEC_SCENES_DIR
#define TWISTDEC_SCENES_DIR "scenes"
#endif
#ifndef TWISTDEC_CLI_PATH
#define TWISTDEC_CLI_PATH "twistdec"
#endif

inline std::string scene_path(const std::string& name) {
  return std::string(TWISTDEC_SCENES_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline twistdec::IsometryTuple load_tuple(const std::string& scene_name) {
  return twistdec::build_tuple(twistdec::load_scene(scene_path(scene_name)));
}

// Same block data re-enumerated by the reference implementation.
inline oracle::Space mirror_space(const twistdec::SpaceSpec& s) {
  std::vector<std::pair<int, int>> blocks;
  for (const auto& b : s.blocks) blocks.emplace_back(b.degree_cap, b.fiber_dim);
  return oracle::Space::make(s.vars, std::move(blocks));
}

inline double max_abs_diff(const twistdec::Matrix& a, const twistdec::Matrix& b) {
  if (a.size() == 0 && b.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI binary with stdout/stderr captured through temp files.
inline CliRun run_cli(const std::string& args) {
  static std::atomic<int> counter{0};
  const std::string base =
      (std::filesystem::temp_directory_path() /
       ("twistdec_test_" + std::to_string(::getpid()) + "_" +
        std::to_string(counter++)))
          .string();
  const std::string outp = base + ".out", errp = base + ".err";
  const std::string cmd =
      std::string(TWISTDEC_CLI_PATH) + " " + args + " >" + outp + " 2>" + errp;
  int rc = std::system(cmd.c_str());
  CliRun r;
  if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  r.out = read_file(outp);
  r.err = read_file(errp);
  std::filesystem::remove(outp);
  std::filesystem::remove(errp);
  return r;
}
