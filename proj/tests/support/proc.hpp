#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

namespace testsupport {

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Runs `command` through the shell with stdout/stderr captured to files in
// `dir` (also the working directory when non-empty).
inline RunResult run_command(const std::string& command,
                             const std::filesystem::path& dir = {}) {
  namespace fs = std::filesystem;
  const fs::path base = dir.empty() ? fs::temp_directory_path() : dir;
  const fs::path out_file = base / ".proc_out";
  const fs::path err_file = base / ".proc_err";

  std::string full;
  if (!dir.empty()) full += "cd '" + dir.string() + "' && ";
  full += command + " >'" + out_file.string() + "' 2>'" + err_file.string() + "'";

  const int status = std::system(full.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  fs::remove(out_file);
  fs::remove(err_file);
  return r;
}

}  // namespace testsupport
