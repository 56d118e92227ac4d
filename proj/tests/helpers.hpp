#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "varorder/linalg.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = fs::temp_directory_path();
    path_ = base / ("varorder_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool file_exists(const std::string& path) { return fs::exists(path); }

/// Runs a shell command with stdout/stderr captured to files; returns the
/// process exit code (-1 if the shell itself failed).
struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::string& cmd, const TempDir& dir) {
  static std::atomic<unsigned> counter{0};
  unsigned id = counter.fetch_add(1);
  std::string out_file = dir.file("cli_out_" + std::to_string(id));
  std::string err_file = dir.file("cli_err_" + std::to_string(id));
  std::string full = cmd + " > " + out_file + " 2> " + err_file;
  int status = std::system(full.c_str());
  CliResult r;
  if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

inline double max_abs_diff(const varorder::linalg::Matrix& a, const varorder::linalg::Matrix& b) {
  double d = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) d = std::max(d, std::fabs(a(i, j) - b(i, j)));
  return d;
}

/// Random SPD matrix W W^T + ridge I with standard normal W.
inline varorder::linalg::Matrix random_spd(int n, std::mt19937_64& gen, double ridge = 0.1) {
  std::normal_distribution<double> nd(0.0, 1.0);
  varorder::linalg::Matrix w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = nd(gen);
  varorder::linalg::Matrix s = w * varorder::transpose(w);
  for (int i = 0; i < n; ++i) s(i, i) += ridge;
  return varorder::symmetrize(s);
}

/// Fourth-order central difference of a scalar function of one coordinate.
template <class F>
double central_diff(F&& f, std::vector<double> x, std::size_t i, double h) {
  auto at = [&](double v) {
    double keep = x[i];
    x[i] = v;
    double y = f(x);
    x[i] = keep;
    return y;
  };
  double xi = x[i];
  return (-at(xi + 2 * h) + 8 * at(xi + h) - 8 * at(xi - h) + at(xi - 2 * h)) / (12 * h);
}

}  // namespace testutil
