// Shared test utilities: random instance builders and independent oracles.
// Everything here stays off the library's implementation paths on purpose.

#pragma once

#include <rlgp/rlgp.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testutil {

using rlgp::DistanceMatrix;
using rlgp::Matrix;
using rlgp::Rng;
using rlgp::Vector;

inline Matrix random_inputs(Rng& rng, int n, int d, double scale = 1.0) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = scale * (rng.uniform() - 0.5);
  return x;
}

inline Vector random_vector(Rng& rng, int n, double scale = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

// Random orthogonal matrix via Gram-Schmidt on a Gaussian draw.
inline Matrix random_orthogonal(Rng& rng, int n) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ();
}

// SPD matrix with eigenvalues log-spaced between lo and hi.
inline Matrix random_spd(Rng& rng, int n, double lo, double hi) {
  const Matrix q = random_orthogonal(rng, n);
  Vector eigs(n);
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    eigs(i) = lo * std::pow(hi / lo, t) * (0.5 + rng.uniform());
  }
  return q * eigs.asDiagonal() * q.transpose();
}

// Straight re-implementation of the loss for oracle comparisons: explicit
// triple product, no cached powers.
inline double naive_loss(double mu, const Vector& gamma, const Matrix& s_inv,
                         const Matrix& s, const Vector& y, double c0) {
  const int n = static_cast<int>(y.size());
  double quad = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      quad += (y(i) - mu - gamma(i)) * s_inv(i, j) * (y(j) - mu - gamma(j));
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += s(i, i);
  return 0.5 * quad + 0.5 * c0 * trace;
}

// Writes content to a fresh file under a scratch directory and returns the path.
class TempDir {
 public:
  TempDir() {
    dir_ = std::filesystem::temp_directory_path() /
           ("rlgp_test_" + std::to_string(counter()++) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path(name);
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path dir_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI binary with the given arguments; returns its exit code.
inline int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string command = std::string(RLGP_CLI_PATH) + " " + args + " >" + log.string() +
                              " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testutil
