// Synthetic experiment generators and the benchmark driver.
//
// Two families of data:
//  * a two-region partitioned GP surface in d dimensions (hyperplane split,
//    region means 0 and 11, marginal variance 7, SE correlation with
//    concentration 0.1*d, additive noise variance 3), sampled jointly over
//    train and test sites from one dense factorization;
//  * three 2-D boundary scenarios (interior, near a single linear boundary,
//    near a two-boundary corner) on piecewise-constant surfaces, used to
//    study trimming levels.
//
// All draws come from named substreams of one seed: the hyperplane, the
// design, each region's field, and the noise each have their own stream, and
// sites are ordered train-first, so enlarging the test design never perturbs
// the training data.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rlgp/csv.hpp"
#include "rlgp/predictor.hpp"
#include "rlgp/rng.hpp"

namespace rlgp {

// ---------------------------------------------------------------------------
// Latin hypercube design on [-0.5, 0.5]^d: per dimension, one point in each
// of n equal strata, stratum order an independent uniform permutation.

inline Matrix lhs_design(int n, int d, Rng& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("lhs_design: need n >= 1 and d >= 1");
  Matrix x(n, d);
  for (int j = 0; j < d; ++j) {
    const std::vector<int> strata = rng.permutation(n);
    for (int i = 0; i < n; ++i)
      x(i, j) = -0.5 + (static_cast<double>(strata[static_cast<std::size_t>(i)]) + rng.uniform()) /
                           static_cast<double>(n);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Two-region partitioned GP model

struct PartitionSpec {
  int d = 2;
  Vector a;                       // hyperplane normal in {-1,+1}^d; drawn if empty
  double region1_mean = 0.0;      // mean on X1 = {a^T x >= 0}
  double region2_mean = 11.0;     // mean on the complement
  double variance = 7.0;          // marginal GP variance
  double noise_variance = 3.0;    // additive noise on training responses
  double lengthscale_param() const { return 0.1 * d; }
};

// Covariance of the generating field over the given squared distances.
inline Matrix partition_covariance(const PartitionSpec& spec, const DistanceMatrix& dist) {
  return kernel_matrix(dist, spec.variance, spec.lengthscale_param());
}

struct SampledPartition {
  PartitionSpec spec;  // with the hyperplane normal actually used
  Dataset train;       // noisy responses
  Dataset test;        // y holds the noiseless truth
  Vector truth;        // alias of test.y, kept explicit
  Vector train_truth;  // noiseless field at the training sites
};

inline SampledPartition sample_partitioned_gp(PartitionSpec spec, int n_train, int n_test,
                                              std::uint64_t seed) {
  if (n_train < 1 || n_test < 0) throw std::invalid_argument("sample_partitioned_gp: bad sizes");
  if (spec.a.size() == 0) {
    Rng rng(seed, Stream::hyperplane);
    spec.a.resize(spec.d);
    for (int j = 0; j < spec.d; ++j) spec.a(j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  } else if (spec.a.size() != spec.d) {
    throw std::invalid_argument("sample_partitioned_gp: hyperplane normal has wrong dimension");
  } else {
    for (int j = 0; j < spec.d; ++j)
      if (spec.a(j) != 1.0 && spec.a(j) != -1.0)
        throw std::invalid_argument("sample_partitioned_gp: hyperplane entries must be +/-1");
  }

  Rng rng_design(seed, Stream::design);
  const Matrix x_train = lhs_design(n_train, spec.d, rng_design);
  const Matrix x_test = n_test > 0 ? lhs_design(n_test, spec.d, rng_design) : Matrix(0, spec.d);

  const int n_sites = n_train + n_test;
  Matrix sites(n_sites, spec.d);
  sites.topRows(n_train) = x_train;
  if (n_test > 0) sites.bottomRows(n_test) = x_test;

  Matrix cov = partition_covariance(spec, pairwise_sq_dist(sites));
  cov.diagonal().array() += 1e-10;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_partitioned_gp: covariance factorization failed even with jitter");
  const Matrix chol = llt.matrixL();

  Rng rng_f1(seed, Stream::f1);
  Rng rng_f2(seed, Stream::f2);
  Vector z1(n_sites), z2(n_sites);
  for (int i = 0; i < n_sites; ++i) z1(i) = rng_f1.normal();
  for (int i = 0; i < n_sites; ++i) z2(i) = rng_f2.normal();
  const Vector f1 = (chol * z1).array() + spec.region1_mean;
  const Vector f2 = (chol * z2).array() + spec.region2_mean;

  Vector f(n_sites);
  for (int i = 0; i < n_sites; ++i)
    f(i) = sites.row(i).dot(spec.a) >= 0.0 ? f1(i) : f2(i);

  Rng rng_noise(seed, Stream::noise);
  const double noise_sd = std::sqrt(spec.noise_variance);
  SampledPartition out;
  out.spec = spec;
  out.train.x = x_train;
  out.train_truth = f.head(n_train);
  out.train.y.resize(n_train);
  for (int i = 0; i < n_train; ++i) out.train.y(i) = f(i) + noise_sd * rng_noise.normal();
  out.test.x = x_test;
  out.test.y = f.tail(n_test);
  out.truth = out.test.y;
  return out;
}

// ---------------------------------------------------------------------------
// 2-D boundary scenarios

struct BoundaryScenario {
  std::string name;
  Dataset train;
  Vector query;
  double truth = 0.0;
};

namespace detail {

// Piecewise-constant levels; the jumps (8, 14, -8) are large against the
// noise sd 0.1, so any neighborhood straddling a boundary is contaminated.
inline double two_level_surface(double x1) { return x1 < 0.0 ? 0.0 : 8.0; }

inline double quadrant_surface(double x1, double x2) {
  if (x1 < 0.0) return x2 < 0.0 ? 0.0 : -8.0;
  return x2 < 0.0 ? 8.0 : 14.0;
}

}  // namespace detail

// Three (train, query) instances: a query deep inside one region, a query
// 0.05 inside a single linear boundary, and a query near a two-boundary
// corner so its neighborhood mixes three or more regions.
inline std::vector<BoundaryScenario> boundary_scenarios(std::uint64_t seed,
                                                        int n_train = 400,
                                                        double noise_sd = 0.1) {
  Rng rng_design(seed, Stream::design);
  Rng rng_noise(seed, Stream::noise);
  std::vector<BoundaryScenario> out;
  for (int k = 0; k < 3; ++k) {
    BoundaryScenario sc;
    sc.train.x = lhs_design(n_train, 2, rng_design);
    sc.train.y.resize(n_train);
    const bool quadrant = k == 2;
    for (int i = 0; i < n_train; ++i) {
      const double level = quadrant
                               ? detail::quadrant_surface(sc.train.x(i, 0), sc.train.x(i, 1))
                               : detail::two_level_surface(sc.train.x(i, 0));
      sc.train.y(i) = level + noise_sd * rng_noise.normal();
    }
    sc.query.resize(2);
    switch (k) {
      case 0:
        sc.name = "interior";
        sc.query << -0.30, 0.0;
        break;
      case 1:
        sc.name = "simple_boundary";
        sc.query << -0.05, 0.0;
        break;
      default:
        sc.name = "complex_boundary";
        sc.query << -0.09, -0.09;
        break;
    }
    sc.truth = 0.0;  // the query sits in the zero-level region in all three
    out.push_back(std::move(sc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark driver

struct BenchConfig {
  std::string scenario = "partitioned";  // "partitioned", "boundary", or "constant"
  int d = 2;
  int n_train = 100;
  int n_test = 50;
  std::uint64_t seed = 0;
  std::vector<std::string> methods = {"rlgp", "localgp", "median"};
  EstimatorConfig estimator;  // q_mode/tau/c0 apply to the "rlgp" method
  int neighbors = 50;
  int workers = 0;  // 0 means hardware concurrency
};

struct BenchRow {
  std::string scenario;
  std::string method;
  std::uint64_t seed = 0;
  int n_points = 0;
  int n_failed = 0;
  double mse = 0.0;
  double crps = 0.0;
  double mean_seconds = 0.0;  // fit+predict only, averaged over test points
};

struct BenchReport {
  std::vector<BenchRow> rows;

  std::string to_csv(bool include_timings = true) const {
    std::string out = "scenario,method,seed,n_points,n_failed,mse,crps,mean_seconds_per_point\n";
    for (const auto& row : rows) {
      out += row.scenario + "," + row.method + "," + std::to_string(row.seed) + "," +
             std::to_string(row.n_points) + "," + std::to_string(row.n_failed) + "," +
             csv::format_double(row.mse) + "," + csv::format_double(row.crps) + "," +
             csv::format_double(include_timings ? row.mean_seconds : 0.0) + "\n";
    }
    return out;
  }

  std::string to_table() const {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-18s %-10s %10s %10s %8s %14s\n", "scenario", "method",
                  "mse", "crps", "failed", "sec/point");
    out += line;
    for (const auto& row : rows) {
      std::snprintf(line, sizeof(line), "%-18s %-10s %10.4f %10.4f %8d %14.6f\n",
                    row.scenario.c_str(), row.method.c_str(), row.mse, row.crps, row.n_failed,
                    row.mean_seconds);
      out += line;
    }
    return out;
  }
};

// Parses the flat key=value benchmark config ('#' starts a comment).
// Unknown keys, methods, or q modes are rejected before any computation.
inline BenchConfig parse_bench_config(std::istream& in);

namespace detail {

struct ScenarioData {
  std::string name;
  Dataset train;
  Matrix queries;  // one row per test point
  Vector truth;
};

inline std::vector<ScenarioData> make_scenarios(const BenchConfig& config) {
  std::vector<ScenarioData> out;
  if (config.scenario == "partitioned") {
    PartitionSpec spec;
    spec.d = config.d;
    SampledPartition sample = sample_partitioned_gp(spec, config.n_train, config.n_test, config.seed);
    ScenarioData data;
    data.name = "partitioned_d" + std::to_string(config.d);
    data.train = std::move(sample.train);
    data.queries = std::move(sample.test.x);
    data.truth = std::move(sample.truth);
    out.push_back(std::move(data));
  } else if (config.scenario == "boundary") {
    for (auto& sc : boundary_scenarios(config.seed)) {
      ScenarioData data;
      data.name = sc.name;
      data.train = std::move(sc.train);
      data.queries = Matrix(1, 2);
      data.queries.row(0) = sc.query.transpose();
      data.truth = Vector::Constant(1, sc.truth);
      out.push_back(std::move(data));
    }
  } else if (config.scenario == "constant") {
    // zero-noise flat surface; the trivial smoke scenario
    Rng rng(config.seed, Stream::design);
    ScenarioData data;
    data.name = "constant";
    data.train.x = lhs_design(config.n_train, config.d, rng);
    data.train.y = Vector::Constant(config.n_train, 5.0);
    data.queries = lhs_design(std::max(config.n_test, 1), config.d, rng);
    data.truth = Vector::Constant(std::max(config.n_test, 1), 5.0);
    out.push_back(std::move(data));
  } else {
    throw std::invalid_argument("unknown scenario: " + config.scenario);
  }
  return out;
}

}  // namespace detail

// Runs every configured method over every scenario; one report row per
// (method, scenario) pair. Per-query failures are counted and skipped, never
// fatal. Timing covers fit+predict only (neighbor selection excluded).
// Queries are fitted by a bounded worker pool; each point's result and timing
// are computed in isolation and reduced in input order, so metrics do not
// depend on the worker count.
inline BenchReport run_benchmark(const BenchConfig& config) {
  using clock = std::chrono::steady_clock;
  BenchReport report;
  const auto scenarios = detail::make_scenarios(config);
  for (const auto& scenario : scenarios) {
    const double train_median = median(scenario.train.y);
    const double train_mad = mad(scenario.train.y);
    const int n_neighbors = std::min(config.neighbors, scenario.train.size());
    const auto n_queries = static_cast<int>(scenario.queries.rows());

    for (const auto& method : config.methods) {
      BenchRow row;
      row.scenario = scenario.name;
      row.method = method;
      row.seed = config.seed;
      row.n_points = n_queries;

      struct PointResult {
        bool ok = false;
        double mean = 0.0;
        double variance = 0.0;
        double seconds = 0.0;
      };
      std::vector<PointResult> results(static_cast<std::size_t>(n_queries));
      const auto process = [&](int i) {
        PointResult out;
        try {
          if (method == "median") {
            out.mean = train_median;
            out.variance = train_mad * train_mad;
          } else {
            EstimatorConfig est = config.estimator;
            if (method == "localgp") {
              est.q_mode = QMode::fixed;
              est.q_fixed = 0;
            } else if (method != "rlgp") {
              throw std::invalid_argument("unknown method: " + method);
            }
            const Neighborhood nb =
                select_neighbors(scenario.train, scenario.queries.row(i).transpose(), n_neighbors);
            const auto t0 = clock::now();
            const FittedLocalModel model = fit(nb, est);
            const Prediction pred = predict(model);
            out.seconds = std::chrono::duration<double>(clock::now() - t0).count();
            out.mean = pred.mean;
            out.variance = pred.variance;
          }
          out.ok = true;
        } catch (const std::exception&) {
          out.ok = false;
        }
        return out;
      };

      int pool = config.workers > 0 ? config.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
      pool = std::clamp(pool, 1, std::max(1, n_queries));
      if (pool == 1 || method == "median") {
        for (int i = 0; i < n_queries; ++i) results[static_cast<std::size_t>(i)] = process(i);
      } else {
        std::atomic<int> next{0};
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int w = 0; w < pool; ++w)
          threads.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_queries; i = next.fetch_add(1))
              results[static_cast<std::size_t>(i)] = process(i);
          });
        for (auto& t : threads) t.join();
      }

      double sq_sum = 0.0;
      double crps_sum = 0.0;
      double seconds = 0.0;
      int ok = 0;
      for (int i = 0; i < n_queries; ++i) {
        const PointResult& res = results[static_cast<std::size_t>(i)];
        if (!res.ok) {
          ++row.n_failed;
          continue;
        }
        const double err = res.mean - scenario.truth(i);
        sq_sum += err * err;
        crps_sum += crps_gaussian(res.mean, res.variance, scenario.truth(i));
        seconds += res.seconds;
        ++ok;
      }
      row.mse = ok > 0 ? sq_sum / ok : 0.0;
      row.crps = ok > 0 ? crps_sum / ok : 0.0;
      row.mean_seconds = ok > 0 ? seconds / ok : 0.0;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Config parsing

// Grammar for the trimming level: "adaptive", a bare count, or a fraction of
// n written like "0.15n" / ".15n".
inline void apply_q_spec(const std::string& spec, EstimatorConfig& config) {
  if (spec == "adaptive") {
    config.q_mode = QMode::adaptive;
    return;
  }
  if (!spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos) {
    config.q_mode = QMode::fixed;
    config.q_fixed = std::stoi(spec);
    return;
  }
  std::string body = spec;
  if (!body.empty() && body.back() == 'n') {
    body.pop_back();
    std::string digits = body;
    if (!digits.empty() && digits.front() == '0') digits.erase(0, 1);
    if (digits.size() >= 2 && digits.front() == '.' &&
        digits.find_first_not_of("0123456789", 1) == std::string::npos) {
      config.q_mode = QMode::fraction;
      config.q_fraction = std::stod(body);
      return;
    }
  }
  throw std::invalid_argument("bad q spec '" + spec + "' (want adaptive, a count, or e.g. 0.15n)");
}

inline BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed(csv::trim(line));
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bench config line " + std::to_string(line_no) +
                                  ": expected key=value");
    const std::string key(csv::trim(trimmed.substr(0, eq)));
    const std::string value(csv::trim(trimmed.substr(eq + 1)));
    try {
      if (key == "scenario") {
        if (value != "partitioned" && value != "boundary" && value != "constant")
          throw std::invalid_argument("unknown scenario: " + value);
        config.scenario = value;
      } else if (key == "d") {
        config.d = std::stoi(value);
      } else if (key == "n_train") {
        config.n_train = std::stoi(value);
      } else if (key == "n_test") {
        config.n_test = std::stoi(value);
      } else if (key == "seed") {
        config.seed = std::stoull(value);
      } else if (key == "neighbors") {
        config.neighbors = std::stoi(value);
      } else if (key == "workers") {
        config.workers = std::stoi(value);
      } else if (key == "tau") {
        config.estimator.tau = std::stod(value);
      } else if (key == "q_mode") {
        apply_q_spec(value, config.estimator);
      } else if (key == "c0") {
        if (value == "one") config.estimator.c0_mode = C0Mode::one;
        else if (value == "corrected") config.estimator.c0_mode = C0Mode::corrected;
        else throw std::invalid_argument("c0 must be 'one' or 'corrected'");
      } else if (key == "methods") {
        config.methods.clear();
        std::stringstream parts(value);
        std::string item;
        while (std::getline(parts, item, ',')) {
          const std::string name(csv::trim(item));
          if (name != "rlgp" && name != "localgp" && name != "median")
            throw std::invalid_argument("unknown method: " + name);
          config.methods.push_back(name);
        }
        if (config.methods.empty()) throw std::invalid_argument("methods list is empty");
      } else {
        throw std::invalid_argument("unknown key: " + key);
      }
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument("bench config line " + std::to_string(line_no) + ": " +
                                  err.what());
    }
  }
  if (config.d < 1) throw std::invalid_argument("bench config: d must be >= 1");
  if (config.scenario == "partitioned" && config.n_test < 1)
    throw std::invalid_argument("bench config: partitioned scenario needs n_test >= 1");
  return config;
}

}  // namespace rlgp
