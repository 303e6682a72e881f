// Drivers behind the command-line front end. Kept in the library so the
// commands can be exercised directly in tests; the binary only parses flags.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 schema error.
// Per-row numerical failures never abort a run; they land in the output's
// error column. Output files are written atomically and with 17-significant-
// digit numbers, so reruns with the same seed and inputs are byte-identical
// (timing columns excluded unless --no-timings zeroes them).

#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "rlgp/csv.hpp"
#include "rlgp/predictor.hpp"
#include "rlgp/synthbench.hpp"

namespace rlgp {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitSchema = 4;

}  // namespace cli

struct RunConfig {
  std::string train_path;
  std::string test_path;
  std::string output_path;
  std::string config_path;  // bench only
  int neighbors = 50;       // clamped to the corpus size per query
  std::string q_spec = "adaptive";
  double tau = 3.0;
  std::string c0 = "one";
  std::uint64_t seed = 0;
  bool scale = false;
  int workers = 0;  // 0 means hardware concurrency
  double tol_outer = 1e-8;
  double tol_gamma = 1e-10;
  bool timings = true;
};

namespace detail {

struct RowOutcome {
  bool ok = false;
  double mean = 0.0;
  double variance = 0.0;
  int q_used = 0;
  int n_outliers = 0;
  double seconds = 0.0;
  std::string error;
  std::vector<int> outlier_rows;      // global training-row indices
  std::vector<double> outlier_gamma;  // matching gamma entries
};

inline EstimatorConfig estimator_config(const RunConfig& cfg) {
  EstimatorConfig est;
  apply_q_spec(cfg.q_spec, est);
  est.tau = cfg.tau;
  if (cfg.c0 == "one") est.c0_mode = C0Mode::one;
  else if (cfg.c0 == "corrected") est.c0_mode = C0Mode::corrected;
  else throw std::invalid_argument("--c0 must be 'one' or 'corrected'");
  est.tol_outer = cfg.tol_outer;
  est.tol_gamma = cfg.tol_gamma;
  if (!(est.tau > 0.0)) throw std::invalid_argument("--tau must be positive");
  return est;
}

// Test-file schema: header exactly x1..xd for the training dimension d.
inline Matrix load_queries(std::istream& in, int d) {
  const csv::Table table = csv::read_table(in);
  if (static_cast<int>(table.header.size()) != d)
    throw ParseError("test file has " + std::to_string(table.header.size()) +
                     " columns, expected " + std::to_string(d));
  for (int j = 0; j < d; ++j) {
    const std::string expected = "x" + std::to_string(j + 1);
    if (table.header[static_cast<std::size_t>(j)] != expected)
      throw ParseError("expected test header column '" + expected + "', found '" +
                       table.header[static_cast<std::size_t>(j)] + "'");
  }
  if (table.rows.empty()) throw ParseError("no rows");
  Matrix queries(static_cast<Eigen::Index>(table.rows.size()), d);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (int j = 0; j < d; ++j) queries(static_cast<Eigen::Index>(i), j) = table.rows[i][static_cast<std::size_t>(j)];
  return queries;
}

// Fits every query row with a bounded worker pool. Rows are independent pure
// computations, so the worker count never changes the results.
inline std::vector<RowOutcome> fit_all(const Dataset& train, const Matrix& queries,
                                       const EstimatorConfig& est, int neighbors, int workers,
                                       bool timings) {
  const auto n_rows = static_cast<int>(queries.rows());
  const int n_local = std::min(neighbors, train.size());
  std::vector<RowOutcome> rows(static_cast<std::size_t>(n_rows));

  const auto process = [&](int i) {
    RowOutcome out;
    try {
      const Neighborhood nb = select_neighbors(train, queries.row(i).transpose(), n_local);
      const auto t0 = std::chrono::steady_clock::now();
      const FittedLocalModel model = fit(nb, est);
      const Prediction pred = predict(model);
      out.seconds =
          timings ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                  : 0.0;
      out.ok = true;
      out.mean = pred.mean;
      out.variance = pred.variance;
      out.q_used = model.q_used;
      out.n_outliers = static_cast<int>(model.gamma.support.size());
      for (int local : model.gamma.support) {
        out.outlier_rows.push_back(model.neighborhood.indices[static_cast<std::size_t>(local)]);
        out.outlier_gamma.push_back(model.gamma.gamma(local));
      }
    } catch (const std::exception& err) {
      out.error = err.what();
      for (auto& ch : out.error)
        if (ch == ',' || ch == '\n') ch = ';';
    }
    return out;
  };

  int pool = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  pool = std::clamp(pool, 1, std::max(1, n_rows));
  if (pool == 1) {
    for (int i = 0; i < n_rows; ++i) rows[static_cast<std::size_t>(i)] = process(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int w = 0; w < pool; ++w)
      threads.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n_rows; i = next.fetch_add(1))
          rows[static_cast<std::size_t>(i)] = process(i);
      });
    for (auto& t : threads) t.join();
  }
  return rows;
}

struct LoadedInputs {
  Dataset train;
  Matrix queries;
};

inline LoadedInputs load_inputs(const RunConfig& cfg) {
  std::ifstream train_in(cfg.train_path);
  if (!train_in) throw std::ios_base::failure("cannot open train file: " + cfg.train_path);
  Dataset train = load_dataset(train_in);

  std::ifstream test_in(cfg.test_path);
  if (!test_in) throw std::ios_base::failure("cannot open test file: " + cfg.test_path);
  Matrix queries = load_queries(test_in, train.dim());

  if (cfg.scale) {
    const FeatureScaling scaling = FeatureScaling::fit(train.x);
    train.x = scaling.apply(train.x);
    queries = scaling.apply(queries);
  }
  return LoadedInputs{std::move(train), std::move(queries)};
}

}  // namespace detail

// predict: one output row per test point.
inline int run_predict(const RunConfig& cfg, std::ostream& diag) {
  try {
    const EstimatorConfig est = detail::estimator_config(cfg);
    detail::LoadedInputs inputs = detail::load_inputs(cfg);
    const auto rows =
        detail::fit_all(inputs.train, inputs.queries, est, cfg.neighbors, cfg.workers, cfg.timings);

    std::string out;
    const int d = inputs.train.dim();
    for (int j = 0; j < d; ++j) out += "x" + std::to_string(j + 1) + ",";
    out += "pred_mean,pred_var,q_used,n_outliers,seconds,error\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int j = 0; j < d; ++j)
        out += csv::format_double(inputs.queries(static_cast<Eigen::Index>(i), j)) + ",";
      const auto& row = rows[i];
      if (row.ok) {
        out += csv::format_double(row.mean) + "," + csv::format_double(row.variance) + "," +
               std::to_string(row.q_used) + "," + std::to_string(row.n_outliers) + "," +
               csv::format_double(row.seconds) + ",\n";
      } else {
        out += ",,,,," + row.error + "\n";
      }
    }
    csv::atomic_write(cfg.output_path, out);
    return cli::kExitOk;
  } catch (const ParseError& err) {
    diag << "schema error: " << err.what() << "\n";
    return cli::kExitSchema;
  } catch (const std::ios_base::failure& err) {
    diag << "io error: " << err.what() << "\n";
    return cli::kExitIo;
  } catch (const std::invalid_argument& err) {
    diag << "config error: " << err.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& err) {
    diag << "error: " << err.what() << "\n";
    return cli::kExitIo;
  }
}

// outliers: per test point, the global training rows flagged by gamma.
inline int run_outliers(const RunConfig& cfg, std::ostream& diag) {
  try {
    const EstimatorConfig est = detail::estimator_config(cfg);
    detail::LoadedInputs inputs = detail::load_inputs(cfg);
    const auto rows =
        detail::fit_all(inputs.train, inputs.queries, est, cfg.neighbors, cfg.workers, cfg.timings);

    std::string out = "test_row,train_row,gamma_value\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      for (std::size_t k = 0; k < row.outlier_rows.size(); ++k)
        out += std::to_string(i) + "," + std::to_string(row.outlier_rows[k]) + "," +
               csv::format_double(row.outlier_gamma[k]) + "\n";
    }
    csv::atomic_write(cfg.output_path, out);
    return cli::kExitOk;
  } catch (const ParseError& err) {
    diag << "schema error: " << err.what() << "\n";
    return cli::kExitSchema;
  } catch (const std::ios_base::failure& err) {
    diag << "io error: " << err.what() << "\n";
    return cli::kExitIo;
  } catch (const std::invalid_argument& err) {
    diag << "config error: " << err.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& err) {
    diag << "error: " << err.what() << "\n";
    return cli::kExitIo;
  }
}

// bench: run the configured benchmark, write the CSV report, print the table.
inline int run_bench(const RunConfig& cfg, std::ostream& diag, std::ostream& table_out) {
  BenchConfig config;
  try {
    std::ifstream in(cfg.config_path);
    if (!in) {
      diag << "io error: cannot open bench config: " << cfg.config_path << "\n";
      return cli::kExitIo;
    }
    config = parse_bench_config(in);
  } catch (const std::invalid_argument& err) {
    diag << "config error: " << err.what() << "\n";
    return cli::kExitConfig;
  }
  try {
    const BenchReport report = run_benchmark(config);
    csv::atomic_write(cfg.output_path, report.to_csv(cfg.timings));
    table_out << report.to_table();
    return cli::kExitOk;
  } catch (const std::exception& err) {
    diag << "error: " << err.what() << "\n";
    return cli::kExitIo;
  }
}

}  // namespace rlgp
