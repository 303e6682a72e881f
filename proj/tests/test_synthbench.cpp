#include <catch2/catch.hpp>

#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace rlgp;

TEST_CASE("lhs_design stratification") {
  SECTION("single point lies in the cell") {
    Rng rng(71);
    const Matrix x = lhs_design(1, 3, rng);
    for (int j = 0; j < 3; ++j) {
      REQUIRE(x(0, j) >= -0.5);
      REQUIRE(x(0, j) < 0.5);
    }
  }
  SECTION("n = 4, d = 1: sorted coordinates hit the four strata") {
    Rng rng(72);
    Matrix x = lhs_design(4, 1, rng);
    std::vector<double> coords(x.data(), x.data() + 4);
    std::sort(coords.begin(), coords.end());
    REQUIRE(coords[0] >= -0.5);
    REQUIRE(coords[0] < -0.25);
    REQUIRE(coords[1] >= -0.25);
    REQUIRE(coords[1] < 0.0);
    REQUIRE(coords[2] >= 0.0);
    REQUIRE(coords[2] < 0.25);
    REQUIRE(coords[3] >= 0.25);
    REQUIRE(coords[3] <= 0.5);
  }
  SECTION("per-column histogram over n strata is all ones") {
    Rng rng(73);
    const int n = 100;
    const Matrix x = lhs_design(n, 3, rng);
    for (int j = 0; j < 3; ++j) {
      std::vector<int> counts(n, 0);
      for (int i = 0; i < n; ++i) {
        const int stratum = static_cast<int>(std::floor((x(i, j) + 0.5) * n));
        REQUIRE(stratum >= 0);
        REQUIRE(stratum < n);
        ++counts[static_cast<std::size_t>(stratum)];
      }
      for (int c : counts) REQUIRE(c == 1);
    }
  }
  SECTION("same stream gives identical designs") {
    Rng a(74), b(74);
    REQUIRE((lhs_design(31, 4, a) - lhs_design(31, 4, b)).norm() == 0.0);
  }
}

TEST_CASE("sample_partitioned_gp") {
  SECTION("d = 1, a = [+1]: x >= 0 takes the mean-0 branch") {
    PartitionSpec spec;
    spec.d = 1;
    spec.a = Vector::Constant(1, 1.0);
    const SampledPartition s = sample_partitioned_gp(spec, 400, 0, 5);
    double sum_pos = 0.0, sum_neg = 0.0;
    int n_pos = 0, n_neg = 0;
    for (int i = 0; i < 400; ++i) {
      if (s.train.x(i, 0) >= 0.0) {
        sum_pos += s.train_truth(i);
        ++n_pos;
      } else {
        sum_neg += s.train_truth(i);
        ++n_neg;
      }
    }
    REQUIRE(n_pos > 50);
    REQUIRE(n_neg > 50);
    // d=1 fields are strongly correlated within a region, so region averages
    // wander; the 11-unit gap still separates them decisively
    REQUIRE(sum_pos / n_pos < 5.5);
    REQUIRE(sum_neg / n_neg > 5.5);
  }

  SECTION("mean gap between regions is near 11") {
    // single-draw region means wander with the correlated field, so the gap
    // is checked as an average over seeds
    double gap_sum = 0.0;
    const int seeds = 6;
    for (int seed = 1; seed <= seeds; ++seed) {
      PartitionSpec spec;
      spec.d = 10;
      const SampledPartition s = sample_partitioned_gp(spec, 300, 0, static_cast<std::uint64_t>(seed));
      double sum1 = 0.0, sum2 = 0.0;
      int n1 = 0, n2 = 0;
      for (int i = 0; i < 300; ++i) {
        if ((s.train.x.row(i) * s.spec.a)(0) >= 0.0) {
          sum1 += s.train_truth(i);
          ++n1;
        } else {
          sum2 += s.train_truth(i);
          ++n2;
        }
      }
      REQUIRE(n1 > 0);
      REQUIRE(n2 > 0);
      gap_sum += sum2 / n2 - sum1 / n1;
    }
    REQUIRE(gap_sum / seeds == Approx(11.0).margin(1.5));
  }

  SECTION("training noise variance is near 3") {
    PartitionSpec spec;
    spec.d = 3;
    const SampledPartition s = sample_partitioned_gp(spec, 600, 0, 9);
    const Vector noise = s.train.y - s.train_truth;
    const double var = (noise.array() - noise.mean()).square().sum() / 600.0;
    REQUIRE(var == Approx(3.0).margin(0.5));
  }

  SECTION("generator covariance matches 7 exp(-0.1 d * D) entrywise") {
    PartitionSpec spec;
    spec.d = 6;
    Rng rng(75);
    const Matrix sites = testutil::random_inputs(rng, 20, 6);
    const DistanceMatrix dist = pairwise_sq_dist(sites);
    const Matrix cov = partition_covariance(spec, dist);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        REQUIRE(cov(i, j) ==
                Approx(7.0 * std::exp(-0.6 * dist.d(i, j))).epsilon(1e-14));
  }

  SECTION("identical seeds reproduce bit-identical draws; train is test-size invariant") {
    PartitionSpec spec;
    spec.d = 3;
    const SampledPartition a = sample_partitioned_gp(spec, 50, 20, 123);
    const SampledPartition b = sample_partitioned_gp(spec, 50, 20, 123);
    REQUIRE((a.train.x - b.train.x).norm() == 0.0);
    REQUIRE((a.train.y - b.train.y).norm() == 0.0);
    REQUIRE((a.test.x - b.test.x).norm() == 0.0);

    const SampledPartition c = sample_partitioned_gp(spec, 50, 60, 123);
    REQUIRE((a.train.x - c.train.x).norm() == 0.0);
    REQUIRE((a.train.y - c.train.y).norm() == 0.0);
  }
}

TEST_CASE("boundary_scenarios") {
  const auto scenarios = boundary_scenarios(3);
  REQUIRE(scenarios.size() == 3);
  REQUIRE(scenarios[0].name == "interior");
  REQUIRE(scenarios[1].name == "simple_boundary");
  REQUIRE(scenarios[2].name == "complex_boundary");

  SECTION("interior neighborhood is uncontaminated") {
    const Neighborhood nb = select_neighbors(scenarios[0].train, scenarios[0].query, 50);
    for (int i = 0; i < 50; ++i) REQUIRE(nb.xn(i, 0) < 0.0);
  }
  SECTION("simple boundary neighborhood has at least 20% foreign points") {
    const Neighborhood nb = select_neighbors(scenarios[1].train, scenarios[1].query, 50);
    int foreign = 0;
    for (int i = 0; i < 50; ++i)
      if (nb.xn(i, 0) >= 0.0) ++foreign;
    REQUIRE(foreign >= 10);
  }
  SECTION("complex boundary neighborhood touches at least 3 regions") {
    const Neighborhood nb = select_neighbors(scenarios[2].train, scenarios[2].query, 50);
    std::set<int> regions;
    for (int i = 0; i < 50; ++i) {
      const int quadrant = (nb.xn(i, 0) >= 0.0 ? 1 : 0) + (nb.xn(i, 1) >= 0.0 ? 2 : 0);
      regions.insert(quadrant);
    }
    REQUIRE(regions.size() >= 3);
  }
}

TEST_CASE("bench config parsing") {
  SECTION("round trip of a full config") {
    std::istringstream in(
        "# smoke\n"
        "scenario = partitioned\n"
        "d=3\n"
        "n_train = 30\n"
        "n_test=10\n"
        "seed = 7\n"
        "neighbors=20\n"
        "q_mode = 0.15n\n"
        "tau = 2.5\n"
        "c0 = corrected\n"
        "methods = rlgp, median\n");
    const BenchConfig cfg = parse_bench_config(in);
    REQUIRE(cfg.scenario == "partitioned");
    REQUIRE(cfg.d == 3);
    REQUIRE(cfg.n_train == 30);
    REQUIRE(cfg.n_test == 10);
    REQUIRE(cfg.seed == 7);
    REQUIRE(cfg.neighbors == 20);
    REQUIRE(cfg.estimator.q_mode == QMode::fraction);
    REQUIRE(cfg.estimator.q_fraction == Approx(0.15));
    REQUIRE(cfg.estimator.tau == Approx(2.5));
    REQUIRE(cfg.estimator.c0_mode == C0Mode::corrected);
    REQUIRE(cfg.methods == std::vector<std::string>{"rlgp", "median"});
  }
  SECTION("unknown method rejected") {
    std::istringstream in("methods = rlgp, tgp\n");
    REQUIRE_THROWS_WITH(parse_bench_config(in), Catch::Contains("unknown method"));
  }
  SECTION("unknown key rejected") {
    std::istringstream in("shenanigans = 1\n");
    REQUIRE_THROWS_WITH(parse_bench_config(in), Catch::Contains("unknown key"));
  }
  SECTION("q spec grammar") {
    EstimatorConfig est;
    apply_q_spec("adaptive", est);
    REQUIRE(est.q_mode == QMode::adaptive);
    apply_q_spec("7", est);
    REQUIRE(est.q_mode == QMode::fixed);
    REQUIRE(est.q_fixed == 7);
    apply_q_spec(".2n", est);
    REQUIRE(est.q_mode == QMode::fraction);
    REQUIRE(est.q_fraction == Approx(0.2));
    REQUIRE_THROWS_AS(apply_q_spec("0.15", est), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_q_spec("n", est), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_q_spec("", est), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_q_spec("-3", est), std::invalid_argument);
  }
}

TEST_CASE("run_benchmark") {
  SECTION("median baseline on the zero-noise constant surface has MSE 0") {
    BenchConfig cfg;
    cfg.scenario = "constant";
    cfg.d = 2;
    cfg.n_train = 30;
    cfg.n_test = 8;
    cfg.methods = {"median"};
    const BenchReport report = run_benchmark(cfg);
    REQUIRE(report.rows.size() == 1);
    REQUIRE(report.rows[0].mse == 0.0);
    REQUIRE(report.rows[0].crps == 0.0);
    REQUIRE(report.rows[0].n_failed == 0);
  }

  SECTION("row count is methods x scenarios") {
    BenchConfig cfg;
    cfg.scenario = "boundary";
    cfg.seed = 4;
    cfg.neighbors = 25;
    cfg.methods = {"rlgp", "localgp", "median"};
    const BenchReport report = run_benchmark(cfg);
    REQUIRE(report.rows.size() == 9);
  }

  SECTION("identical seed and config give identical reports") {
    BenchConfig cfg;
    cfg.scenario = "partitioned";
    cfg.d = 2;
    cfg.n_train = 40;
    cfg.n_test = 6;
    cfg.seed = 11;
    cfg.neighbors = 20;
    const BenchReport a = run_benchmark(cfg);
    const BenchReport b = run_benchmark(cfg);
    REQUIRE(a.to_csv(false) == b.to_csv(false));
  }

  SECTION("adaptive rlgp beats the untrimmed local GP near the simple boundary") {
    int wins = 0;
    const int seeds = 20;
    for (int seed = 1; seed <= seeds; ++seed) {
      BenchConfig cfg;
      cfg.scenario = "boundary";
      cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.methods = {"rlgp", "localgp"};
      const BenchReport report = run_benchmark(cfg);
      double rlgp_err = -1.0, localgp_err = -1.0;
      for (const auto& row : report.rows) {
        if (row.scenario != "simple_boundary") continue;
        if (row.method == "rlgp") rlgp_err = std::sqrt(row.mse);
        if (row.method == "localgp") localgp_err = std::sqrt(row.mse);
      }
      REQUIRE(rlgp_err >= 0.0);
      REQUIRE(localgp_err >= 0.0);
      if (rlgp_err < localgp_err) ++wins;
    }
    REQUIRE(wins > seeds / 2);
  }
}
