#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "boostlab/experiment.hpp"

using namespace boostlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("boostlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BOOSTLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(TriangleWave, KnownValues) {
  EXPECT_DOUBLE_EQ(triangle_wave(0.0), 0.0);
  EXPECT_DOUBLE_EQ(triangle_wave(0.5), 1.0);
  EXPECT_DOUBLE_EQ(triangle_wave(1.0), 0.0);
  EXPECT_DOUBLE_EQ(triangle_wave(-0.5), 1.0);
}

TEST(GenDataset, NoiselessResponsesEqualTruth) {
  ExperimentConfig cfg;
  cfg.sigma2 = 0.0;
  const Dataset d = gen_dataset(cfg);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.y[i], triangle_wave(d.x[i]));
}

TEST(GenDataset, DeterministicInSeedAndSorted) {
  ExperimentConfig cfg;
  const Dataset a = gen_dataset(cfg), b = gen_dataset(cfg);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_TRUE(std::is_sorted(a.x.begin(), a.x.end()));
  for (double x : a.x) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
  cfg.seed += 1;
  EXPECT_NE(gen_dataset(cfg).x, a.x);
}

TEST(GenDataset, NoiseHasRequestedVariance) {
  ExperimentConfig cfg;
  cfg.n = 20000;
  cfg.sigma2 = 0.25;
  const Dataset d = gen_dataset(cfg);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = d.y[i] - triangle_wave(d.x[i]);
    s += e;
    s2 += e * e;
  }
  const double n = static_cast<double>(d.size());
  EXPECT_NEAR(s / n, 0.0, 4.0 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 0.25, 4.0 * 0.25 * std::sqrt(2.0 / n));
}

TEST(GenDataset, RejectsTinySamples) {
  ExperimentConfig cfg;
  cfg.n = 1;
  EXPECT_THROW(gen_dataset(cfg), InputError);
}

TEST(TimeGrid, LogspaceAndList) {
  const Vector a = parse_t_grid("logspace:0:4:5");
  ASSERT_EQ(a.size(), 5u);
  EXPECT_DOUBLE_EQ(a.front(), 1.0);
  EXPECT_NEAR(a.back(), std::exp(4.0), 1e-12);
  EXPECT_NEAR(a[2], std::exp(2.0), 1e-12);
  EXPECT_EQ(parse_t_grid("list:0,1,10"), (Vector{0.0, 1.0, 10.0}));
  EXPECT_THROW(parse_t_grid("linspace:0:1:3"), InputError);
  EXPECT_THROW(parse_t_grid("list:3,1"), InputError);
  EXPECT_THROW(parse_t_grid("list:-1"), InputError);
  EXPECT_THROW(parse_t_grid("logspace:0:1"), InputError);
  EXPECT_THROW(parse_t_grid("list:1,x"), InputError);
}

TEST(Config, KeyValueFileOverridesDefaults) {
  ExperimentConfig cfg;
  apply_config_text(cfg, "# study\nn = 40\nsigma2=0.1\nlambdas = 0.5, 0.2\nt-grid = list:1,2\nseed = 17\n\n");
  EXPECT_EQ(cfg.n, 40u);
  EXPECT_DOUBLE_EQ(cfg.sigma2, 0.1);
  EXPECT_EQ(cfg.lambdas, (std::vector<double>{0.5, 0.2}));
  EXPECT_EQ(cfg.t_grid, "list:1,2");
  EXPECT_EQ(cfg.seed, 17u);
  EXPECT_THROW(apply_config_text(cfg, "bogus = 1"), InputError);
  EXPECT_THROW(apply_config_text(cfg, "n 5"), InputError);
  EXPECT_THROW(apply_config_text(cfg, "n = many"), InputError);
}

TEST(Csv, SeventeenSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-2.5e-7), "-2.4999999999999999e-07");
}

TEST(Commands, FitAtTimeZeroIsTheMean) {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("fit0");
  cfg.t_grid = "list:0";
  cfg.query_points = 50;
  cmd_fit(cfg);
  const auto rows = read_csv(cfg.out_dir / "fit.csv");
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"x", "t", "Fhat", "f_true"}));
  ASSERT_EQ(rows.size(), 51u);
  const double ybar = mean(gen_dataset(cfg).y);
  for (std::size_t r = 1; r < rows.size(); ++r) EXPECT_EQ(std::stod(rows[r][2]), ybar);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "fit.svg"));
}

TEST(Commands, ErrorsLimitMinimizerInPlausibleRange) {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("errors");
  cfg.mc_replicates = 500;
  cmd_errors(cfg);
  const auto rows = read_csv(cfg.out_dir / "errors.csv");
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"series", "t", "kind", "bias2", "var", "total"}));
  double best = INFINITY, best_t = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows)
    if (r[0] == "limit" && r[2] == "test_fixed") {
      ++count;
      if (std::stod(r[5]) < best) best = std::stod(r[5]), best_t = std::stod(r[1]);
    }
  EXPECT_EQ(count, 200u);
  EXPECT_GE(best_t, 3.0);
  EXPECT_LE(best_t, 12.0);
}

TEST(Commands, EigenReportsTwoUnitEigenvaluesFirst) {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("eigen");
  cmd_eigen(cfg);
  const auto rows = read_csv(cfg.out_dir / "eigenvalues.csv");
  ASSERT_EQ(rows.size(), 61u);
  int unit = 0;
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (std::abs(std::stod(rows[r][1]) - 1.0) < 1e-8) {
      ++unit;
      EXPECT_LE(r, 2u);
    }
  EXPECT_EQ(unit, 2);
  const auto vecs = read_csv(cfg.out_dir / "eigenvectors.csv");
  EXPECT_EQ(vecs.front().size(), 9u);
  EXPECT_EQ(vecs.size(), 101u);
}

TEST(Commands, ProjectWritesDfPerTime) {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("project");
  cmd_project(cfg);
  const auto df = read_csv(cfg.out_dir / "df.csv");
  ASSERT_EQ(df.size(), 5u);
  double prev = 0.0;
  for (std::size_t r = 1; r < df.size(); ++r) {
    const double v = std::stod(df[r][1]);
    EXPECT_GT(v, prev);
    EXPECT_LE(v, 100.0);
    prev = v;
  }
}

TEST(Commands, StochasticWritesAudit) {
  ExperimentConfig cfg;
  cfg.n = 30;
  cfg.out_dir = scratch("stochastic");
  cfg.mc_replicates = 300;
  cmd_stochastic(cfg);
  const auto bound = read_csv(cfg.out_dir / "variance_bound.csv");
  ASSERT_EQ(bound.size(), 31u);
  for (std::size_t r = 1; r < bound.size(); ++r) EXPECT_EQ(bound[r].back(), "1");
}

TEST(Commands, UnwritableOutputIsIoError) {
  ExperimentConfig cfg;
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "file";
  cfg.out_dir = blocker / "sub";
  EXPECT_THROW(cmd_eigen(cfg), IoError);
}

TEST(Commands, RerunsAreByteIdentical) {
  ExperimentConfig cfg;
  cfg.n = 40;
  cfg.mc_replicates = 200;
  cfg.t_grid = "logspace:0:3:20";
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  cfg.out_dir = a;
  cmd_errors(cfg);
  cmd_stochastic(cfg);
  cfg.out_dir = b;
  cfg.threads = 3;
  cmd_errors(cfg);
  cmd_stochastic(cfg);
  for (const char* f : {"errors.csv", "stochastic_mean.csv", "variance_bound.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(run_cli("eigen --out " + out.string()), 0);
  EXPECT_EQ(run_cli("eigen --n 1 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("eigen --t-grid nonsense --out " + out.string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("fit --bogus-flag 3"), 2);
  const fs::path blocker = scratch("cli_blocker");
  std::ofstream(blocker) << "file";
  EXPECT_EQ(run_cli("eigen --out " + (blocker / "x").string()), 4);
  EXPECT_EQ(run_cli("eigen --config /nonexistent/boostlab.conf"), 4);
}

TEST(Cli, FlagsOverrideConfigAndEnvironmentSuppliesSeed) {
  const fs::path dir = scratch("cli_cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "study.conf") << "n = 30\nseed = 5\n";
  ASSERT_EQ(run_cli("fit --config " + (dir / "study.conf").string() + " --n 25 --t-grid list:1 --out " +
                    (dir / "a").string()),
            0);
  EXPECT_EQ(read_csv(dir / "a" / "data.csv").size(), 26u);

  ASSERT_EQ(run_cli("fit --n 25 --seed 5 --t-grid list:1 --out " + (dir / "b").string()), 0);
  ASSERT_EQ(setenv("BOOSTLAB_SEED", "5", 1), 0);
  ASSERT_EQ(run_cli("fit --n 25 --t-grid list:1 --out " + (dir / "c").string()), 0);
  unsetenv("BOOSTLAB_SEED");
  EXPECT_EQ(slurp(dir / "b" / "fit.csv"), slurp(dir / "c" / "fit.csv"));
  EXPECT_EQ(slurp(dir / "a" / "fit.csv"), slurp(dir / "b" / "fit.csv"));
}
