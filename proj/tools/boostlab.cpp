// boostlab: command-line driver for the boosting simulation study.
//
//   boostlab fit|errors|eigen|project|stochastic [flags]
//
// Exit codes: 0 success, 2 usage error, 3 numeric error, 4 I/O error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "boostlab/experiment.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> n;
  std::optional<double> sigma2;
  std::optional<double> df;
  std::optional<std::string> lambdas;
  std::optional<std::string> t_grid;
  std::optional<double> subsample_rate;
  std::optional<std::size_t> mc_replicates;
  std::optional<std::size_t> query_points;
  std::optional<unsigned> threads;
  std::optional<double> stochastic_lambda;
  std::optional<double> stochastic_t;
};

boostlab::ExperimentConfig resolve(const Flags& f) {
  boostlab::ExperimentConfig cfg;
  bool seed_set = false;
  if (f.config) {
    const auto before = cfg.seed;
    boostlab::load_config_file(cfg, *f.config);
    seed_set = cfg.seed != before;
  }
  if (f.seed) {
    cfg.seed = *f.seed;
  } else if (!seed_set) {
    if (const char* env = std::getenv("BOOSTLAB_SEED"); env && *env) {
      const std::string s(env);
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw boostlab::InputError("BOOSTLAB_SEED: not an unsigned 64-bit integer: " + s);
      cfg.seed = v;
    }
  }
  if (f.out) cfg.out_dir = *f.out;
  if (f.n) cfg.n = *f.n;
  if (f.sigma2) cfg.sigma2 = *f.sigma2;
  if (f.df) cfg.df = *f.df;
  if (f.lambdas) cfg.lambdas = boostlab::parse_csv_list(*f.lambdas, "--lambdas");
  if (f.t_grid) cfg.t_grid = *f.t_grid;
  if (f.subsample_rate) cfg.subsample_rate = *f.subsample_rate;
  if (f.mc_replicates) cfg.mc_replicates = *f.mc_replicates;
  if (f.query_points) cfg.query_points = *f.query_points;
  if (f.threads) cfg.threads = *f.threads;
  if (f.stochastic_lambda) cfg.stochastic_lambda = *f.stochastic_lambda;
  if (f.stochastic_t) cfg.stochastic_t = *f.stochastic_t;

  if (cfg.n < 2) throw boostlab::InputError("--n must be at least 2");
  if (!(cfg.sigma2 >= 0.0)) throw boostlab::InputError("--sigma2 must be >= 0");
  if (!(cfg.df > 2.0 && cfg.df <= static_cast<double>(cfg.n)))
    throw boostlab::InputError("--df must lie in (2, n]");
  for (double l : cfg.lambdas)
    if (!(l > 0.0 && l <= 1.0)) throw boostlab::InputError("--lambdas: every rate must lie in (0, 1]");
  if (!(cfg.subsample_rate > 0.0 && cfg.subsample_rate <= 1.0))
    throw boostlab::InputError("--subsample-rate must lie in (0, 1]");
  if (cfg.threads < 1) throw boostlab::InputError("--threads must be at least 1");
  if (!cfg.t_grid.empty()) boostlab::parse_t_grid(cfg.t_grid);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear L2 boosting: limit paths, error curves and subsampling"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "flat key = value file; flags win");
  app.add_option("--seed", f.seed, "master seed (fallback: BOOSTLAB_SEED)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--n", f.n, "sample size");
  app.add_option("--sigma2", f.sigma2, "noise variance");
  app.add_option("--df", f.df, "target trace of the spline smoother");
  app.add_option("--lambdas", f.lambdas, "comma-separated learning rates");
  app.add_option("--t-grid", f.t_grid, "logspace:a:b:k or list:v1,v2,...");
  app.add_option("--subsample-rate", f.subsample_rate, "subsampling fraction s");
  app.add_option("--mc-replicates", f.mc_replicates, "Monte Carlo size");
  app.add_option("--query-points", f.query_points, "fit grid size");
  app.add_option("--threads", f.threads, "worker threads for replicates");
  app.add_option("--stochastic-lambda", f.stochastic_lambda, "rate for the stochastic command");
  app.add_option("--stochastic-t", f.stochastic_t, "time horizon for the stochastic command");

  using Command = std::vector<std::filesystem::path> (*)(const boostlab::ExperimentConfig&);
  const std::pair<const char*, Command> verbs[] = {
      {"fit", boostlab::cmd_fit},         {"errors", boostlab::cmd_errors},
      {"eigen", boostlab::cmd_eigen},     {"project", boostlab::cmd_project},
      {"stochastic", boostlab::cmd_stochastic},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, fn] : verbs) subs.emplace_back(app.add_subcommand(name), fn);
  subs[0].first->description("fitted limit curves");
  subs[1].first->description("expected train / test error curves");
  subs[2].first->description("spectrum and eigenvectors of the smoother");
  subs[3].first->description("smoothed-projection coefficients and df(t)");
  subs[4].first->description("subsampled boosting against the mean-field formula");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto cfg = resolve(f);
    for (const auto& [sub, fn] : subs)
      if (sub->parsed())
        for (const auto& p : fn(cfg)) std::cout << p.string() << '\n';
    return 0;
  } catch (const boostlab::InputError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const boostlab::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  } catch (const boostlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
