#pragma once

// Simulation study driver: data from Y = f(X) + eps with X ~ Unif[-1, 1],
// eps ~ N(0, sigma2) and the triangle wave f(x) = 1 - |2|x| - 1|, a cubic
// smoothing spline calibrated to a target df as base learner, and one command
// per output family (fitted curves, error curves, spectrum, smoothed
// projection, subsampling).  Every command is a pure function of the config.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "boostlab/boosting.hpp"
#include "boostlab/errors.hpp"
#include "boostlab/learners.hpp"
#include "boostlab/random.hpp"
#include "boostlab/stochastic.hpp"

namespace boostlab {

struct ExperimentConfig {
  std::size_t n = 100;
  double sigma2 = 0.25;
  double df = 5.0;
  std::uint64_t seed = 20230101;
  std::string t_grid;  // empty: per-command default
  std::vector<double> lambdas{1.0, 0.5, 0.1};
  double subsample_rate = 0.5;
  std::filesystem::path out_dir = ".";
  std::size_t query_points = 512;
  std::size_t mc_replicates = 10000;
  unsigned threads = 1;
  double stochastic_lambda = 0.1;
  double stochastic_t = 1.0;
};

inline double triangle_wave(double x) noexcept { return 1.0 - std::abs(2.0 * std::abs(x) - 1.0); }

/// n i.i.d. pairs (X, eps) from stream (seed, 0), sorted by X.
inline Dataset gen_dataset(const ExperimentConfig& cfg) {
  if (cfg.n < 2) throw InputError("--n must be at least 2");
  if (!(cfg.sigma2 >= 0.0)) throw InputError("--sigma2 must be >= 0");
  CounterRng rng(cfg.seed, 0, 0);
  const double sigma = std::sqrt(cfg.sigma2);
  std::vector<std::pair<double, double>> draws(cfg.n);
  for (auto& [x, eps] : draws) {
    x = rng.uniform(-1.0, 1.0);
    eps = sigma * rng.normal();
  }
  std::sort(draws.begin(), draws.end());
  Dataset d;
  d.f_true = triangle_wave;
  d.sigma = sigma;
  for (const auto& [x, eps] : draws) {
    d.x.push_back(x);
    d.y.push_back(triangle_wave(x) + eps);
  }
  d.validate();
  return d;
}

/// "logspace:a:b:k" (k points exp(a) .. exp(b), natural-log exponents) or
/// "list:v1,v2,...".
inline Vector parse_t_grid(std::string_view spec) {
  auto to_double = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw InputError("--t-grid: cannot parse number '" + std::string(s) + "'");
    return v;
  };
  auto split = [](std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
      if (i == s.size() || s[i] == sep) {
        parts.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    return parts;
  };
  Vector grid;
  if (spec.starts_with("list:")) {
    for (auto part : split(spec.substr(5), ',')) grid.push_back(to_double(part));
  } else if (spec.starts_with("logspace:")) {
    const auto parts = split(spec.substr(9), ':');
    if (parts.size() != 3) throw InputError("--t-grid: expected logspace:a:b:k");
    const double a = to_double(parts[0]), b = to_double(parts[1]);
    const double kd = to_double(parts[2]);
    if (!(kd >= 1.0) || kd != std::floor(kd)) throw InputError("--t-grid: logspace count must be a positive integer");
    const auto k = static_cast<std::size_t>(kd);
    for (std::size_t i = 0; i < k; ++i)
      grid.push_back(std::exp(k == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(k - 1)));
  } else {
    throw InputError("--t-grid: expected 'logspace:a:b:k' or 'list:v1,v2,...'");
  }
  if (grid.empty()) throw InputError("--t-grid: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!(grid[i] >= 0.0) || (i > 0 && grid[i] < grid[i - 1]))
      throw InputError("--t-grid: times must be nonnegative and ascending");
  return grid;
}

inline std::vector<double> parse_csv_list(std::string_view s, const char* flag) {
  std::vector<double> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == ',') {
      auto part = s.substr(start, i - start);
      while (!part.empty() && (part.front() == ' ' || part.front() == '\t')) part.remove_prefix(1);
      while (!part.empty() && (part.back() == ' ' || part.back() == '\t')) part.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (ec != std::errc() || ptr != part.data() + part.size())
        throw InputError(std::string(flag) + ": cannot parse '" + std::string(part) + "'");
      out.push_back(v);
      start = i + 1;
    }
  return out;
}

/// Applies flat "key = value" lines ('#' starts a comment). Keys match the
/// long flag names without dashes.
inline void apply_config_text(ExperimentConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto num = [](const std::string& key, const std::string& v) {
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw InputError("config: bad value for " + key + ": " + v);
    return d;
  };
  auto count = [&](const std::string& key, const std::string& v) {
    const double d = num(key, v);
    if (d < 0 || d != std::floor(d)) throw InputError("config: " + key + " must be a nonnegative integer");
    return static_cast<std::size_t>(d);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "n") cfg.n = count(key, value);
    else if (key == "sigma2") cfg.sigma2 = num(key, value);
    else if (key == "df") cfg.df = num(key, value);
    else if (key == "seed") {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
      if (ec != std::errc() || ptr != value.data() + value.size()) throw InputError("config: bad seed " + value);
      cfg.seed = s;
    } else if (key == "t-grid" || key == "t_grid") cfg.t_grid = value;
    else if (key == "lambdas") cfg.lambdas = parse_csv_list(value, "lambdas");
    else if (key == "subsample-rate" || key == "subsample_rate") cfg.subsample_rate = num(key, value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "query-points" || key == "query_points") cfg.query_points = count(key, value);
    else if (key == "mc-replicates" || key == "mc_replicates") cfg.mc_replicates = count(key, value);
    else if (key == "threads") cfg.threads = static_cast<unsigned>(count(key, value));
    else if (key == "stochastic-lambda" || key == "stochastic_lambda") cfg.stochastic_lambda = num(key, value);
    else if (key == "stochastic-t" || key == "stochastic_t") cfg.stochastic_t = num(key, value);
    else throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
}

inline void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

/// Shortest-round-trip is not enough for byte stability across platforms;
/// always 17 significant digits, '.' decimal point regardless of locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::filesystem::path path_;
  std::ofstream out_;
};

/// Minimal SVG line chart: one polyline per series, optional scatter points.
class SvgPlot {
 public:
  SvgPlot(std::string title, bool log_x = false, bool log_y = false)
      : title_(std::move(title)), log_x_(log_x), log_y_(log_y) {}

  void line(std::string label, Vector xs, Vector ys) { series_.push_back({std::move(label), std::move(xs), std::move(ys), false}); }
  void points(std::string label, Vector xs, Vector ys) { series_.push_back({std::move(label), std::move(xs), std::move(ys), true}); }

  void write(const std::filesystem::path& path) const {
    constexpr double W = 800, H = 560, L = 70, R = 180, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double x = tx(s.x[i]), y = ty(s.y[i]);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
      }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << L << "\" y=\"24\" font-size=\"16\">" << title_ << "</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\"" << (H - T - B)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << L << "\" y=\"" << (H - 20) << "\" font-size=\"12\">" << (log_x_ ? "log " : "") << "x: ["
        << format_number(x0) << ", " << format_number(x1) << "]  " << (log_y_ ? "log10 " : "") << "y: ["
        << format_number(y0) << ", " << format_number(y1) << "]</text>\n";
    std::size_t k = 0;
    for (const auto& s : series_) {
      const char* colour = palette[k % std::size(palette)];
      if (s.scatter) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (std::isfinite(ty(s.y[i])))
            out << "<circle cx=\"" << format_number(px(s.x[i])) << "\" cy=\"" << format_number(py(s.y[i]))
                << "\" r=\"2\" fill=\"black\"/>\n";
      } else {
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (std::isfinite(ty(s.y[i]))) out << format_number(px(s.x[i])) << ',' << format_number(py(s.y[i])) << ' ';
        out << "\"/>\n";
      }
      out << "<text x=\"" << (W - R + 10) << "\" y=\"" << (T + 16 * (k + 1)) << "\" font-size=\"12\" fill=\""
          << (s.scatter ? "black" : colour) << "\">" << s.label << "</text>\n";
      ++k;
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path.string());
  }

 private:
  struct Series {
    std::string label;
    Vector x, y;
    bool scatter;
  };
  double tx(double x) const { return log_x_ ? std::log(x) : x; }
  double ty(double y) const { return log_y_ ? std::log10(y) : y; }

  std::string title_;
  bool log_x_, log_y_;
  std::vector<Series> series_;
};

namespace detail {

inline std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.out_dir))
    throw IoError("cannot create output directory " + cfg.out_dir.string());
  return cfg.out_dir;
}

inline Vector query_grid(const Dataset& d, std::size_t points) {
  if (points < 2) throw InputError("--query-points must be at least 2");
  Vector q(points);
  const double a = d.x.front(), b = d.x.back();
  for (std::size_t i = 0; i < points; ++i) q[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  return q;
}

inline Vector grid_or(const ExperimentConfig& cfg, std::string_view fallback) {
  return parse_t_grid(cfg.t_grid.empty() ? fallback : std::string_view(cfg.t_grid));
}

inline std::string short_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string lambda_label(double lambda) { return "lambda=" + short_number(lambda); }

}  // namespace detail

/// Base learner of the study: smoothing spline with trace S = df.
inline CalibratedSpline study_learner(const Dataset& d, const ExperimentConfig& cfg) { return calibrate_df(d, cfg.df); }

/// Fitted limit curves F_t on the query grid (default t = 0, 1, 10, 100, 1000).
inline std::vector<std::filesystem::path> cmd_fit(const ExperimentConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset d = gen_dataset(cfg);
  const auto cal = study_learner(d, cfg);
  const Vector ts = detail::grid_or(cfg, "list:0,1,10,100,1000");
  const Vector q = detail::query_grid(d, cfg.query_points);
  const auto evals = boost_limit(cal.learner, d.y, ts, q);

  CsvWriter csv(dir / "fit.csv", {"x", "t", "Fhat", "f_true"});
  SvgPlot svg("Limit fits F_t");
  svg.points("data", d.x, d.y);
  Vector ftrue(q.size());
  std::transform(q.begin(), q.end(), ftrue.begin(), triangle_wave);
  for (const auto& e : evals) {
    for (std::size_t i = 0; i < q.size(); ++i) csv.row(q[i], e.t, e.values[i], ftrue[i]);
    svg.line("t=" + detail::short_number(e.t), q, e.values);
  }
  svg.line("f", q, ftrue);
  CsvWriter data(dir / "data.csv", {"x", "y", "f_true"});
  for (std::size_t i = 0; i < d.size(); ++i) data.row(d.x[i], d.y[i], triangle_wave(d.x[i]));
  svg.write(dir / "fit.svg");
  return {dir / "fit.csv", dir / "data.csv", dir / "fit.svg"};
}

/// Expected train / test errors for each learning rate and the limit
/// (default grid: 200 points, t from e^0 to e^4).
inline std::vector<std::filesystem::path> cmd_errors(const ExperimentConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset d = gen_dataset(cfg);
  const auto cal = study_learner(d, cfg);
  const Vector ts = detail::grid_or(cfg, "logspace:0:4:200");
  const Vector f = d.f_values();
  if (cfg.mc_replicates < 1) throw InputError("--mc-replicates must be at least 1");
  Vector draws(cfg.mc_replicates);
  CounterRng rng(cfg.seed, 1, 0);
  for (double& x : draws) x = rng.uniform(-1.0, 1.0);

  std::vector<std::pair<std::string, Rate>> series;
  for (double l : cfg.lambdas) series.emplace_back(detail::lambda_label(l), Rate::discrete(l));
  series.emplace_back("limit", Rate::limit());

  CsvWriter csv(dir / "errors.csv", {"series", "t", "kind", "bias2", "var", "total"});
  SvgPlot svg("Expected train / test error", /*log_x=*/true);
  for (const auto& [label, rate] : series) {
    const ErrorCurves curves[] = {expected_train_error(cal.learner, f, d.sigma, ts, Init::Mean, rate),
                                  expected_test_error_fixed(cal.learner, f, d.sigma, ts, Init::Mean, rate),
                                  expected_test_error_extrapolate(cal.learner, d.f_true, d.sigma, ts, draws, rate)};
    for (const auto& c : curves) {
      for (std::size_t k = 0; k < ts.size(); ++k)
        csv.row(label, ts[k], to_string(c.kind), c.bias2[k], c.var[k], c.total[k]);
      if (c.kind != ErrorKind::TestExtrapolate) svg.line(label + " " + to_string(c.kind), ts, c.total);
    }
  }
  svg.write(dir / "errors.svg");
  return {dir / "errors.csv", dir / "errors.svg"};
}

/// Leading eigenvalues (up to 60) and the first / last four eigenvectors.
inline std::vector<std::filesystem::path> cmd_eigen(const ExperimentConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset d = gen_dataset(cfg);
  const auto cal = study_learner(d, cfg);
  const auto diag = spectral_diagnostics(cal.learner, Vector{});
  const std::size_t top = std::min<std::size_t>(60, diag.eigenvalues.size());

  CsvWriter ev(dir / "eigenvalues.csv", {"index", "mu", "log10_mu"});
  Vector idx, logmu;
  for (std::size_t i = 0; i < top; ++i) {
    const double mu = diag.eigenvalues[i];
    const double lm = mu > 0.0 ? std::log10(mu) : -INFINITY;
    ev.row(i + 1, mu, mu > 0.0 ? format_number(lm) : std::string("nan"));
    idx.push_back(static_cast<double>(i + 1));
    logmu.push_back(mu);
  }
  SvgPlot spec_plot("Leading eigenvalues of S", false, /*log_y=*/true);
  spec_plot.line("mu_i", idx, logmu);
  spec_plot.write(dir / "eigenvalues.svg");

  const std::size_t n = d.size();
  const std::size_t k = diag.leading_vectors.size();
  std::vector<std::string> names{"x"};
  for (std::size_t i = 0; i < k; ++i) names.push_back("u" + std::to_string(i + 1));
  for (std::size_t i = 0; i < k; ++i) names.push_back("u" + std::to_string(n - k + i + 1));
  {
    std::ofstream out(dir / "eigenvectors.csv");
    if (!out) throw IoError("cannot write " + (dir / "eigenvectors.csv").string());
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    for (std::size_t r = 0; r < n; ++r) {
      out << format_number(d.x[r]);
      for (const auto& u : diag.leading_vectors) out << ',' << format_number(u[r]);
      for (const auto& u : diag.trailing_vectors) out << ',' << format_number(u[r]);
      out << '\n';
    }
    if (!out) throw IoError("write failed: eigenvectors.csv");
  }
  SvgPlot first("First eigenvectors"), last("Last eigenvectors");
  for (std::size_t i = 0; i < k; ++i) {
    first.line(names[1 + i], d.x, diag.leading_vectors[i]);
    last.line(names[1 + k + i], d.x, diag.trailing_vectors[i]);
  }
  first.write(dir / "eigenvectors_first.svg");
  last.write(dir / "eigenvectors_last.svg");
  return {dir / "eigenvalues.csv", dir / "eigenvectors.csv", dir / "eigenvalues.svg", dir / "eigenvectors_first.svg",
          dir / "eigenvectors_last.svg"};
}

/// Smoothed-projection coefficients and df(t) (default t = 1, 10, 100, 1000).
inline std::vector<std::filesystem::path> cmd_project(const ExperimentConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset d = gen_dataset(cfg);
  const auto cal = study_learner(d, cfg);
  const Vector ts = detail::grid_or(cfg, "list:1,10,100,1000");
  const auto diag = spectral_diagnostics(cal.learner, ts);

  CsvWriter proj(dir / "projection.csv", {"t", "index", "mu", "coefficient"});
  CsvWriter dfs(dir / "df.csv", {"t", "df"});
  SvgPlot svg("Smoothed projection coefficients");
  Vector idx(diag.eigenvalues.size());
  std::iota(idx.begin(), idx.end(), 1.0);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    for (std::size_t i = 0; i < diag.eigenvalues.size(); ++i)
      proj.row(ts[k], i + 1, diag.eigenvalues[i], diag.coefficients[k][i]);
    dfs.row(ts[k], diag.df[k]);
    svg.line("t=" + detail::short_number(ts[k]), idx, diag.coefficients[k]);
  }
  svg.write(dir / "projection.svg");
  return {dir / "projection.csv", dir / "df.csv", dir / "projection.svg"};
}

/// Subsampled boosting at the design points: empirical mean against the
/// mean-field formula, and the variance bound audit.
inline std::vector<std::filesystem::path> cmd_stochastic(const ExperimentConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset d = gen_dataset(cfg);
  const auto cal = study_learner(d, cfg);
  if (!(cfg.stochastic_lambda > 0.0 && cfg.stochastic_lambda < 1.0))
    throw InputError("--stochastic-lambda must lie in (0, 1)");
  if (!(cfg.stochastic_t >= 0.0)) throw InputError("--stochastic-t must be >= 0");
  if (cfg.mc_replicates < 2) throw InputError("--mc-replicates must be at least 2 for the stochastic command");
  const LearnerSpec spec = LearnerSpec::spline(cal.penalty);
  const SubsamplePlan plan(d.size(), cfg.subsample_rate, cfg.seed);
  const std::size_t m = floor_ratio(cfg.stochastic_t, cfg.stochastic_lambda);

  const bool exact = binomial(d.size(), plan.subset_size()) <= 1e6;
  const SubsamplePlan field_plan(d.size(), cfg.subsample_rate, mix64(cfg.seed ^ 0x5eedf1e1dULL));
  const MeanField mf = mean_field(spec, d.x, field_plan,
                                  exact ? MeanFieldMode::enumeration() : MeanFieldMode::monte_carlo(cfg.mc_replicates),
                                  d.x);
  const std::size_t cps[] = {m};
  const StochasticRun run = stochastic_boost(spec, d.x, d.y, plan, cfg.stochastic_lambda, m, cfg.mc_replicates, d.x,
                                             cps, cfg.threads);
  const Vector analytic = stochastic_mean_formula(mf, d.y, cfg.stochastic_lambda, m);
  const Vector emp_var(run.variance.row(0).begin(), run.variance.row(0).end());
  const auto rep = variance_bound(mf, d.y, cfg.stochastic_lambda, m, emp_var);

  CsvWriter means(dir / "stochastic_mean.csv", {"x", "m", "empirical_mean", "standard_error", "analytic_mean", "z"});
  CsvWriter bound(dir / "variance_bound.csv", {"x", "empirical_var", "bound", "M1", "M2", "K", "within"});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double se = run.standard_error(0, i);
    means.row(d.x[i], m, run.mean(0, i), se, analytic[i], se > 0.0 ? (run.mean(0, i) - analytic[i]) / se : 0.0);
    bound.row(d.x[i], rep.empirical[i], rep.bound[i], rep.constants[i].m1, rep.constants[i].m2, rep.constants[i].k,
              rep.empirical[i] <= rep.bound[i]);
  }
  return {dir / "stochastic_mean.csv", dir / "variance_bound.csv"};
}

}  // namespace boostlab
