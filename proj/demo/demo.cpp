// Boosts a calibrated smoothing spline on the simulated triangle-wave data and
// prints the limit fit error against the truth for a few stopping times.

#include <cstdio>

#include "boostlab/boostlab.hpp"

int main() {
  using namespace boostlab;
  const ExperimentConfig cfg;
  const Dataset d = gen_dataset(cfg);
  const auto cal = calibrate_df(d, cfg.df);
  std::printf("n = %zu, penalty = %.6g, trace S = %.6f\n", d.size(), cal.penalty, cal.learner.degrees_of_freedom());
  const Vector ts{0.0, 1.0, 6.0, 10.0, 100.0, 1000.0};
  const Vector f = d.f_values();
  for (const auto& e : boost_limit(cal.learner, d.y, ts, d.x))
    std::printf("t = %7.1f  mean squared distance to f = %.5f\n", e.t, empirical_error(f, e.values));
}
