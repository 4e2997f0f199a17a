#include "distopt/solver.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace distopt {

Trajectory integrate(const NetworkSystem& system, const Eigen::VectorXd& initial_state,
                     const IntegrateOptions& options, const std::string& descriptor,
                     std::uint64_t seed) {
  if (!(options.step > 0.0)) throw std::invalid_argument("integrate: step must be positive");
  if (!(options.t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
  if (options.record_every < 1)
    throw std::invalid_argument("integrate: record_every must be >= 1");
  system.validate_initial_state(initial_state);

  const double h = options.step;
  if (options.warn_stiff) {
    const double scale = system.stiffness_estimate();
    if (scale > 0.0 && h > 2.7 / scale)
      std::cerr << "integrate: step " << h << " exceeds the RK4 stability bound "
                << 2.7 / scale << " estimated for this system\n";
  }

  const auto steps = static_cast<long>(std::llround(options.t_end / h));
  Trajectory traj;
  traj.metadata = {descriptor, h, seed};
  traj.times.reserve(static_cast<std::size_t>(steps / options.record_every) + 2);
  traj.states.reserve(traj.times.capacity());
  traj.times.push_back(0.0);
  traj.states.push_back(initial_state);

  Eigen::VectorXd state = initial_state;
  for (long k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = system.vector_field(state);
    const Eigen::VectorXd k2 = system.vector_field(state + (0.5 * h) * k1);
    const Eigen::VectorXd k3 = system.vector_field(state + (0.5 * h) * k2);
    const Eigen::VectorXd k4 = system.vector_field(state + h * k3);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t = static_cast<double>(k + 1) * h;
    if (!state.allFinite()) {
      std::ostringstream msg;
      msg << "integrate: state turned non-finite at t = " << t
          << " (unstable gains or step too large)";
      throw DivergenceError(t, msg.str());
    }
    if ((k + 1) % options.record_every == 0 || k + 1 == steps) {
      traj.times.push_back(t);
      traj.states.push_back(state);
    }
  }
  return traj;
}

std::vector<double> error_metric(const Trajectory& traj, const Eigen::VectorXd& w_star,
                                 const NetworkSystem& system) {
  std::vector<double> errors;
  errors.reserve(traj.states.size());
  for (const auto& state : traj.states) {
    const Eigen::MatrixXd w = system.extract_w(state);
    double acc = 0.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) acc += (w.col(c) - w_star).norm();
    errors.push_back(acc / static_cast<double>(w.cols()));
  }
  return errors;
}

RateEstimate estimate_rate(const std::vector<double>& times, const std::vector<double>& values,
                           double window_start, double window_end, double r_squared_floor) {
  if (times.size() != values.size())
    throw std::invalid_argument("estimate_rate: times/values size mismatch");

  double sum_t = 0.0, sum_y = 0.0;
  long count = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < window_start || times[k] > window_end) continue;
    if (!(values[k] > 0.0))
      throw std::invalid_argument("estimate_rate: non-positive value inside the fit window");
    sum_t += times[k];
    sum_y += std::log(values[k]);
    ++count;
  }
  if (count < 2) throw std::invalid_argument("estimate_rate: fewer than two samples in window");

  const double mean_t = sum_t / count;
  const double mean_y = sum_y / count;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < window_start || times[k] > window_end) continue;
    const double dt = times[k] - mean_t;
    const double dy = std::log(values[k]) - mean_y;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  const double slope = sty / stt;

  RateEstimate est;
  est.rate = -slope;
  est.intercept = mean_y - slope * mean_t;
  est.window_start = window_start;
  est.window_end = window_end;
  est.r_squared = syy > 0.0 ? (sty * sty) / (stt * syy) : 1.0;
  est.trusted = est.r_squared >= r_squared_floor;
  return est;
}

std::pair<double, double> default_rate_window(const std::vector<double>& times,
                                              const std::vector<double>& values,
                                              double floor_value) {
  std::size_t last_above = 0;
  bool any = false;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] > floor_value) {
      last_above = k;
      any = true;
    }
  }
  if (!any || last_above == 0)
    throw std::invalid_argument("default_rate_window: series never rises above the floor");
  const std::size_t first = last_above - last_above / 2;  // last 50% of usable samples
  return {times[first], times[last_above]};
}

}  // namespace distopt
