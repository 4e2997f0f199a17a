#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "distopt/network.hpp"

namespace distopt {

// Raised when an integrated state turns non-finite; carries the first bad
// time (too large a step or unstable gains).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double time, const std::string& what)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct TrajectoryMetadata {
  std::string descriptor;
  double step = 0.0;
  std::uint64_t seed = 0;
};

// Uniformly sampled state record; times[k] = k * record_every * h except for
// a possibly closer final sample.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  TrajectoryMetadata metadata;

  const Eigen::VectorXd& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

struct IntegrateOptions {
  double step = 1e-3;
  double t_end = 50.0;
  int record_every = 10;
  bool warn_stiff = true;  // stderr note when step exceeds the stability bound
};

// Classical fixed-step RK4 on the stacked field. Validates the initial
// state (including the mode-B integrator-sum constraint) and throws
// DivergenceError on the first non-finite state.
Trajectory integrate(const NetworkSystem& system, const Eigen::VectorXd& initial_state,
                     const IntegrateOptions& options, const std::string& descriptor = "",
                     std::uint64_t seed = 0);

// e(t) = (1/N) sum_i |w_i(t) - w*| (plain |w - w*| for a single column).
std::vector<double> error_metric(const Trajectory& traj, const Eigen::VectorXd& w_star,
                                 const NetworkSystem& system);

struct RateEstimate {
  double rate = 0.0;       // decay rate in 1/s (negated slope of ln e)
  double intercept = 0.0;  // ln e extrapolated to t = 0
  double window_start = 0.0;
  double window_end = 0.0;
  double r_squared = 0.0;
  bool trusted = false;  // r_squared >= quality floor
};

// Least-squares fit of ln e(t) over [window_start, window_end]. Throws if
// the window holds fewer than two samples or any non-positive value.
RateEstimate estimate_rate(const std::vector<double>& times, const std::vector<double>& values,
                           double window_start, double window_end,
                           double r_squared_floor = 0.99);

// Default fit window: the last half of the samples still above 1e-10
// (skips the transient, stops before the numerical floor).
std::pair<double, double> default_rate_window(const std::vector<double>& times,
                                              const std::vector<double>& values,
                                              double floor_value = 1e-10);

}  // namespace distopt
