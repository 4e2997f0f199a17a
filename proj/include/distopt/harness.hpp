#pragma once

#include <optional>
#include <string>
#include <vector>

#include "distopt/gains.hpp"
#include "distopt/network.hpp"
#include "distopt/solver.hpp"

namespace distopt {

// Flat key-value experiment description (dotted section keys, '#' comments,
// one "key = value" per line). Unknown keys are rejected. The exact grammar
// is documented in the README.
struct ExperimentConfig {
  // graph: either (n, edge_prob) for a seeded sample or an edge-list file
  int graph_n = 0;
  double graph_p = 0.0;
  std::string graph_file;

  // problem: either generator parameters or a matrix-list file
  int problem_dim = 0;
  double problem_max_eig = 1.0;
  double problem_condition = 10.0;
  std::string problem_file;

  std::vector<Algorithm> algorithms;
  CouplingMode mode = CouplingMode::A;

  enum class GainSource { Explicit, Beta, Bounds };
  GainSource gain_source = GainSource::Explicit;
  double k_p = 0.0;
  double k_i = 0.0;
  double kappa = 0.0;  // 0 means "use k_i"
  double beta = 0.0;
  double bounds_c1 = 1.0;
  double bounds_c3 = 1.0;
  double bounds_upsilon_frac = 0.5;
  double bounds_safety = 1.5;

  double step = 1e-3;
  double t_end = 50.0;
  int record_every = 10;
  bool auto_step = false;  // clamp the step to the stability bound
  double init_scale = 1.0;

  std::uint64_t seed = 1;
  std::string out_dir;

  std::vector<std::string> churn_events;  // raw "<time> leave <agent>" / "<time> join <i,j,...>"
  std::string sweep_parameter;
  std::vector<double> sweep_values;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);

  // Sets one numeric field by its config key (used by sweep).
  void set_numeric(const std::string& key, double value);
  void validate() const;
};

struct AlgorithmResult {
  Algorithm algorithm = Algorithm::DistGD;
  CouplingConfig coupling;
  Trajectory trajectory;
  std::vector<double> errors;
  std::optional<RateEstimate> rate;
  std::string rate_failure;  // why the fit was skipped, if it was
  double final_error = 0.0;
};

struct RunResult {
  Eigen::VectorXd w_star;
  double w_star_residual = 0.0;
  std::vector<AlgorithmResult> algorithms;
  std::vector<std::string> warnings;
  std::string summary;        // contents of summary.txt
  std::string bounds_report;  // contents of bounds.txt
};

// Executes every configured algorithm, writes per-algorithm trajectory and
// error CSVs plus summary.txt and bounds.txt under config.out_dir (when
// set), and returns the in-memory results. Deterministic per seeds.
RunResult run(const ExperimentConfig& config);

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;  // failure diagnostic when !ok
  double rate = 0.0;
  double r_squared = 0.0;
  bool trusted = false;
  double final_error = 0.0;
};

// One run() per value of the named numeric parameter (first configured
// algorithm only); failures are recorded and the sweep continues. Writes
// sweep.csv when out_dir is set.
std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& parameter,
                            const std::vector<double>& values);

struct TimedChurnEvent {
  double time = 0.0;
  ChurnEvent event;
};

TimedChurnEvent parse_churn_event(const std::string& line, const ExperimentConfig& config);

struct ChurnSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  int n_agents = 0;
  Eigen::VectorXd w_star;  // minimizer of the ensemble active in the segment
};

struct ChurnResult {
  Algorithm algorithm = Algorithm::DistGD;
  std::vector<ChurnSegment> segments;
  std::vector<double> times;   // concatenated over segments
  std::vector<double> errors;  // against the w* of the active segment
  double final_error = 0.0;    // against the final w*
  Eigen::VectorXd final_w_star;
  std::vector<std::string> warnings;
};

// Piecewise integration with join/leave re-assembly at the event times;
// surviving agents keep their state. Mode B is allowed but flagged, since
// inherited integrator sums bias the equilibrium. Writes churn_error.csv
// and churn_summary.txt when out_dir is set.
ChurnResult churn_scenario(const ExperimentConfig& config,
                           const std::vector<TimedChurnEvent>& events);

// Builds the (graph, ensemble) pair a config describes, from files or from
// the seeded generators.
std::pair<Graph, CostEnsemble> build_inputs(const ExperimentConfig& config);

// Gain-bound table (thetas, varthetas, phi*, k_P*, k_P**) for every
// distributed algorithm in the config.
std::string gain_bound_report(const ExperimentConfig& config, const Graph& graph,
                              const CostEnsemble& ensemble);

// Writes graph.txt / ensemble.txt generated from the config parameters.
void generate_inputs(const ExperimentConfig& config);

// Shortest decimal that round-trips the double (17 significant digits).
std::string format_g17(double v);

}  // namespace distopt
