#include "distopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "distopt/rng.hpp"

namespace distopt {

namespace fs = std::filesystem;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  }
  if (pos != value.size())
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  return v;
}

long parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) throw std::invalid_argument("config: " + key + " must be an integer");
  return static_cast<long>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config: " + key + " must be a boolean");
}

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  bool beta_seen = false, explicit_seen = false, bounds_seen = false;
  std::map<int, std::string> churn_lines;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value on line " + std::to_string(line_no));

    if (key == "graph.n") {
      cfg.graph_n = static_cast<int>(parse_int(key, value));
    } else if (key == "graph.p") {
      cfg.graph_p = parse_double(key, value);
    } else if (key == "graph.file") {
      cfg.graph_file = value;
    } else if (key == "problem.dim") {
      cfg.problem_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "problem.max_eig") {
      cfg.problem_max_eig = parse_double(key, value);
    } else if (key == "problem.condition") {
      cfg.problem_condition = parse_double(key, value);
    } else if (key == "problem.file") {
      cfg.problem_file = value;
    } else if (key == "run.algorithms") {
      for (const auto& name : split(value, ','))
        cfg.algorithms.push_back(algorithm_from_name(name));
    } else if (key == "coupling.mode") {
      if (value == "A" || value == "a")
        cfg.mode = CouplingMode::A;
      else if (value == "B" || value == "b")
        cfg.mode = CouplingMode::B;
      else
        throw std::invalid_argument("config: coupling.mode must be A or B");
    } else if (key == "gains.k_p") {
      cfg.k_p = parse_double(key, value);
      explicit_seen = true;
    } else if (key == "gains.k_i") {
      cfg.k_i = parse_double(key, value);
      explicit_seen = true;
    } else if (key == "gains.kappa") {
      cfg.kappa = parse_double(key, value);
      explicit_seen = true;
    } else if (key == "gains.beta") {
      cfg.beta = parse_double(key, value);
      beta_seen = true;
    } else if (key == "gains.from_bounds") {
      bounds_seen = parse_bool(key, value);
    } else if (key == "bounds.c1") {
      cfg.bounds_c1 = parse_double(key, value);
    } else if (key == "bounds.c3") {
      cfg.bounds_c3 = parse_double(key, value);
    } else if (key == "bounds.upsilon_frac") {
      cfg.bounds_upsilon_frac = parse_double(key, value);
    } else if (key == "bounds.safety") {
      cfg.bounds_safety = parse_double(key, value);
    } else if (key == "solver.h") {
      cfg.step = parse_double(key, value);
    } else if (key == "solver.t_end") {
      cfg.t_end = parse_double(key, value);
    } else if (key == "solver.record_every") {
      cfg.record_every = static_cast<int>(parse_int(key, value));
    } else if (key == "solver.auto_h") {
      cfg.auto_step = parse_bool(key, value);
    } else if (key == "init.scale") {
      cfg.init_scale = parse_double(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "output.dir") {
      cfg.out_dir = value;
    } else if (key == "sweep.parameter") {
      cfg.sweep_parameter = value;
    } else if (key == "sweep.values") {
      for (const auto& tok : split(value, ',')) cfg.sweep_values.push_back(parse_double(key, tok));
    } else if (key.rfind("churn.event.", 0) == 0) {
      const int idx = static_cast<int>(parse_int(key, key.substr(12)));
      churn_lines[idx] = value;
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  for (const auto& [idx, line] : churn_lines) cfg.churn_events.push_back(line);

  const int sources = (beta_seen ? 1 : 0) + (bounds_seen ? 1 : 0);
  if (sources > 1 || (sources == 1 && explicit_seen))
    throw std::invalid_argument("config: choose one of explicit gains, gains.beta, gains.from_bounds");
  if (beta_seen)
    cfg.gain_source = GainSource::Beta;
  else if (bounds_seen)
    cfg.gain_source = GainSource::Bounds;
  else
    cfg.gain_source = GainSource::Explicit;
  return cfg;
}

void ExperimentConfig::set_numeric(const std::string& key, double value) {
  if (key == "gains.k_p")
    k_p = value;
  else if (key == "gains.k_i")
    k_i = value;
  else if (key == "gains.kappa")
    kappa = value;
  else if (key == "gains.beta")
    beta = value;
  else if (key == "solver.h")
    step = value;
  else if (key == "solver.t_end")
    t_end = value;
  else if (key == "init.scale")
    init_scale = value;
  else if (key == "problem.condition")
    problem_condition = value;
  else if (key == "problem.max_eig")
    problem_max_eig = value;
  else if (key == "graph.p")
    graph_p = value;
  else if (key == "seed")
    seed = static_cast<std::uint64_t>(value);
  else
    throw std::invalid_argument("sweep: '" + key + "' is not a sweepable numeric field");
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw std::invalid_argument("config: run.algorithms is empty");
  for (Algorithm a : algorithms)
    if (a == Algorithm::Custom)
      throw std::invalid_argument("config: custom systems are not runnable from a config");

  if (graph_file.empty()) {
    if (graph_n < 2) throw std::invalid_argument("config: graph.n must be >= 2");
    if (!(graph_p > 0.0 && graph_p <= 1.0))
      throw std::invalid_argument("config: graph.p must be in (0, 1]");
  } else if (!fs::exists(graph_file)) {
    throw std::invalid_argument("config: graph.file does not exist: " + graph_file);
  }

  if (problem_file.empty()) {
    if (problem_dim < 1) throw std::invalid_argument("config: problem.dim must be >= 1");
    if (!(problem_max_eig > 0.0))
      throw std::invalid_argument("config: problem.max_eig must be positive");
    if (!(problem_condition >= 1.0))
      throw std::invalid_argument("config: problem.condition must be >= 1");
  } else if (!fs::exists(problem_file)) {
    throw std::invalid_argument("config: problem.file does not exist: " + problem_file);
  }

  switch (gain_source) {
    case GainSource::Explicit:
      if (!(k_p > 0.0) || !(k_i > 0.0))
        throw std::invalid_argument("config: gains.k_p and gains.k_i must be positive");
      if (kappa < 0.0) throw std::invalid_argument("config: gains.kappa must be non-negative");
      break;
    case GainSource::Beta:
      if (!(beta > 0.0)) throw std::invalid_argument("config: gains.beta must be positive");
      break;
    case GainSource::Bounds:
      if (!(bounds_safety > 1.0))
        throw std::invalid_argument("config: bounds.safety must exceed 1");
      if (!(bounds_upsilon_frac > 0.0 && bounds_upsilon_frac < 1.0))
        throw std::invalid_argument("config: bounds.upsilon_frac must be in (0, 1)");
      if (!(bounds_c1 > 0.0 && bounds_c3 > 0.0))
        throw std::invalid_argument("config: bounds.c1 and bounds.c3 must be positive");
      break;
  }

  if (!(step > 0.0)) throw std::invalid_argument("config: solver.h must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("config: solver.t_end must be positive");
  if (record_every < 1) throw std::invalid_argument("config: solver.record_every must be >= 1");
  if (init_scale < 0.0) throw std::invalid_argument("config: init.scale must be non-negative");
}

namespace {

Graph build_graph(const ExperimentConfig& cfg) {
  if (!cfg.graph_file.empty()) return Graph::load(cfg.graph_file);
  return Graph::erdos_renyi(cfg.graph_n, cfg.graph_p, cfg.seed);
}

CostEnsemble build_ensemble(const ExperimentConfig& cfg, int n_agents) {
  if (!cfg.problem_file.empty()) {
    CostEnsemble e = CostEnsemble::load(cfg.problem_file);
    if (e.size() != n_agents)
      throw std::invalid_argument("config: ensemble file has " + std::to_string(e.size()) +
                                  " agents but the graph has " + std::to_string(n_agents));
    return e;
  }
  return random_quadratic_ensemble(n_agents, cfg.problem_dim, cfg.problem_max_eig,
                                   cfg.problem_condition, cfg.seed + 1);
}

LyapunovParams lyapunov_for(const ExperimentConfig& cfg, Algorithm a, double alpha) {
  LyapunovParams lp = LyapunovParams::heuristic_for(a, alpha, cfg.bounds_upsilon_frac);
  lp.c1 = cfg.bounds_c1;
  lp.c3 = cfg.bounds_c3;
  lp.validate();
  return lp;
}

CouplingConfig resolve_coupling(const ExperimentConfig& cfg, Algorithm algorithm,
                                const Graph& graph, const CostEnsemble& ensemble) {
  if (!is_distributed(algorithm)) return CouplingConfig::full(cfg.mode, 0.0, 0.0, 0.0);
  switch (cfg.gain_source) {
    case ExperimentConfig::GainSource::Explicit:
      return cfg.kappa > 0.0 ? CouplingConfig::full(cfg.mode, cfg.k_p, cfg.k_i, cfg.kappa)
                             : CouplingConfig::pi(cfg.mode, cfg.k_p, cfg.k_i);
    case ExperimentConfig::GainSource::Beta:
      return beta_rule(cfg.beta).to_coupling(cfg.mode);
    case ExperimentConfig::GainSource::Bounds: {
      // Derive kappa = k_I = phi* k_P from the sufficient-gain formula at
      // phi* = half its admissible bound.
      const NetworkSystem probe =
          assemble(algorithm, graph, ensemble, CouplingConfig::pi(cfg.mode, 1.0, 1.0));
      const SpectralData sd = SpectralData::from_system(probe);
      const LyapunovParams lp = lyapunov_for(cfg, algorithm, ensemble.alpha());
      const double phi = 0.5 * phi_star_bound(sd);
      const double kp = cfg.bounds_safety * kp_double_star(phi, sd, lp);
      return CouplingConfig::full(cfg.mode, kp, phi * kp, phi * kp);
    }
  }
  throw std::logic_error("resolve_coupling: unreachable");
}

Eigen::VectorXd initial_state(const NetworkSystem& system, const ExperimentConfig& cfg) {
  Rng rng(cfg.seed + 2);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(system.state_dim());
  const Eigen::Index x_len =
      static_cast<Eigen::Index>(system.n_agents()) * system.agent_state_dim();
  for (Eigen::Index k = 0; k < x_len; ++k) state[k] = cfg.init_scale * rng.normal();
  return state;  // xi(0) = 0 satisfies both coupling modes
}

double effective_step(const ExperimentConfig& cfg, const NetworkSystem& system) {
  if (!cfg.auto_step) return cfg.step;
  const double scale = system.stiffness_estimate();
  return scale > 0.0 ? std::min(cfg.step, 2.0 / scale) : cfg.step;
}

void write_trajectory_csv(const std::string& path, const NetworkSystem& system,
                          const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("harness: cannot write " + path);
  out << "t";
  const int n_agents = system.n_agents();
  const int d = system.agent_state_dim();
  for (int i = 0; i < n_agents; ++i)
    for (int k = 0; k < d; ++k) out << ",x" << i + 1 << "_" << k + 1;
  if (is_distributed(system.algorithm())) {
    const int q = system.output_dim();
    for (int i = 0; i < n_agents; ++i)
      for (int k = 0; k < q; ++k) out << ",xi" << i + 1 << "_" << k + 1;
  }
  out << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    out << format_g17(traj.times[s]);
    for (Eigen::Index k = 0; k < traj.states[s].size(); ++k)
      out << "," << format_g17(traj.states[s][k]);
    out << "\n";
  }
}

void write_error_csv(const std::string& path, const std::vector<double>& times,
                     const std::vector<double>& errors) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("harness: cannot write " + path);
  out << "t,error\n";
  for (std::size_t s = 0; s < times.size(); ++s)
    out << format_g17(times[s]) << "," << format_g17(errors[s]) << "\n";
}

void append_rate_lines(std::ostringstream& out, const AlgorithmResult& res) {
  if (res.rate) {
    out << "  rate = " << format_g17(res.rate->rate) << " (r_squared = "
        << format_g9(res.rate->r_squared) << ", window = [" << format_g9(res.rate->window_start)
        << ", " << format_g9(res.rate->window_end) << "], trusted = "
        << (res.rate->trusted ? "yes" : "no") << ")\n";
  } else {
    out << "  rate = unavailable (" << res.rate_failure << ")\n";
  }
}

}  // namespace

std::pair<Graph, CostEnsemble> build_inputs(const ExperimentConfig& config) {
  config.validate();
  Graph graph = build_graph(config);
  CostEnsemble ensemble = build_ensemble(config, graph.n_nodes());
  return {std::move(graph), std::move(ensemble)};
}

std::string gain_bound_report(const ExperimentConfig& config, const Graph& graph,
                              const CostEnsemble& ensemble) {
  std::ostringstream out;
  out << "gain bound report\n";
  for (Algorithm a : config.algorithms) {
    if (!is_distributed(a)) continue;
    if (graph.n_nodes() < 2) {
      out << "algorithm " << algorithm_name(a) << ": bounds not applicable (single agent)\n";
      continue;
    }
    const CouplingConfig coupling = resolve_coupling(config, a, graph, ensemble);
    const NetworkSystem system = assemble(a, graph, ensemble, coupling);
    const SpectralData sd = SpectralData::from_system(system);
    const LyapunovParams lp = lyapunov_for(config, a, ensemble.alpha());
    const ThetaConstants t = theta_constants(sd, lp);
    const double phi_bound = phi_star_bound(sd);
    const double phi_used = 0.5 * phi_bound;
    const VarthetaConstants v = vartheta_constants(phi_used, sd, lp);

    out << "algorithm " << algorithm_name(a) << " (mode "
        << (config.mode == CouplingMode::A ? "A" : "B") << ")\n";
    out << "  sigma(E) = [" << format_g9(sd.sig_m_E) << ", " << format_g9(sd.sig_M_E)
        << "]  sigma(Lambda_P) = [" << format_g9(sd.sig_m_LP) << ", " << format_g9(sd.sig_M_LP)
        << "]  sigma(Lambda_I) = [" << format_g9(sd.sig_m_LI) << ", " << format_g9(sd.sig_M_LI)
        << "]\n";
    out << "  L = " << format_g9(sd.lipschitz) << "  N = " << sd.n_agents << "\n";
    out << "  lyapunov: c1 = " << format_g9(lp.c1) << "  c3 = " << format_g9(lp.c3)
        << "  mu = " << format_g9(lp.mu) << "  upsilon = " << format_g9(lp.upsilon) << "\n";
    out << "  theta0 = " << format_g9(t.theta0) << "  theta1 = " << format_g9(t.theta1)
        << "  theta2 = " << format_g9(t.theta2) << "\n";
    out << "  theta3 = " << format_g9(t.theta3) << "  theta4 = " << format_g9(t.theta4)
        << "  theta5 = " << format_g9(t.theta5) << "\n";
    out << "  phi_star_bound = " << format_g9(phi_bound) << "  (report uses phi* = "
        << format_g9(phi_used) << ")\n";
    out << "  vartheta1 = " << format_g9(v.vartheta1) << "  vartheta2 = " << format_g9(v.vartheta2)
        << "  vartheta3 = " << format_g9(v.vartheta3) << "  eta = " << format_g9(v.eta) << "\n";
    out << "  kp_double_star(phi*) = " << format_g9(kp_double_star(phi_used, sd, lp)) << "\n";
    if (coupling.theorem_a_regime()) {
      const double kps = kp_star(coupling.kappa, coupling.k_i, sd, lp);
      out << "  kp_star(kappa = " << format_g9(coupling.kappa) << ", k_i = "
          << format_g9(coupling.k_i) << ") = " << format_g9(kps) << "\n";
      out << "  configured k_p = " << format_g9(coupling.k_p) << " ("
          << (coupling.k_p > kps ? "above" : "below") << " kp_star)\n";
    } else {
      out << "  kp_star not applicable (needs 2*kappa > k_i)\n";
    }
  }
  return out.str();
}

RunResult run(const ExperimentConfig& config) {
  config.validate();
  const Graph graph = build_graph(config);
  const CostEnsemble ensemble = build_ensemble(config, graph.n_nodes());

  RunResult result;
  result.w_star = minimizer(ensemble);
  result.w_star_residual = ensemble.gradient(result.w_star).norm();

  for (Algorithm a : config.algorithms) {
    AlgorithmResult res;
    res.algorithm = a;
    res.coupling = resolve_coupling(config, a, graph, ensemble);
    const NetworkSystem system = assemble(a, graph, ensemble, res.coupling);

    IntegrateOptions opts;
    opts.step = effective_step(config, system);
    opts.t_end = config.t_end;
    opts.record_every = config.record_every;
    try {
      res.trajectory = integrate(system, initial_state(system, config), opts, algorithm_name(a),
                                 config.seed);
    } catch (const DivergenceError& err) {
      std::ostringstream msg;
      msg << "run: " << algorithm_name(a) << " diverged (k_p = " << res.coupling.k_p
          << ", k_i = " << res.coupling.k_i << ", kappa = " << res.coupling.kappa
          << "): " << err.what();
      throw std::runtime_error(msg.str());
    }
    res.errors = error_metric(res.trajectory, result.w_star, system);
    res.final_error = res.errors.back();
    try {
      const auto [w0, w1] = default_rate_window(res.trajectory.times, res.errors);
      res.rate = estimate_rate(res.trajectory.times, res.errors, w0, w1);
      if (!res.rate->trusted)
        result.warnings.push_back("rate for " + algorithm_name(a) +
                                  " has r_squared below 0.99; marked untrusted");
    } catch (const std::exception& err) {
      res.rate_failure = err.what();
      result.warnings.push_back("rate for " + algorithm_name(a) + " unavailable: " + err.what());
    }
    result.algorithms.push_back(std::move(res));
  }

  bool any_distributed = false;
  for (Algorithm a : config.algorithms) any_distributed |= is_distributed(a);
  if (any_distributed) result.bounds_report = gain_bound_report(config, graph, ensemble);

  std::ostringstream sum;
  sum << "distopt run summary\n";
  sum << "seed = " << config.seed << "\n";
  sum << "graph: n_nodes = " << graph.n_nodes() << "  edges = " << graph.edges().size()
      << "  lambda2 = " << format_g9(graph.lambda2()) << "  lambda_max = "
      << format_g9(graph.lambda_max()) << "\n";
  sum << "ensemble: agents = " << ensemble.size() << "  dim = " << ensemble.dim()
      << "  alpha = " << format_g9(ensemble.alpha()) << "  lipschitz = "
      << format_g9(ensemble.lipschitz()) << "\n";
  sum << "w_star_residual = " << format_g17(result.w_star_residual) << "\n";
  for (const auto& res : result.algorithms) {
    sum << "algorithm " << algorithm_name(res.algorithm) << ":\n";
    if (is_distributed(res.algorithm)) {
      sum << "  gains: k_p = " << format_g9(res.coupling.k_p) << "  k_i = "
          << format_g9(res.coupling.k_i) << "  kappa = " << format_g9(res.coupling.kappa)
          << "  mode = " << (res.coupling.mode == CouplingMode::A ? "A" : "B") << "\n";
      sum << "  message_dim = "
          << message_dimension(res.algorithm, res.coupling.mode, ensemble.dim()) << "\n";
    }
    sum << "  step = " << format_g9(res.trajectory.metadata.step) << "\n";
    sum << "  final_error = " << format_g17(res.final_error) << "\n";
    append_rate_lines(sum, res);
  }
  if (!result.warnings.empty()) {
    sum << "warnings:\n";
    for (const auto& w : result.warnings) sum << "  - " << w << "\n";
  }
  result.summary = sum.str();

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    for (const auto& res : result.algorithms) {
      const NetworkSystem system =
          assemble(res.algorithm, graph, ensemble, res.coupling);
      const std::string base = config.out_dir + "/" + algorithm_name(res.algorithm);
      write_trajectory_csv(base + "_trajectory.csv", system, res.trajectory);
      write_error_csv(base + "_error.csv", res.trajectory.times, res.errors);
    }
    std::ofstream(config.out_dir + "/summary.txt") << result.summary;
    if (!result.bounds_report.empty())
      std::ofstream(config.out_dir + "/bounds.txt") << result.bounds_report;
  }
  return result;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& parameter,
                            const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: no values given");
  std::vector<SweepRow> rows;
  for (double value : values) {
    ExperimentConfig cfg = config;
    cfg.out_dir.clear();
    cfg.set_numeric(parameter, value);
    SweepRow row;
    row.value = value;
    try {
      const RunResult result = run(cfg);
      const AlgorithmResult& res = result.algorithms.front();
      row.ok = true;
      row.final_error = res.final_error;
      if (res.rate) {
        row.rate = res.rate->rate;
        row.r_squared = res.rate->r_squared;
        row.trusted = res.rate->trusted;
      }
    } catch (const std::exception& err) {
      row.error = err.what();
    }
    rows.push_back(std::move(row));
  }

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    std::ofstream out(config.out_dir + "/sweep.csv");
    out << "value,status,rate,r_squared,trusted,final_error\n";
    for (const auto& row : rows) {
      if (row.ok)
        out << format_g17(row.value) << ",ok," << format_g17(row.rate) << ","
            << format_g17(row.r_squared) << "," << (row.trusted ? "yes" : "no") << ","
            << format_g17(row.final_error) << "\n";
      else
        out << format_g17(row.value) << ",failed,,,,\n";
    }
  }
  return rows;
}

TimedChurnEvent parse_churn_event(const std::string& line, const ExperimentConfig&) {
  std::istringstream in(line);
  double time = 0.0;
  std::string kind;
  if (!(in >> time >> kind))
    throw std::invalid_argument("churn: event must be '<time> leave <agent>' or '<time> join "
                                "<neighbors>': '" + line + "'");
  TimedChurnEvent ev;
  ev.time = time;
  if (kind == "leave") {
    int agent = 0;
    if (!(in >> agent)) throw std::invalid_argument("churn: missing agent in '" + line + "'");
    ev.event.kind = ChurnEvent::Kind::Leave;
    ev.event.agent = agent - 1;
  } else if (kind == "join") {
    std::string neighbor_list;
    if (!(in >> neighbor_list))
      throw std::invalid_argument("churn: missing neighbor list in '" + line + "'");
    ev.event.kind = ChurnEvent::Kind::Join;
    for (const auto& tok : split(neighbor_list, ','))
      ev.event.neighbors.push_back(static_cast<int>(parse_int("churn neighbor", tok)) - 1);
    // The newcomer's cost is filled in by churn_scenario once the problem
    // dimension is known.
  } else {
    throw std::invalid_argument("churn: unknown event kind '" + kind + "'");
  }
  return ev;
}

ChurnResult churn_scenario(const ExperimentConfig& config,
                           const std::vector<TimedChurnEvent>& events) {
  config.validate();
  const Algorithm algorithm = config.algorithms.front();
  if (!is_distributed(algorithm))
    throw std::invalid_argument("churn: first configured algorithm must be distributed");
  for (const auto& ev : events)
    if (!(ev.time > 0.0 && ev.time < config.t_end))
      throw std::invalid_argument("churn: event time outside (0, t_end)");
  std::vector<TimedChurnEvent> ordered = events;
  std::sort(ordered.begin(), ordered.end(),
            [](const TimedChurnEvent& a, const TimedChurnEvent& b) { return a.time < b.time; });

  const Graph graph = build_graph(config);
  const CostEnsemble ensemble = build_ensemble(config, graph.n_nodes());

  // Joiners without an explicit cost get a deterministic mildly convex
  // quadratic scaled to the problem (seeded per event).
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    auto& ev = ordered[k].event;
    if (ev.kind != ChurnEvent::Kind::Join || ev.cost.A.size() != 0) continue;
    const int dim = ensemble.dim();
    Rng rng(config.seed + 9000 + static_cast<std::uint64_t>(k));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j <= i; ++j) {
        const double v = 0.1 * config.problem_max_eig * rng.normal();
        a(i, j) = v;
        a(j, i) = v;
      }
    a += 0.5 * config.problem_max_eig * Eigen::MatrixXd::Identity(dim, dim);
    ev.cost.A = a;
    ev.cost.b = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
  }

  ChurnResult result;
  result.algorithm = algorithm;
  if (config.mode == CouplingMode::B && !ordered.empty())
    result.warnings.push_back(
        "coupling mode B with membership events: the integrator-sum constraint is not preserved "
        "and the network converges to a biased point");

  NetworkSystem system = assemble(algorithm, graph, ensemble,
                                  resolve_coupling(config, algorithm, graph, ensemble));
  Eigen::VectorXd state = initial_state(system, config);

  double t_now = 0.0;
  std::size_t next_event = 0;
  while (true) {
    const double t_stop = next_event < ordered.size() ? ordered[next_event].time : config.t_end;

    ChurnSegment segment;
    segment.t_start = t_now;
    segment.t_end = t_stop;
    segment.n_agents = system.n_agents();
    segment.w_star = minimizer(system.ensemble());

    IntegrateOptions opts;
    opts.step = effective_step(config, system);
    opts.t_end = t_stop - t_now;
    opts.record_every = config.record_every;
    const Trajectory traj =
        integrate(system, state, opts, algorithm_name(algorithm), config.seed);
    const std::vector<double> errors = error_metric(traj, segment.w_star, system);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      result.times.push_back(t_now + traj.times[k]);
      result.errors.push_back(errors[k]);
    }
    state = traj.final_state();
    result.segments.push_back(std::move(segment));

    if (next_event >= ordered.size()) break;
    const JoinLeaveResult jl = join_leave(system, ordered[next_event].event, state);
    system = jl.system;
    state = jl.state;
    t_now = t_stop;
    ++next_event;
  }

  result.final_w_star = result.segments.back().w_star;
  result.final_error = result.errors.back();

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    write_error_csv(config.out_dir + "/churn_error.csv", result.times, result.errors);
    std::ostringstream sum;
    sum << "distopt churn summary\n";
    sum << "algorithm = " << algorithm_name(algorithm) << "\n";
    for (const auto& seg : result.segments)
      sum << "segment [" << format_g9(seg.t_start) << ", " << format_g9(seg.t_end)
          << "]: agents = " << seg.n_agents << "\n";
    sum << "final_error = " << format_g17(result.final_error) << "\n";
    for (const auto& w : result.warnings) sum << "warning: " << w << "\n";
    std::ofstream(config.out_dir + "/churn_summary.txt") << sum.str();
  }
  return result;
}

void generate_inputs(const ExperimentConfig& config) {
  config.validate();
  if (config.out_dir.empty()) throw std::invalid_argument("gen: output.dir (or --out) is required");
  fs::create_directories(config.out_dir);
  const Graph graph = build_graph(config);
  const CostEnsemble ensemble = build_ensemble(config, graph.n_nodes());
  graph.save(config.out_dir + "/graph.txt");
  ensemble.save(config.out_dir + "/ensemble.txt");
}

}  // namespace distopt
