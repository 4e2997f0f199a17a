#include "distopt/problems.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "distopt/rng.hpp"

namespace distopt {

namespace {

Eigen::MatrixXd random_symmetric(int dim, Rng& rng) {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = rng.normal();
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

void write_number(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

CostEnsemble CostEnsemble::quadratic(std::vector<QuadraticLocal> locals) {
  if (locals.empty()) throw std::invalid_argument("ensemble: needs at least one local cost");
  const int dim = static_cast<int>(locals.front().A.rows());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
  double max_local = 0.0;
  for (const auto& q : locals) {
    if (q.A.rows() != dim || q.A.cols() != dim || q.b.size() != dim)
      throw std::invalid_argument("ensemble: inconsistent local dimensions");
    if (!q.A.isApprox(q.A.transpose(), 1e-12))
      throw std::invalid_argument("ensemble: local matrix is not symmetric");
    sum += q.A;
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.A).eigenvalues();
    max_local = std::max(max_local, 2.0 * std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff())));
  }
  const double n = static_cast<double>(locals.size());
  const Eigen::VectorXd sum_ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>((2.0 / n) * sum).eigenvalues();
  if (sum_ev.minCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "ensemble: sum of local Hessians is not positive definite (min eigenvalue "
        << sum_ev.minCoeff() << ")";
    throw std::invalid_argument(msg.str());
  }

  CostEnsemble e;
  e.dim_ = dim;
  e.n_agents_ = locals.size();
  e.quadratics_ = std::move(locals);
  e.alpha_ = sum_ev.minCoeff();
  e.lipschitz_ = max_local;
  return e;
}

CostEnsemble CostEnsemble::custom(int dim, std::vector<LocalCost> locals, double lipschitz,
                                  double alpha) {
  if (locals.empty()) throw std::invalid_argument("ensemble: needs at least one local cost");
  if (!(alpha > 0.0)) throw std::invalid_argument("ensemble: alpha must be positive");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("ensemble: lipschitz must be positive");
  CostEnsemble e;
  e.dim_ = dim;
  e.n_agents_ = locals.size();
  e.customs_ = std::move(locals);
  e.alpha_ = alpha;
  e.lipschitz_ = lipschitz;
  return e;
}

double CostEnsemble::local_value(int i, const Eigen::VectorXd& w) const {
  return is_quadratic() ? quadratics_[i].value(w) : customs_[i].value(w);
}

Eigen::VectorXd CostEnsemble::local_gradient(int i, const Eigen::VectorXd& w) const {
  return is_quadratic() ? quadratics_[i].gradient(w) : customs_[i].gradient(w);
}

double CostEnsemble::value(const Eigen::VectorXd& w) const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += local_value(i, w);
  return acc / static_cast<double>(size());
}

Eigen::VectorXd CostEnsemble::gradient(const Eigen::VectorXd& w) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < size(); ++i) acc += local_gradient(i, w);
  return acc / static_cast<double>(size());
}

const std::vector<QuadraticLocal>& CostEnsemble::quadratics() const {
  if (!is_quadratic()) throw std::logic_error("ensemble: not quadratic");
  return quadratics_;
}

CostEnsemble CostEnsemble::without_local(int i) const {
  if (!is_quadratic())
    throw std::runtime_error("ensemble: churn requires quadratic locals (constants are recomputed)");
  if (i < 0 || i >= size()) throw std::invalid_argument("ensemble: local index out of range");
  auto locals = quadratics_;
  locals.erase(locals.begin() + i);
  return quadratic(std::move(locals));
}

CostEnsemble CostEnsemble::with_local(QuadraticLocal extra) const {
  if (!is_quadratic())
    throw std::runtime_error("ensemble: churn requires quadratic locals (constants are recomputed)");
  auto locals = quadratics_;
  locals.push_back(std::move(extra));
  return quadratic(std::move(locals));
}

CostEnsemble CostEnsemble::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ensemble: cannot open " + path);
  int n_agents = 0, dim = 0;
  if (!(in >> n_agents >> dim) || n_agents < 1 || dim < 1)
    throw std::runtime_error("ensemble: bad header in " + path);
  std::vector<QuadraticLocal> locals(n_agents);
  for (auto& q : locals) {
    q.A.resize(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        if (!(in >> q.A(r, c))) throw std::runtime_error("ensemble: truncated matrix in " + path);
  }
  for (auto& q : locals) {
    q.b.resize(dim);
    for (int r = 0; r < dim; ++r)
      if (!(in >> q.b(r))) throw std::runtime_error("ensemble: truncated vector in " + path);
  }
  return quadratic(std::move(locals));
}

void CostEnsemble::save(const std::string& path) const {
  if (!is_quadratic()) throw std::runtime_error("ensemble: only quadratic ensembles serialize");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("ensemble: cannot write " + path);
  out << size() << " " << dim_ << "\n";
  for (const auto& q : quadratics_) {
    for (int r = 0; r < dim_; ++r) {
      for (int c = 0; c < dim_; ++c) {
        if (c) out << " ";
        write_number(out, q.A(r, c));
      }
      out << "\n";
    }
  }
  for (const auto& q : quadratics_) {
    for (int r = 0; r < dim_; ++r) {
      if (r) out << " ";
      write_number(out, q.b(r));
    }
    out << "\n";
  }
}

CostEnsemble random_quadratic_ensemble(int n_agents, int dim, double target_max_eig,
                                       double target_condition, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("ensemble: n_agents must be >= 1");
  if (dim < 1) throw std::invalid_argument("ensemble: dim must be >= 1");
  if (!(target_max_eig > 0.0))
    throw std::invalid_argument("ensemble: target_max_eig must be positive");
  if (!(target_condition >= 1.0))
    throw std::invalid_argument("ensemble: target_condition must be >= 1");
  if (dim == 1 && target_condition > 1.05)
    throw std::invalid_argument("ensemble: a 1-dimensional sum has condition number 1");

  Rng rng(seed);

  // Shared base with the requested spectrum: eigenvalues of (1/N) sum A_i
  // are a geometric ramp from target_max_eig/target_condition up to
  // target_max_eig, in a seeded random eigenbasis.
  Eigen::MatrixXd seed_matrix(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) seed_matrix(i, j) = rng.normal();
  Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(seed_matrix).householderQ() *
                          Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd target(dim);
  const double lo = target_max_eig / target_condition;
  for (int k = 0; k < dim; ++k) {
    const double t = dim == 1 ? 1.0 : static_cast<double>(k) / (dim - 1);
    target[k] = lo * std::pow(target_condition, t);
  }
  const Eigen::MatrixXd base = basis * target.asDiagonal() * basis.transpose();

  // Zero-sum symmetric perturbations on top of the base keep the sum
  // spectrum pinned while making the locals heterogeneous. The scale is
  // kept small: the point is locals that fail convexity, not locals so
  // wild that the couplings of interest cannot hold the network together.
  const double jitter = 0.01 * target_max_eig;
  std::vector<QuadraticLocal> locals(n_agents);
  Eigen::MatrixXd accumulated = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n_agents; ++i) {
    locals[i].A = base;
    if (i + 1 < n_agents) {
      const Eigen::MatrixXd p = jitter * random_symmetric(dim, rng);
      locals[i].A += p;
      accumulated += p;
    } else if (n_agents > 1) {
      locals[i].A -= accumulated;
    }
    locals[i].b = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
  }

  // Guarantee one indefinite local (negative for dim 1): push agent 0 down
  // along its bottom eigenvector to a mild floor and hand the same mass to
  // agent 1, leaving the sum untouched.
  if (n_agents >= 3) {
    const double floor = 0.02 * target_max_eig;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(locals[0].A);
    if (dim >= 2) {
      const double delta = e0.eigenvalues()(0) + floor;
      if (delta > 0.0) {
        const Eigen::VectorXd u = e0.eigenvectors().col(0);
        locals[0].A -= delta * (u * u.transpose());
        locals[1].A += delta * (u * u.transpose());
      }
      // The top of the base spectrum is far above the floor, so a positive
      // direction survives and the local is genuinely indefinite.
    } else {
      const double delta = locals[0].A(0, 0) + floor;
      if (delta > 0.0) {
        locals[0].A(0, 0) -= delta;
        locals[1].A(0, 0) += delta;
      }
    }
  }

  return CostEnsemble::quadratic(std::move(locals));
}

Eigen::VectorXd minimizer(const CostEnsemble& ensemble) {
  if (ensemble.is_quadratic()) {
    Eigen::MatrixXd sum_a = Eigen::MatrixXd::Zero(ensemble.dim(), ensemble.dim());
    Eigen::VectorXd sum_b = Eigen::VectorXd::Zero(ensemble.dim());
    for (const auto& q : ensemble.quadratics()) {
      sum_a += q.A;
      sum_b += q.b;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sum_a);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      std::ostringstream msg;
      msg << "minimizer: sum of local Hessians singular or indefinite (min eigenvalue "
          << es.eigenvalues().minCoeff() << ")";
      throw std::runtime_error(msg.str());
    }
    const auto ldlt = sum_a.ldlt();
    const Eigen::VectorXd rhs = -0.5 * sum_b;
    Eigen::VectorXd w = ldlt.solve(rhs);
    w += ldlt.solve(rhs - sum_a * w);  // one refinement pass for ill-conditioned sums
    if (ensemble.gradient(w).norm() >= 1e-10)
      throw std::runtime_error("minimizer: linear solve left gradient residual above 1e-10");
    return w;
  }

  // Damped Newton with a finite-difference Hessian of grad F.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(ensemble.dim());
  const int dim = ensemble.dim();
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd g = ensemble.gradient(w);
    if (g.norm() < 1e-12) return w;
    Eigen::MatrixXd hess(dim, dim);
    const double step = 1e-6 * (1.0 + w.norm());
    for (int k = 0; k < dim; ++k) {
      Eigen::VectorXd wp = w, wm = w;
      wp[k] += step;
      wm[k] -= step;
      hess.col(k) = (ensemble.gradient(wp) - ensemble.gradient(wm)) / (2.0 * step);
    }
    hess = 0.5 * (hess + hess.transpose());
    Eigen::VectorXd dw = hess.ldlt().solve(-g);
    if (!dw.allFinite()) dw = -g;
    double t = 1.0;
    const double g0 = g.norm();
    while (t > 1e-8 && ensemble.gradient(w + t * dw).norm() > (1.0 - 0.25 * t) * g0) t *= 0.5;
    w += t * dw;
  }
  if (ensemble.gradient(w).norm() >= 1e-12)
    throw std::runtime_error("minimizer: Newton iteration failed to reach |grad F| < 1e-12");
  return w;
}

HeavyBallEquilibrium heavy_ball_equilibrium(const CostEnsemble& ensemble) {
  HeavyBallEquilibrium eq;
  eq.w_star = minimizer(ensemble);
  const double scale = -1.0 / (2.0 * std::sqrt(ensemble.alpha()));
  eq.z_star.reserve(ensemble.size());
  for (int i = 0; i < ensemble.size(); ++i)
    eq.z_star.push_back(scale * ensemble.local_gradient(i, eq.w_star));
  return eq;
}

}  // namespace distopt
