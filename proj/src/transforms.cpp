#include "distopt/transforms.hpp"

#include <sstream>
#include <stdexcept>

namespace distopt {

OutputMap split_output_map(const Eigen::MatrixXd& e) {
  const int q = static_cast<int>(e.rows());
  const int n = static_cast<int>(e.cols());
  if (q < 1 || n < 1 || q > n)
    throw std::invalid_argument("output map: E must be q x n with 1 <= q <= n");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(e.transpose());
  Eigen::MatrixXd full_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();

  int rank = 0;
  const double tol = 1e-10 * std::max(1.0, std::abs(r(0, 0)));
  for (int i = 0; i < q; ++i)
    if (std::abs(r(i, i)) > tol) ++rank;
  if (rank < q) {
    std::ostringstream msg;
    msg << "output map: E is rank deficient (rank " << rank << " < " << q << " rows)";
    throw std::invalid_argument(msg.str());
  }

  // Fixed sign convention: largest-magnitude entry of each basis column is
  // positive (first such entry on ties).
  for (int c = 0; c < n; ++c) {
    int arg = 0;
    full_q.col(c).cwiseAbs().maxCoeff(&arg);
    if (full_q(arg, c) < 0.0) full_q.col(c) = -full_q.col(c);
  }

  OutputMap om;
  om.e_ = e;
  om.w_ = full_q.leftCols(q);
  om.z_ = full_q.rightCols(n - q);
  om.k_ = (e * om.w_) * (e * om.w_).transpose();

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  om.sigma_min_ = svd.singularValues()(q - 1);
  om.sigma_max_ = svd.singularValues()(0);
  return om;
}

TransformedState to_transformed(const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                                const OutputMap& om, const Graph& g) {
  const int n_agents = g.n_nodes();
  const int n = om.state_dim();
  const int q = om.output_dim();
  if (x.size() != static_cast<Eigen::Index>(n_agents) * n)
    throw std::invalid_argument("to_transformed: x has wrong dimension");
  if (xi.size() != static_cast<Eigen::Index>(n_agents) * q)
    throw std::invalid_argument("to_transformed: xi has wrong dimension");

  const Eigen::MatrixXd& r = g.r_basis();
  TransformedState ts;
  ts.z.resize(static_cast<Eigen::Index>(n_agents) * (n - q));
  Eigen::MatrixXd w_cols(q, n_agents);   // w_i = W^T x_i
  Eigen::MatrixXd xi_cols(q, n_agents);  // xi_i as columns
  for (int i = 0; i < n_agents; ++i) {
    const auto x_i = x.segment(static_cast<Eigen::Index>(i) * n, n);
    ts.z.segment(static_cast<Eigen::Index>(i) * (n - q), n - q).noalias() =
        om.Z().transpose() * x_i;
    w_cols.col(i).noalias() = om.W().transpose() * x_i;
    xi_cols.col(i) = xi.segment(static_cast<Eigen::Index>(i) * q, q);
  }
  ts.w_bar = w_cols.rowwise().sum() / static_cast<double>(n_agents);
  ts.xi_bar = xi_cols.rowwise().sum() / static_cast<double>(n_agents);

  // (R^T (x) I_q) applied blockwise.
  const Eigen::MatrixXd w_tilde_cols = w_cols * r;    // q x (N-1)
  const Eigen::MatrixXd xi_tilde_cols = xi_cols * r;  // q x (N-1)
  ts.w_tilde = Eigen::Map<const Eigen::VectorXd>(w_tilde_cols.data(), w_tilde_cols.size());
  ts.xi_tilde = Eigen::Map<const Eigen::VectorXd>(xi_tilde_cols.data(), xi_tilde_cols.size());
  return ts;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> from_transformed(const TransformedState& ts,
                                                             const OutputMap& om, const Graph& g) {
  const int n_agents = g.n_nodes();
  const int n = om.state_dim();
  const int q = om.output_dim();
  const Eigen::MatrixXd& r = g.r_basis();

  const Eigen::Map<const Eigen::MatrixXd> w_tilde_cols(ts.w_tilde.data(), q, n_agents - 1);
  const Eigen::Map<const Eigen::MatrixXd> xi_tilde_cols(ts.xi_tilde.data(), q, n_agents - 1);

  Eigen::VectorXd x(static_cast<Eigen::Index>(n_agents) * n);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(n_agents) * q);
  for (int i = 0; i < n_agents; ++i) {
    Eigen::VectorXd w_i = ts.w_bar;
    Eigen::VectorXd xi_i = ts.xi_bar;
    for (int k = 0; k < n_agents - 1; ++k) {
      w_i += r(i, k) * w_tilde_cols.col(k);
      xi_i += r(i, k) * xi_tilde_cols.col(k);
    }
    x.segment(static_cast<Eigen::Index>(i) * n, n) =
        om.Z() * ts.z.segment(static_cast<Eigen::Index>(i) * (n - q), n - q) + om.W() * w_i;
    xi.segment(static_cast<Eigen::Index>(i) * q, q) = xi_i;
  }
  return {std::move(x), std::move(xi)};
}

Eigen::VectorXd assemble_xi(const Eigen::VectorXd& xi_bar, const Eigen::VectorXd& xi_tilde,
                            const Graph& g) {
  const int n_agents = g.n_nodes();
  const int q = static_cast<int>(xi_bar.size());
  const Eigen::Map<const Eigen::MatrixXd> xi_tilde_cols(xi_tilde.data(), q, n_agents - 1);
  const Eigen::MatrixXd& r = g.r_basis();
  Eigen::VectorXd xi(static_cast<Eigen::Index>(n_agents) * q);
  for (int i = 0; i < n_agents; ++i) {
    Eigen::VectorXd xi_i = xi_bar;
    for (int k = 0; k < n_agents - 1; ++k) xi_i += r(i, k) * xi_tilde_cols.col(k);
    xi.segment(static_cast<Eigen::Index>(i) * q, q) = xi_i;
  }
  return xi;
}

BlendedDerivative blended_vector_field(const Eigen::VectorXd& z, const Eigen::VectorXd& w_bar,
                                       const AgentDynamics& dynamics, int n_agents,
                                       const OutputMap& om) {
  const int n = om.state_dim();
  const int q = om.output_dim();
  const int kdim = n - q;
  if (dynamics.state_dim != n)
    throw std::invalid_argument("blended field: dynamics dimension does not match output map");
  if (z.size() != static_cast<Eigen::Index>(n_agents) * kdim)
    throw std::invalid_argument("blended field: z has wrong dimension");
  if (w_bar.size() != q) throw std::invalid_argument("blended field: w_bar has wrong dimension");

  BlendedDerivative d;
  d.z_dot.resize(z.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(q);
  const Eigen::VectorXd w_part = om.W() * w_bar;
  for (int i = 0; i < n_agents; ++i) {
    const Eigen::VectorXd x_i = om.Z() * z.segment(static_cast<Eigen::Index>(i) * kdim, kdim) + w_part;
    const Eigen::VectorXd h_i = dynamics.drift(i, x_i);
    d.z_dot.segment(static_cast<Eigen::Index>(i) * kdim, kdim).noalias() = om.Z().transpose() * h_i;
    acc += om.W().transpose() * h_i;
  }
  d.w_bar_dot = acc / static_cast<double>(n_agents);
  return d;
}

TransformedState transformed_vector_field(const TransformedState& ts,
                                          const AgentDynamics& dynamics, const OutputMap& om,
                                          const Graph& g, CouplingMode mode, double k_p,
                                          double k_i, double kappa,
                                          const Eigen::MatrixXd& k_matrix) {
  const int n_agents = g.n_nodes();
  const int n = om.state_dim();
  const int q = om.output_dim();
  const int kdim = n - q;
  const Eigen::MatrixXd& r = g.r_basis();

  const auto [x, xi] = from_transformed(ts, om, g);
  (void)xi;

  TransformedState d;
  d.z.resize(ts.z.size());
  Eigen::MatrixXd wh_cols(q, n_agents);  // W^T h_i(x_i)
  Eigen::VectorXd w_bar_acc = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < n_agents; ++i) {
    const Eigen::VectorXd h_i = dynamics.drift(i, x.segment(static_cast<Eigen::Index>(i) * n, n));
    d.z.segment(static_cast<Eigen::Index>(i) * kdim, kdim).noalias() = om.Z().transpose() * h_i;
    wh_cols.col(i).noalias() = om.W().transpose() * h_i;
    w_bar_acc += wh_cols.col(i);
  }
  d.w_bar = w_bar_acc / static_cast<double>(n_agents);
  if (mode == CouplingMode::B)
    d.w_bar -= k_i * (om.W().transpose() * (om.E().transpose() * ts.xi_bar));

  const Eigen::MatrixXd lambda_p = g.reduced_laplacian();
  const Eigen::MatrixXd lambda_i = mode == CouplingMode::A
                                       ? lambda_p
                                       : Eigen::MatrixXd::Identity(n_agents - 1, n_agents - 1);
  const Eigen::MatrixXd ew = om.E() * om.W();
  const Eigen::Map<const Eigen::MatrixXd> w_tilde_cols(ts.w_tilde.data(), q, n_agents - 1);
  const Eigen::Map<const Eigen::MatrixXd> xi_tilde_cols(ts.xi_tilde.data(), q, n_agents - 1);

  const Eigen::MatrixXd w_tilde_dot_cols =
      wh_cols * r - k_p * (ew.transpose() * ew) * w_tilde_cols * lambda_p -
      k_i * ew.transpose() * xi_tilde_cols * lambda_i;
  d.w_tilde = Eigen::Map<const Eigen::VectorXd>(w_tilde_dot_cols.data(), w_tilde_dot_cols.size());

  d.xi_bar = Eigen::VectorXd::Zero(q);
  const Eigen::MatrixXd xi_tilde_dot_cols = kappa * (k_matrix * ew) * w_tilde_cols * lambda_p;
  d.xi_tilde =
      Eigen::Map<const Eigen::VectorXd>(xi_tilde_dot_cols.data(), xi_tilde_dot_cols.size());
  return d;
}

FullEquilibrium full_equilibrium(const Eigen::VectorXd& z_star, const Eigen::VectorXd& w_bar_star,
                                 const AgentDynamics& dynamics, const OutputMap& om, const Graph& g,
                                 CouplingMode mode, double k_i) {
  if (!(k_i > 0.0)) throw std::invalid_argument("full_equilibrium: k_I must be positive");
  const int n_agents = g.n_nodes();
  const int n = om.state_dim();
  const int q = om.output_dim();
  const int kdim = n - q;

  FullEquilibrium eq;
  eq.x_star.resize(static_cast<Eigen::Index>(n_agents) * n);
  Eigen::MatrixXd wh_cols(q, n_agents);  // W^T h_i(x_i*)
  const Eigen::VectorXd w_part = om.W() * w_bar_star;
  for (int i = 0; i < n_agents; ++i) {
    const Eigen::VectorXd x_i =
        om.Z() * z_star.segment(static_cast<Eigen::Index>(i) * kdim, kdim) + w_part;
    eq.x_star.segment(static_cast<Eigen::Index>(i) * n, n) = x_i;
    wh_cols.col(i).noalias() = om.W().transpose() * dynamics.drift(i, x_i);
  }

  if (n_agents == 1) {  // no disagreement coordinates
    eq.xi_tilde_star.resize(0);
    return eq;
  }

  // Solve (Lambda_I (x) W^T E^T) xi_tilde* = (1/k_I) (R^T (x) W^T) h(x*).
  const Eigen::MatrixXd lambda_i = mode == CouplingMode::A
                                       ? g.reduced_laplacian()
                                       : Eigen::MatrixXd::Identity(n_agents - 1, n_agents - 1);
  const Eigen::MatrixXd wte = om.W().transpose() * om.E().transpose();  // q x q
  Eigen::MatrixXd system(static_cast<Eigen::Index>(n_agents - 1) * q,
                         static_cast<Eigen::Index>(n_agents - 1) * q);
  for (int a = 0; a < n_agents - 1; ++a)
    for (int b = 0; b < n_agents - 1; ++b)
      system.block(static_cast<Eigen::Index>(a) * q, static_cast<Eigen::Index>(b) * q, q, q) =
          lambda_i(a, b) * wte;

  const Eigen::MatrixXd rhs_cols = wh_cols * g.r_basis();  // q x (N-1)
  const Eigen::VectorXd rhs =
      Eigen::Map<const Eigen::VectorXd>(rhs_cols.data(), rhs_cols.size()) / k_i;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "full_equilibrium: (Lambda_I (x) W^T E^T) is singular; graph disconnected or E rank "
        "deficient");
  eq.xi_tilde_star = lu.solve(rhs);
  return eq;
}

}  // namespace distopt
