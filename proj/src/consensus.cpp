#include "rdv/consensus.hpp"

#include "rdv/errors.hpp"

#include <limits>
#include <string>

namespace rdv {

ConsensusLaw::ConsensusLaw(SensorDigraph graph, Eigen::MatrixXd a, Eigen::MatrixXd b)
    : graph_(std::move(graph)), a_(std::move(a)), b_(std::move(b)) {
  const auto n = static_cast<Eigen::Index>(graph_.size());
  if (a_.rows() != n || a_.cols() != n || b_.rows() != n || b_.cols() != n) {
    throw std::invalid_argument("consensus gain matrices must be n x n");
  }
  if (!a_.allFinite() || !b_.allFinite()) throw std::invalid_argument("consensus gains must be finite");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool edge = graph_.has_edge(std::size_t(i), std::size_t(j));
      if (!edge && (a_(i, j) != 0.0 || b_(i, j) != 0.0)) {
        throw std::invalid_argument("consensus gain given for non-edge (" + std::to_string(i + 1) + ", " +
                                    std::to_string(j + 1) + ")");
      }
    }
  }
}

ConsensusLaw ConsensusLaw::ren_atkins(SensorDigraph graph, double a, double gamma) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd am = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : graph.edges()) {
    am(Eigen::Index(i), Eigen::Index(j)) = a;
    bm(Eigen::Index(i), Eigen::Index(j)) = gamma * a;
  }
  return ConsensusLaw(std::move(graph), std::move(am), std::move(bm));
}

Vec3d eval_f(const ConsensusLaw& law, std::size_t i, std::span<const RelativeState> y) {
  const auto& nbrs = law.graph().neighbors(i);
  if (nbrs.size() != y.size()) {
    throw std::invalid_argument("eval_f: " + std::to_string(y.size()) + " measurements for " +
                                std::to_string(nbrs.size()) + " neighbors");
  }
  Vec3d f = Vec3d::Zero();
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    f += law.a(i, nbrs[k]) * y[k].x + law.b(i, nbrs[k]) * y[k].v;
  }
  return f;
}

RelativeClosedLoop build_relative_closed_loop(const ConsensusLaw& law) {
  const auto n = static_cast<Eigen::Index>(law.size());
  const Eigen::Index r = n - 1;
  RelativeClosedLoop rcl;
  rcl.vehicles = law.size();
  rcl.position_coeff = Eigen::MatrixXd::Zero(n, r);
  rcl.velocity_coeff = Eigen::MatrixXd::Zero(n, r);

  // x_ij = x_1j - x_1i with x_11 = 0.
  for (const auto& [ui, uj] : law.graph().edges()) {
    const auto i = Eigen::Index(ui);
    const auto j = Eigen::Index(uj);
    if (j != 0) {
      rcl.position_coeff(i, j - 1) += law.a(ui, uj);
      rcl.velocity_coeff(i, j - 1) += law.b(ui, uj);
    }
    if (i != 0) {
      rcl.position_coeff(i, i - 1) -= law.a(ui, uj);
      rcl.velocity_coeff(i, i - 1) -= law.b(ui, uj);
    }
  }

  Eigen::MatrixXd scalar = Eigen::MatrixXd::Zero(2 * r, 2 * r);
  scalar.topRightCorner(r, r).setIdentity();
  for (Eigen::Index j = 0; j < r; ++j) {
    scalar.block(r + j, 0, 1, r) = rcl.position_coeff.row(j + 1) - rcl.position_coeff.row(0);
    scalar.block(r + j, r, 1, r) = rcl.velocity_coeff.row(j + 1) - rcl.velocity_coeff.row(0);
  }

  rcl.A = Eigen::MatrixXd::Zero(6 * r, 6 * r);
  for (Eigen::Index p = 0; p < 2 * r; ++p) {
    for (Eigen::Index q = 0; q < 2 * r; ++q) {
      if (scalar(p, q) != 0.0) rcl.A.block<3, 3>(3 * p, 3 * q) = scalar(p, q) * Mat3d::Identity();
    }
  }
  return rcl;
}

Vec3d ideal_force(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X) {
  const Eigen::Index r = Eigen::Index(rcl.vehicles) - 1;
  const auto row = Eigen::Index(i);
  Vec3d f = Vec3d::Zero();
  for (Eigen::Index k = 0; k < r; ++k) {
    f += rcl.position_coeff(row, k) * X.segment<3>(3 * k) + rcl.velocity_coeff(row, k) * X.segment<3>(3 * (r + k));
  }
  return f;
}

Certification certify(const Eigen::MatrixXd& A) {
  Certification c;
  if (A.size() == 0) {
    c.hurwitz = true;
    c.spectral_abscissa = -std::numeric_limits<double>::infinity();
    return c;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("certify: eigensolver did not converge");
  c.eigenvalues = es.eigenvalues();
  c.spectral_abscissa = c.eigenvalues.real().maxCoeff();
  c.hurwitz = c.spectral_abscissa < -kHurwitzMargin;
  return c;
}

Certification certify(const RelativeClosedLoop& rcl) { return certify(rcl.A); }

Eigen::MatrixXd solve_continuous_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index m = A.rows();
  if (A.cols() != m || Q.rows() != m || Q.cols() != m) {
    throw std::invalid_argument("solve_continuous_lyapunov: A and Q must be square and of equal size");
  }
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm())) {
    throw std::invalid_argument("solve_continuous_lyapunov: Q must be symmetric");
  }
  if (m == 0) return Eigen::MatrixXd(0, 0);
  if (!certify(A).hurwitz) throw CertificationError("solve_continuous_lyapunov: A is not Hurwitz");

  // (I kron A^T + A^T kron I) vec(P) = -vec(Q), column-major vec.
  const Eigen::Index m2 = m * m;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m2, m2);
  for (Eigen::Index c = 0; c < m; ++c) {
    K.block(c * m, c * m, m, m) += A.transpose();
    for (Eigen::Index d = 0; d < m; ++d) {
      const double s = A(d, c);
      if (s != 0.0) K.block(c * m, d * m, m, m).diagonal().array() += s;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), m2);
  const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(sol.data(), m, m);
  return 0.5 * (P + P.transpose());
}

LyapunovForm synthesize_P(const RelativeClosedLoop& rcl, const Eigen::MatrixXd& Q) {
  if (Q.rows() == 0 && rcl.dim() == 0) return {Eigen::MatrixXd(0, 0), Q};
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (Q + Q.transpose()));
  if (llt.info() != Eigen::Success || (Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm())) {
    throw std::invalid_argument("synthesize_P: Q must be symmetric positive definite");
  }
  LyapunovForm form{solve_continuous_lyapunov(rcl.A, Q), Q};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(form.P, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) throw NumericalError("synthesize_P: computed P is not positive definite");
  return form;
}

LyapunovForm synthesize_P(const RelativeClosedLoop& rcl) {
  return synthesize_P(rcl, Eigen::MatrixXd::Identity(rcl.dim(), rcl.dim()));
}

}  // namespace rdv
