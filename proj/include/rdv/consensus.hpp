#pragma once

// Double-integrator consensus law f_i(y_i) = sum_j a_ij x_ij + b_ij v_ij,
// its relative closed loop in coordinates X = (x_1j, v_1j)_{j>=2}, Hurwitz
// certification and quadratic Lyapunov synthesis.

#include "rdv/digraph.hpp"
#include "rdv/lie.hpp"

#include <Eigen/Dense>

#include <span>

namespace rdv {

struct RelativeState {
  Vec3d x = Vec3d::Zero();  // x_ij = x_j - x_i
  Vec3d v = Vec3d::Zero();  // v_ij = v_j - v_i
};

class ConsensusLaw {
 public:
  /// Per-edge gains as dense n x n matrices. Entries off the edge set must be
  /// zero; throws std::invalid_argument otherwise or on non-finite gains.
  ConsensusLaw(SensorDigraph graph, Eigen::MatrixXd a, Eigen::MatrixXd b);

  /// a_ij = a, b_ij = gamma * a on every edge.
  static ConsensusLaw ren_atkins(SensorDigraph graph, double a, double gamma);

  const SensorDigraph& graph() const { return graph_; }
  std::size_t size() const { return graph_.size(); }
  double a(std::size_t i, std::size_t j) const { return a_(i, j); }
  double b(std::size_t i, std::size_t j) const { return b_(i, j); }
  const Eigen::MatrixXd& a_matrix() const { return a_; }
  const Eigen::MatrixXd& b_matrix() const { return b_; }

 private:
  SensorDigraph graph_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
};

/// Desired acceleration of vehicle i. y must be ordered like
/// law.graph().neighbors(i); throws std::invalid_argument on length mismatch.
Vec3d eval_f(const ConsensusLaw& law, std::size_t i, std::span<const RelativeState> y);

/// Linear map X -> g_i(X) = f_i(h_i(X)), per axis. With X laid out as
/// [x_12 .. x_1n, v_12 .. v_1n] (3 entries each), g_i(X) equals
///   sum_k position(i, k) * x_1(k+2) + velocity(i, k) * v_1(k+2).
struct RelativeClosedLoop {
  std::size_t vehicles = 0;
  Eigen::MatrixXd A;                // 6(n-1) x 6(n-1)
  Eigen::MatrixXd position_coeff;   // n x (n-1)
  Eigen::MatrixXd velocity_coeff;   // n x (n-1)

  Eigen::Index dim() const { return A.rows(); }
};

RelativeClosedLoop build_relative_closed_loop(const ConsensusLaw& law);

/// g_i(X) in inertial coordinates.
Vec3d ideal_force(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X);

/// Hurwitz margin used by certify().
inline constexpr double kHurwitzMargin = 1e-10;

struct Certification {
  bool hurwitz = false;
  double spectral_abscissa = 0.0;  // max real part
  Eigen::VectorXcd eigenvalues;
};

/// Throws NumericalError if the eigensolver does not converge.
Certification certify(const RelativeClosedLoop& rcl);
Certification certify(const Eigen::MatrixXd& A);

/// Solves A^T P + P A = -Q. Requires A Hurwitz; throws CertificationError
/// otherwise and std::invalid_argument on bad Q.
Eigen::MatrixXd solve_continuous_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

struct LyapunovForm {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;

  double value(const Eigen::Ref<const Eigen::VectorXd>& X) const { return X.dot(P * X); }
};

LyapunovForm synthesize_P(const RelativeClosedLoop& rcl, const Eigen::MatrixXd& Q);
LyapunovForm synthesize_P(const RelativeClosedLoop& rcl);  // Q = I

}  // namespace rdv
