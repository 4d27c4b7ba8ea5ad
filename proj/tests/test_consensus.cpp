#include "rdv/consensus.hpp"

#include "rdv/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace rdv;

namespace {

Eigen::MatrixXd kron_i3(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(3 * m.rows(), 3 * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) k.block(3 * r, 3 * c, 3, 3) = m(r, c) * Eigen::Matrix3d::Identity();
  }
  return k;
}

// Point masses driven by eval_f on inertial relative states.
struct PointMasses {
  std::vector<Vec3d> x, v;
};

std::vector<Vec3d> accelerations(const ConsensusLaw& law, const PointMasses& s, const Vec3d& g) {
  std::vector<Vec3d> acc;
  for (std::size_t i = 0; i < law.size(); ++i) {
    std::vector<RelativeState> y;
    for (std::size_t j : law.graph().neighbors(i)) y.push_back({s.x[j] - s.x[i], s.v[j] - s.v[i]});
    acc.push_back(eval_f(law, i, y) + g);
  }
  return acc;
}

PointMasses rk4(const ConsensusLaw& law, PointMasses s, double dt, std::size_t steps, const Vec3d& g = Vec3d::Zero()) {
  const std::size_t n = law.size();
  auto axpy = [&](const PointMasses& base, const std::vector<Vec3d>& dx, const std::vector<Vec3d>& dv, double h) {
    PointMasses out = base;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += h * dx[i];
      out.v[i] += h * dv[i];
    }
    return out;
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const auto a1 = accelerations(law, s, g);
    const auto s2 = axpy(s, s.v, a1, dt / 2);
    const auto a2 = accelerations(law, s2, g);
    const auto s3 = axpy(s, s2.v, a2, dt / 2);
    const auto a3 = accelerations(law, s3, g);
    const auto s4 = axpy(s, s3.v, a3, dt);
    const auto a4 = accelerations(law, s4, g);
    for (std::size_t i = 0; i < n; ++i) {
      s.x[i] += dt / 6 * (s.v[i] + 2 * s2.v[i] + 2 * s3.v[i] + s4.v[i]);
      s.v[i] += dt / 6 * (a1[i] + 2 * a2[i] + 2 * a3[i] + a4[i]);
    }
  }
  return s;
}

Eigen::VectorXd relative(const PointMasses& s) {
  const std::size_t n = s.x.size();
  Eigen::VectorXd X(6 * (n - 1));
  for (std::size_t j = 1; j < n; ++j) {
    X.segment<3>(3 * Eigen::Index(j - 1)) = s.x[j] - s.x[0];
    X.segment<3>(3 * Eigen::Index(n - 1 + j - 1)) = s.v[j] - s.v[0];
  }
  return X;
}

}  // namespace

TEST_SUITE("consensus") {
  TEST_CASE("eval_f") {
    const auto law = ConsensusLaw::ren_atkins(SensorDigraph(2, {{0, 1}}), 0.3, 30.0);
    CHECK(law.b(0, 1) == doctest::Approx(9.0));
    const std::vector<RelativeState> y{{Vec3d(1, 0, 0), Vec3d::Zero()}};
    CHECK((eval_f(law, 0, y) - Vec3d(0.3, 0, 0)).norm() <= 1e-15);
    const std::vector<RelativeState> zero{{}};
    CHECK(eval_f(law, 0, zero) == Vec3d::Zero());
    CHECK_THROWS_AS(eval_f(law, 0, std::vector<RelativeState>{}), std::invalid_argument);
    CHECK(eval_f(law, 1, std::vector<RelativeState>{}) == Vec3d::Zero());
  }

  TEST_CASE("eval_f is homogeneous") {
    const auto law = ConsensusLaw::ren_atkins(reference_digraph(), 0.3, 30.0);
    Rng rng(21);
    for (int k = 0; k < 100; ++k) {
      std::vector<RelativeState> y, y2;
      for (std::size_t j = 0; j < 2; ++j) {
        RelativeState r{test::random_vec(rng, 5), test::random_vec(rng, 2)};
        y.push_back(r);
        y2.push_back({2.0 * r.x, 2.0 * r.v});
      }
      CHECK(eval_f(law, 2, y2) == 2.0 * eval_f(law, 2, y));
    }
  }

  TEST_CASE("gains off the edge set are rejected") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2), b = a;
    a(1, 0) = 1.0;
    CHECK_THROWS_AS(ConsensusLaw(SensorDigraph(2, {{0, 1}}), a, b), std::invalid_argument);
    a.setZero();
    a(0, 1) = std::nan("");
    CHECK_THROWS_AS(ConsensusLaw(SensorDigraph(2, {{0, 1}}), a, b), std::invalid_argument);
  }

  TEST_CASE("two-vehicle relative blocks") {
    Eigen::MatrixXd mutual(2, 2), one_way(2, 2);
    mutual << 0, 1, -0.6, -18;
    one_way << 0, 1, -0.3, -9;
    const auto m = build_relative_closed_loop(ConsensusLaw::ren_atkins(SensorDigraph(2, {{0, 1}, {1, 0}}), 0.3, 30));
    CHECK((m.A - kron_i3(mutual)).norm() <= 1e-14);
    const auto o = build_relative_closed_loop(ConsensusLaw::ren_atkins(SensorDigraph(2, {{1, 0}}), 0.3, 30));
    CHECK((o.A - kron_i3(one_way)).norm() <= 1e-14);
    CHECK((m.A * Eigen::VectorXd::Zero(6)).norm() == 0.0);
  }

  TEST_CASE("A reproduces the point-mass relative dynamics") {
    const auto law = ConsensusLaw::ren_atkins(reference_digraph(), 0.3, 30.0);
    const auto rcl = build_relative_closed_loop(law);
    REQUIRE(rcl.A.rows() == 24);
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      PointMasses s;
      for (int i = 0; i < 5; ++i) {
        s.x.push_back(test::random_vec(rng, 10));
        s.v.push_back(test::random_vec(rng, 2));
      }
      const auto acc = accelerations(law, s, Vec3d::Zero());
      Eigen::VectorXd dX(24);
      for (std::size_t j = 1; j < 5; ++j) {
        dX.segment<3>(3 * Eigen::Index(j - 1)) = s.v[j] - s.v[0];
        dX.segment<3>(3 * Eigen::Index(4 + j - 1)) = acc[j] - acc[0];
      }
      const Eigen::VectorXd X = relative(s);
      CHECK((rcl.A * X - dX).norm() <= 1e-12 * (1 + dX.norm()));
      for (std::size_t i = 0; i < 5; ++i) CHECK((ideal_force(rcl, i, X) - acc[i]).norm() <= 1e-12);
    }
  }

  TEST_CASE("certify") {
    const auto mutual = build_relative_closed_loop(ConsensusLaw::ren_atkins(SensorDigraph(2, {{0, 1}, {1, 0}}), 0.3, 30));
    const auto c = certify(mutual);
    CHECK(c.hurwitz);
    // Roots of s^2 + 18 s + 0.6.
    CHECK(c.spectral_abscissa == doctest::Approx((-18 + std::sqrt(18.0 * 18.0 - 2.4)) / 2).epsilon(1e-9));
    const auto undamped = build_relative_closed_loop(ConsensusLaw::ren_atkins(SensorDigraph(2, {{0, 1}, {1, 0}}), 0.3, 0));
    CHECK_FALSE(certify(undamped).hurwitz);
    CHECK(certify(build_relative_closed_loop(ConsensusLaw::ren_atkins(reference_digraph(), 0.3, 30))).hurwitz);
    CHECK_FALSE(certify(build_relative_closed_loop(ConsensusLaw::ren_atkins(SensorDigraph(3, {{0, 1}}), 0.3, 30))).hurwitz);
  }

  TEST_CASE("certified gains make point masses converge") {
    const auto law = ConsensusLaw::ren_atkins(reference_digraph(), 0.3, 30.0);
    const auto rcl = build_relative_closed_loop(law);
    const auto c = certify(rcl);
    Eigen::EigenSolver<Eigen::MatrixXd> es(rcl.A);
    const double kappa = es.eigenvectors().norm() * es.eigenvectors().inverse().norm();
    const double T = (std::log(1e3) + std::log(kappa)) / -c.spectral_abscissa;
    const double dt = 0.02;
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      PointMasses s;
      for (int i = 0; i < 5; ++i) {
        s.x.push_back(test::random_vec(rng, 10));
        s.v.push_back(test::random_vec(rng, 2));
      }
      const double x0 = relative(s).norm();
      const auto end = rk4(law, s, dt, std::size_t(std::ceil(T / dt)));
      CHECK(relative(end).norm() <= 1e-3 * x0);
    }
  }

  TEST_CASE("a common acceleration does not change the relative motion") {
    const auto law = ConsensusLaw::ren_atkins(reference_digraph(), 0.3, 30.0);
    Rng rng(24);
    PointMasses s;
    for (int i = 0; i < 5; ++i) {
      s.x.push_back(test::random_vec(rng, 10));
      s.v.push_back(test::random_vec(rng, 2));
    }
    const auto free = rk4(law, s, 0.01, 1000);
    const auto falling = rk4(law, s, 0.01, 1000, Vec3d(0, 0, 9.81));
    CHECK((relative(free) - relative(falling)).norm() <= 1e-9);
  }

  TEST_CASE("Lyapunov solve") {
    Eigen::MatrixXd a(1, 1), q(1, 1);
    a << -1;
    q << 1;
    CHECK(solve_continuous_lyapunov(a, q)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    // Symmetric P for A = [[0, 1], [c, d]] from the three scalar equations.
    const double c = -0.6, d = -18;
    Eigen::Matrix2d A;
    A << 0, 1, c, d;
    Eigen::Matrix3d M;
    Eigen::Vector3d rhs(-1, 0, -1);
    // unknowns (p11, p12, p22)
    M << 0, 2 * c, 0,  //
        1, d, c,       //
        0, 2, 2 * d;
    const Eigen::Vector3d p = M.fullPivLu().solve(rhs);
    Eigen::Matrix2d P_oracle;
    P_oracle << p(0), p(1), p(1), p(2);
    const Eigen::MatrixXd P = solve_continuous_lyapunov(A, Eigen::Matrix2d::Identity());
    CHECK((P - P_oracle).norm() <= 1e-10 * P_oracle.norm());
    CHECK((A.transpose() * P + P * A + Eigen::Matrix2d::Identity()).norm() <= 1e-10);

    Eigen::Matrix2d not_hurwitz;
    not_hurwitz << 0, 1, -0.6, 0;
    CHECK_THROWS_AS(solve_continuous_lyapunov(not_hurwitz, Eigen::Matrix2d::Identity()), CertificationError);
    Eigen::Matrix2d asym;
    asym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(solve_continuous_lyapunov(A, asym), std::invalid_argument);
  }

  TEST_CASE("synthesize_P on the reference graph") {
    const auto rcl = build_relative_closed_loop(ConsensusLaw::ren_atkins(reference_digraph(), 0.3, 30.0));
    const auto form = synthesize_P(rcl);
    const Eigen::MatrixXd& P = form.P;
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().minCoeff() > 0.0);
    CHECK((rcl.A.transpose() * P + P * rcl.A + form.Q).norm() <= 1e-8);

    Rng rng(25);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd X(24);
      for (Eigen::Index r = 0; r < 24; ++r) X(r) = rng.gaussian();
      const double dV = 2.0 * X.dot(P * (rcl.A * X));
      CHECK(dV < 0.0);
      CHECK(std::abs(dV + X.dot(form.Q * X)) <= 1e-9 * X.squaredNorm() * (1 + P.norm()));
    }

    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(24, 24);
    indefinite(3, 3) = -1;
    CHECK_THROWS_AS(synthesize_P(rcl, indefinite), std::invalid_argument);
  }

  TEST_CASE("directional derivative of V matches -Q for custom Q") {
    const auto rcl =
        build_relative_closed_loop(ConsensusLaw::ren_atkins(SensorDigraph(3, {{0, 1}, {1, 2}, {2, 0}}), 0.5, 4.0));
    Rng rng(26);
    Eigen::MatrixXd B(12, 12);
    for (Eigen::Index r = 0; r < 12; ++r) {
      for (Eigen::Index c = 0; c < 12; ++c) B(r, c) = rng.uniform(-1, 1);
    }
    const Eigen::MatrixXd Q = B * B.transpose() + Eigen::MatrixXd::Identity(12, 12);
    const auto form = synthesize_P(rcl, Q);
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd X(12);
      for (Eigen::Index r = 0; r < 12; ++r) X(r) = rng.gaussian();
      // central difference of V along the flow
      const double h = 1e-6;
      const double fd = (form.value(X + h * rcl.A * X) - form.value(X - h * rcl.A * X)) / (2 * h);
      CHECK(std::abs(fd + X.dot(Q * X)) <= 1e-6 * (1 + X.dot(Q * X)));
    }
  }
}
