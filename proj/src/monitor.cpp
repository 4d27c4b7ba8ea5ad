#include "rdv/monitor.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace rdv {

void MonitorConfig::validate() const {
  if (alpha && !(*alpha >= 0.0)) throw std::invalid_argument("monitor alpha must be >= 0");
  if (delta && !(*delta >= 0.0)) throw std::invalid_argument("monitor delta must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("monitor epsilon must be positive");
  if (!(varrho > 0.0 && varrho < 1.0)) throw std::invalid_argument("monitor varrho must lie in (0, 1)");
  if (sample_count == 0) throw std::invalid_argument("monitor sample_count must be positive");
}

Eigen::VectorXd relative_coordinates(std::span<const VehicleState> states) {
  const auto r = static_cast<Eigen::Index>(states.size()) - 1;
  Eigen::VectorXd X(6 * std::max<Eigen::Index>(r, 0));
  for (Eigen::Index k = 0; k < r; ++k) {
    X.segment<3>(3 * k) = states[k + 1].x - states[0].x;
    X.segment<3>(3 * (r + k)) = states[k + 1].v - states[0].v;
  }
  return X;
}

RhoTheta rho_theta(const Eigen::Ref<const Eigen::VectorXd>& X, const Eigen::MatrixXd& P) {
  RhoTheta out;
  out.rho = X.size() == 0 ? 0.0 : std::sqrt(std::max(0.0, X.dot(P * X)));
  if (out.rho >= kRhoUndefined) out.theta = X / out.rho;
  return out;
}

Vec3d body_ideal_force(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X,
                       const Mat3d& R_i) {
  return R_i.transpose() * ideal_force(rcl, i, X);
}

namespace {

// Relative acceleration contributions a_k = (g_k^k . e3) R_k e3 for all k.
void thrust_accelerations(const RelativeClosedLoop& rcl, const Eigen::Ref<const Eigen::VectorXd>& X,
                          std::span<const Mat3d> R, std::vector<Vec3d>& acc) {
  acc.resize(rcl.vehicles);
  for (std::size_t k = 0; k < rcl.vehicles; ++k) {
    const Vec3d axis = R[k].col(2);
    acc[k] = ideal_force(rcl, k, X).dot(axis) * axis;
  }
}

Vec3d force_rate_from(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X,
                      const std::vector<Vec3d>& acc) {
  const Eigen::Index r = Eigen::Index(rcl.vehicles) - 1;
  const auto row = Eigen::Index(i);
  Vec3d h = Vec3d::Zero();
  for (Eigen::Index k = 0; k < r; ++k) {
    h += rcl.position_coeff(row, k) * X.segment<3>(3 * (r + k)) +
         rcl.velocity_coeff(row, k) * (acc[std::size_t(k + 1)] - acc[0]);
  }
  return h;
}

double planar_norm(const Vec3d& v) { return std::hypot(v.x(), v.y()); }  // |v x e3|

}  // namespace

Vec3d body_force_rate(const RelativeClosedLoop& rcl, std::size_t i, const Eigen::Ref<const Eigen::VectorXd>& X,
                      std::span<const Mat3d> R) {
  std::vector<Vec3d> acc;
  thrust_accelerations(rcl, X, R, acc);
  return R[i].transpose() * force_rate_from(rcl, i, X, acc);
}

MonitorSample eval_W(const Eigen::Ref<const Eigen::VectorXd>& X, std::span<const Mat3d> R, std::span<const Vec3d> w,
                     const RelativeClosedLoop& rcl, const Eigen::MatrixXd& P, const ControlGains& gains, double alpha,
                     std::span<const VehicleParams> params) {
  const std::size_t n = rcl.vehicles;
  if (R.size() != n || w.size() != n || params.size() != n || X.size() != rcl.dim()) {
    throw std::invalid_argument("eval_W: dimension mismatch");
  }
  MonitorSample s;
  s.alpha = alpha;
  const RhoTheta rt = rho_theta(X, P);
  s.rho = rt.rho;
  s.theta = rt.theta;
  s.V = X.size() == 0 ? 0.0 : X.dot(P * X);
  s.W_tran = std::sqrt(std::max(0.0, s.V)) + 0.5 * s.V;

  double thrust_sum = 0.0;
  double kinetic = 0.0;
  s.omega_err.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3d g = body_ideal_force(rcl, i, X, R[i]);
    thrust_sum += g.z();
    const Vec3d err = w[i] - reference_omega(g, gains.k1);
    kinetic += err.dot(params[i].inertia * err);
    s.omega_err[i] = err.norm();
  }
  s.W_rot = thrust_sum + 0.5 * kinetic;
  s.W = alpha * s.W_tran + s.W_rot;

  const auto r = Eigen::Index(n) - 1;
  for (Eigen::Index i = -1; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      Vec3d dx = X.segment<3>(3 * j);
      Vec3d dv = X.segment<3>(3 * (r + j));
      if (i >= 0) {
        dx -= X.segment<3>(3 * i);
        dv -= X.segment<3>(3 * (r + i));
      }
      s.gamma_dist = std::max(s.gamma_dist, std::sqrt(dx.squaredNorm() + dv.squaredNorm()));
    }
  }
  return s;
}

LyapunovMonitor::LyapunovMonitor(RelativeClosedLoop rcl, LyapunovForm form, ControlGains gains,
                                 std::vector<VehicleParams> params, double alpha)
    : rcl_(std::move(rcl)), form_(std::move(form)), gains_(gains), params_(std::move(params)), alpha_(alpha) {}

MonitorSample LyapunovMonitor::operator()(std::span<const VehicleState> states) const {
  std::vector<Mat3d> R(states.size());
  std::vector<Vec3d> w(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    R[i] = states[i].R;
    w[i] = states[i].w_body;
  }
  return eval_W(relative_coordinates(states), R, w, rcl_, form_.P, gains_, alpha_, params_);
}

ShellSampler::ShellSampler(const Eigen::MatrixXd& P, std::size_t vehicles, std::uint64_t seed)
    : vehicles_(vehicles), seed_(seed) {
  const Eigen::Index m = P.rows();
  if (m == 0) {
    shell_map_.resize(0, 0);
    return;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("ShellSampler: P must be positive definite");
  // theta = L^{-T} z gives theta^T P theta = z^T z.
  shell_map_ = llt.matrixU().solve(Eigen::MatrixXd::Identity(m, m));
}

Rng ShellSampler::batch_rng(std::size_t batch) const { return Rng(derive_seed(seed_, batch)); }

unsigned long long ShellSampler::draw_cost() const {
  return 2ull * static_cast<unsigned long long>(shell_map_.rows()) + 3ull * vehicles_;
}

void ShellSampler::fill(Rng& rng, Draw& d) const {
  const Eigen::Index m = shell_map_.rows();
  if (m > 0) {
    Eigen::VectorXd z(m);
    for (Eigen::Index k = 0; k < m; ++k) z(k) = rng.gaussian();
    z.normalize();
    d.theta.noalias() = shell_map_ * z;
  }
  for (auto& r : d.R) r = rng.rotation();
}

ShellSampler::Draw ShellSampler::draw(std::size_t index) const {
  Draw d;
  visit(index, index + 1, [&](std::size_t, const Draw& x) { d = x; });
  return d;
}

namespace {

void offer(SampledMax& best, double value, std::size_t index, std::size_t vehicle, const ShellSampler::Draw& d) {
  if (!best.found || value > best.value) {
    best.found = true;
    best.value = value;
    best.sample_index = index;
    best.vehicle = vehicle;
    best.theta = d.theta;
    best.R = d.R;
  }
}

void merge(SampledMax& into, const SampledMax& other) {
  if (!other.found) return;
  if (!into.found) {
    into = other;
    return;
  }
  if (other.value > into.value || (other.value == into.value && other.sample_index < into.sample_index)) into = other;
}

struct Accumulator {
  SampledMax alpha_star, M1, M3, M4, M5;
  bool with_m = false;

  void merge_from(const Accumulator& o) {
    merge(alpha_star, o.alpha_star);
    merge(M1, o.M1);
    merge(M3, o.M3);
    merge(M4, o.M4);
    merge(M5, o.M5);
  }
};

Accumulator sample_range(const RelativeClosedLoop& rcl, const LyapunovForm& form, std::span<const VehicleParams> params,
                         const ShellSampler& sampler, std::size_t begin, std::size_t end, bool with_m) {
  const std::size_t n = rcl.vehicles;
  const Eigen::Index r = Eigen::Index(n) - 1;
  Accumulator acc;
  acc.with_m = with_m;
  std::vector<Vec3d> g(n), gb(n), thrust_acc;
  Eigen::VectorXd grad;
  sampler.visit(begin, end, [&](std::size_t k, const ShellSampler::Draw& d) {
    double alpha_sum = 0.0, planar_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = ideal_force(rcl, i, d.theta);
      gb[i] = d.R[i].transpose() * g[i];
      alpha_sum += std::abs(gb[i].z());
      planar_sum += planar_norm(gb[i]);
    }
    offer(acc.alpha_star, alpha_sum, k, 0, d);
    if (!with_m) return;
    offer(acc.M5, planar_sum, k, 0, d);

    thrust_acc.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3d axis = d.R[i].col(2);
      thrust_acc[i] = g[i].dot(axis) * axis;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3d hb = d.R[i].transpose() * force_rate_from(rcl, i, d.theta, thrust_acc);
      offer(acc.M3, double(n) * std::abs(hb.z()), k, i, d);
      const double ki = planar_norm(gb[i]) + (params[i].inertia * hb.cross(e3<double>())).norm();
      offer(acc.M4, 0.5 * ki * ki, k, i, d);
    }

    if (r > 0) {
      grad.noalias() = 2.0 * (form.P * d.theta);
      for (Eigen::Index j = 0; j < r; ++j) {
        offer(acc.M1, 0.5 * double(r) * grad.segment<3>(3 * (r + j)).norm(), k, std::size_t(j + 1), d);
      }
    }
  });
  return acc;
}

Accumulator sample_parallel(const RelativeClosedLoop& rcl, const LyapunovForm& form,
                            std::span<const VehicleParams> params, std::size_t sample_count, std::uint64_t seed,
                            bool with_m) {
  const ShellSampler sampler(form.P, rcl.vehicles, seed);
  const std::size_t batches = (sample_count + ShellSampler::kBatch - 1) / ShellSampler::kBatch;
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), batches));
  std::vector<Accumulator> partial(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t b0 = batches * t / threads, b1 = batches * (t + 1) / threads;
    const std::size_t begin = b0 * ShellSampler::kBatch;
    const std::size_t end = std::min(sample_count, b1 * ShellSampler::kBatch);
    if (threads == 1) {
      partial[t] = sample_range(rcl, form, params, sampler, begin, end, with_m);
    } else {
      pool.emplace_back([&, t, begin, end] { partial[t] = sample_range(rcl, form, params, sampler, begin, end, with_m); });
    }
  }
  for (auto& th : pool) th.join();
  Accumulator total = partial[0];
  for (std::size_t t = 1; t < threads; ++t) total.merge_from(partial[t]);
  return total;
}

}  // namespace

SampledMax estimate_alpha_star(const RelativeClosedLoop& rcl, const LyapunovForm& form, std::size_t sample_count,
                               std::uint64_t seed) {
  if (sample_count == 0) throw std::invalid_argument("estimate_alpha_star: sample_count must be positive");
  return sample_parallel(rcl, form, {}, sample_count, seed, false).alpha_star;
}

ConstantsEstimate estimate_constants(const RelativeClosedLoop& rcl, const LyapunovForm& form,
                                     std::span<const VehicleParams> params, std::size_t sample_count,
                                     std::uint64_t seed) {
  if (sample_count == 0) throw std::invalid_argument("estimate_constants: sample_count must be positive");
  if (params.size() != rcl.vehicles) throw std::invalid_argument("estimate_constants: one parameter set per vehicle");
  const Accumulator acc = sample_parallel(rcl, form, params, sample_count, seed, true);
  ConstantsEstimate est;
  est.sample_count = sample_count;
  est.seed = seed;
  est.alpha_star = acc.alpha_star;
  est.M1 = acc.M1;
  est.M3 = acc.M3;
  est.M4 = acc.M4;
  est.M5 = acc.M5;
  if (form.P.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(form.P, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(form.Q, Eigen::EigenvaluesOnly);
    est.M2 = eq.eigenvalues().minCoeff() / (2.0 * ep.eigenvalues().maxCoeff());
  }
  return est;
}

double exact_M1(const LyapunovForm& form, std::size_t vehicles) {
  const Eigen::Index r = Eigen::Index(vehicles) - 1;
  if (r <= 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(form.P);
  const Eigen::MatrixXd shell = llt.matrixU().solve(Eigen::MatrixXd::Identity(form.P.rows(), form.P.cols()));
  const Eigen::MatrixXd grad = 2.0 * form.P * shell;
  double best = 0.0;
  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(grad.middleRows(3 * (r + j), 3));
    best = std::max(best, svd.singularValues()(0));
  }
  return 0.5 * double(r) * best;
}

std::size_t DecreaseReport::violations_after_first() const {
  std::size_t c = 0;
  for (const auto& v : violations) c += v.index > 0 ? 1 : 0;
  return c;
}

DecreaseReport decrease_test(std::span<const double> t, std::span<const MonitorSample> samples,
                             const MonitorConfig& config) {
  if (t.size() != samples.size()) throw std::invalid_argument("decrease_test: time and sample counts differ");
  DecreaseReport rep;
  if (samples.empty()) return rep;
  if (config.delta) {
    rep.delta = *config.delta;
  } else {
    const double t_end = t.back();
    const double window_start = t_end - kSteadyStateFraction * (t_end - t.front());
    double w_max = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (t[k] >= window_start) w_max = std::max(w_max, samples[k].W);
    }
    rep.delta = w_max;
    rep.delta_calibrated = true;
  }
  rep.intervals = samples.size() - 1;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const double w0 = samples[k].W;
    const double inc = samples[k + 1].W - w0;
    if (w0 >= rep.delta && inc > 1e-12 * std::max(1.0, std::abs(w0))) {
      rep.violations.push_back({k, t[k], t[k + 1], w0, inc});
    }
  }
  return rep;
}

}  // namespace rdv
