#include "sps_racing/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace sps_racing {
namespace {

constexpr double kLandingTol = 0.05;
constexpr double kSpeedTol = 0.1;

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }

// Root of a monotone-ish scalar function on [lo, hi]. Returns the endpoint
// with the smaller residual when the bracket has no sign change.
template <typename F>
double solve_bracketed(F&& f, double lo, double hi) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) return std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  std::uintmax_t max_iter = 200;
  auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

}  // namespace

double rolling_distance(const KinematicsConfig& cfg, double v, double steer) {
  const double lateral = cfg.tau_s * v * std::sin(steer);
  if (std::abs(lateral) > cfg.wheelbase) {
    throw DomainViolation("tau_s * v * |sin(steer)| exceeds the wheelbase (v=" +
                          std::to_string(v) + ", steer=" + std::to_string(steer) + ")");
  }
  // b - sqrt(b^2 - l^2) written in its cancellation-free form; it is exactly
  // zero for straight driving.
  const double b = cfg.wheelbase;
  const double shortfall = lateral * lateral / (b + std::sqrt(b * b - lateral * lateral));
  return cfg.tau_s * v * std::cos(steer) + shortfall;
}

double steer_bound(const KinematicsConfig& cfg, double v) {
  const double reach = cfg.tau_s * v;
  if (reach <= cfg.wheelbase) return cfg.steer_limit;
  return std::min(cfg.steer_limit, std::asin(cfg.wheelbase / reach) * (1.0 - 1e-9));
}

StepResult step(const KinematicsConfig& cfg, const VehicleState& s, const ControlInput& u) {
  const double travel = rolling_distance(cfg, s.v, u.steer);
  StepResult out;
  out.state.px = s.px + travel * std::cos(s.theta);
  out.state.py = s.py + travel * std::sin(s.theta);
  out.state.theta =
      wrap_angle(s.theta + std::asin(cfg.tau_s * s.v * std::sin(u.steer) / cfg.wheelbase));
  const double v = s.v + cfg.tau_s * u.accel;
  out.state.v = std::clamp(v, 0.0, cfg.v_max);
  out.speed_clamped = out.state.v != v;
  return out;
}

ControlInput inverse_step(const KinematicsConfig& cfg, const VehicleState& s, Point2 target,
                          double target_v, std::optional<double> target_heading) {
  const Point2 dir = unit_vector(s.theta);
  const Point2 rel = target - s.position();
  const double along = dot(rel, dir);
  const double lateral = cross(dir, rel);
  if (along < -kLandingTol) throw Unreachable("target lies behind the vehicle");
  if (std::abs(lateral) > kLandingTol) {
    throw Unreachable("target is off the heading ray by " + std::to_string(lateral) + " m");
  }

  const double bound = steer_bound(cfg, s.v);
  auto residual = [&](double steer) { return rolling_distance(cfg, s.v, steer) - along; };
  double magnitude = 0.0;
  if (std::abs(residual(0.0)) > 1e-12) magnitude = solve_bracketed(residual, 0.0, bound);
  if (std::abs(residual(magnitude)) > kLandingTol) {
    throw Unreachable("no steering magnitude lands on the target");
  }

  const double v_next = std::clamp(target_v, 0.0, cfg.v_max);
  if (std::abs(v_next - target_v) > kSpeedTol) throw Unreachable("target speed out of range");

  double steer = magnitude;
  if (target_heading && magnitude > 0.0) {
    auto heading_error = [&](double st) {
      const double theta =
          s.theta + std::asin(cfg.tau_s * s.v * std::sin(st) / cfg.wheelbase);
      return std::abs(wrap_angle(theta - *target_heading));
    };
    if (heading_error(-magnitude) < heading_error(magnitude)) steer = -magnitude;
  }
  return {(v_next - s.v) / cfg.tau_s, steer};
}

ControlInput aim_step(const KinematicsConfig& cfg, const VehicleState& s, Point2 aim,
                      double target_v) {
  const double v_next = std::clamp(target_v, 0.0, cfg.v_max);
  const double accel = (v_next - s.v) / cfg.tau_s;
  if (s.v <= 0.0) return {accel, 0.0};

  const Point2 dir = unit_vector(s.theta);
  const double bound = steer_bound(cfg, s.v);
  auto heading_error = [&](double steer) {
    const Point2 landed = s.position() + rolling_distance(cfg, s.v, steer) * dir;
    const double theta = s.theta + std::asin(cfg.tau_s * s.v * std::sin(steer) / cfg.wheelbase);
    return wrap_angle(theta - heading_of(aim - landed));
  };
  return {accel, solve_bracketed(heading_error, -bound, bound)};
}

}  // namespace sps_racing
