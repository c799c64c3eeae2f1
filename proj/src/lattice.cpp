#include "sps_racing/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sps_racing {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSpeedBoundTol = 1e-9;

}  // namespace

void LowGameConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  if (horizon < 2) throw ConfigError("horizon must be at least 2 steps");
  positive(tau_s, "tau_s");
  positive(w1, "w1");
  positive(gamma_max, "gamma_max");
  positive(d_safe, "d_safe");
  positive(d_res, "d_res");
  positive(e_res, "e_res");
  positive(tracking_tolerance, "tracking_tolerance");
  if (follower_delay < 0) throw ConfigError("follower_delay must be non-negative");
  if (ibr_max_iters < 1) throw ConfigError("ibr_max_iters must be at least 1");
  if (collision_margin < 0.0 || ibr_tolerance < 0.0) {
    throw ConfigError("collision_margin and ibr_tolerance must be non-negative");
  }
  if (gamma_max >= std::numbers::pi / 2) throw ConfigError("gamma_max must be below pi/2");
}

std::vector<Point2> LatticePath::points() const {
  std::vector<Point2> out;
  out.reserve(waypoints.size());
  for (const Waypoint& w : waypoints) out.push_back(w.point);
  return out;
}

bool LatticePath::same_states(const LatticePath& other) const {
  if (waypoints.size() != other.waypoints.size()) return false;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (!(waypoints[i].state == other.waypoints[i].state)) return false;
  }
  return true;
}

Lattice::Lattice(const Track& track, const LowGameConfig& cfg, const VehicleState& start,
                 double v_max)
    : track_(&track), cfg_(cfg), v_max_(v_max) {
  cfg_.validate();
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  if (start.v < 0.0 || start.v > v_max + 1e-9) {
    throw ConfigError("start speed outside [0, v_max]");
  }

  const FrenetPose start_f = track.to_frenet(start.position()).pose;
  if (std::abs(start_f.e) > 0.5 * track.track_width()) {
    throw Infeasible("start state is off the track");
  }
  start_ = Waypoint{{0, -1, -1}, start_f, start.position()};

  // The position after the first step is fixed by the initial speed and
  // heading; only later waypoints are decision variables.
  const Point2 p1 = start.position() + (cfg_.tau_s * start.v) * unit_vector(start.theta);
  first_ = Waypoint{{1, -1, -1}, track.to_frenet(p1).pose, p1};
  anchor_station_ = first_.frenet.d;

  const double e_limit = track.lateral_limit();
  const int half = static_cast<int>(std::floor(e_limit / cfg_.e_res + 1e-9));
  n_lat_ = 2 * half + 1;

  const double shrink = 1.0 - track.max_abs_curvature() * e_limit;
  if (shrink <= 0.0) throw ConfigError("track curvature too tight for the lateral range");
  max_inc_ = static_cast<int>(std::ceil(v_max_ * cfg_.tau_s / (cfg_.d_res * shrink) - 1e-9));
  max_k_ = (cfg_.horizon - 1) * max_inc_;

  grid_points_.assign(static_cast<std::size_t>(max_k_ + 1) * n_lat_, Point2{});
  grid_valid_.assign(grid_points_.size(), 0);
  for (int k = 0; k <= max_k_; ++k) {
    const double d = station_value(k);
    if (d > track.length()) break;
    for (int j = 0; j < n_lat_; ++j) {
      grid_points_[k * n_lat_ + j] = track.from_frenet({d, lateral_value(j)}).first;
      grid_valid_[k * n_lat_ + j] = 1;
    }
  }

  lat_window_ = std::min(
      n_lat_ - 1,
      static_cast<int>(std::ceil(v_max_ * cfg_.tau_s * std::tan(cfg_.gamma_max) * 1.25 /
                                 cfg_.e_res)) + 1);
  build_tables();
}

double Lattice::lateral_value(int j) const { return (j - n_lat_ / 2) * cfg_.e_res; }

std::optional<Point2> Lattice::grid_point(int k, int j) const {
  if (k < 0 || k > max_k_ || j < 0 || j >= n_lat_) return std::nullopt;
  const std::size_t idx = static_cast<std::size_t>(k) * n_lat_ + j;
  if (!grid_valid_[idx]) return std::nullopt;
  return grid_points_[idx];
}

std::optional<double> Lattice::transition_cost(Point2 from, Point2 to) const {
  const double dist = distance(from, to);
  if (dist > v_max_ * cfg_.tau_s + kSpeedBoundTol) return std::nullopt;
  if (dist > 0.0) {
    const Point2 mid = 0.5 * (from + to);
    double tangent = 0.0;
    try {
      tangent = track_->tangent_angle(track_->to_frenet(mid).pose.d);
    } catch (const TrackError&) {
      return std::nullopt;
    }
    if (std::abs(wrap_angle(heading_of(to - from) - tangent)) > cfg_.gamma_max) {
      return std::nullopt;
    }
  }
  const double speed_gap = dist / cfg_.tau_s - v_max_;
  return speed_gap * speed_gap;
}

void Lattice::build_tables() {
  const int sources = (cfg_.horizon - 2) * max_inc_ + 1;
  for (;;) {
    const int width = 2 * lat_window_ + 1;
    step_cost_.assign(static_cast<std::size_t>(sources) * (max_inc_ + 1) * n_lat_ * width, kNaN);
    bool boundary_used = false;
    for (int k = 0; k < sources; ++k) {
      for (int dk = 0; dk <= max_inc_; ++dk) {
        for (int j = 0; j < n_lat_; ++j) {
          const auto from = grid_point(k, j);
          if (!from) continue;
          for (int dj = -lat_window_; dj <= lat_window_; ++dj) {
            const auto to = grid_point(k + dk, j + dj);
            if (!to) continue;
            const auto c = transition_cost(*from, *to);
            if (!c) continue;
            const std::size_t idx =
                ((static_cast<std::size_t>(k) * (max_inc_ + 1) + dk) * n_lat_ + j) * width +
                (dj + lat_window_);
            step_cost_[idx] = *c;
            if (std::abs(dj) == lat_window_) boundary_used = true;
          }
        }
      }
    }
    // A feasible transition on the window edge means the window may be
    // clipping reachable lateral moves.
    if (!boundary_used || lat_window_ >= n_lat_ - 1) break;
    lat_window_ = std::min(n_lat_ - 1, lat_window_ + 2);
  }

  first_cost_.assign(static_cast<std::size_t>(max_inc_ + 1) * n_lat_, kNaN);
  for (int k = 0; k <= max_inc_; ++k) {
    for (int j = 0; j < n_lat_; ++j) {
      const auto to = grid_point(k, j);
      if (!to) continue;
      if (const auto c = transition_cost(first_.point, *to)) first_cost_[k * n_lat_ + j] = *c;
    }
  }
}

double Lattice::table_cost(int k, int dk, int j, int dj) const {
  const int width = 2 * lat_window_ + 1;
  const std::size_t idx =
      ((static_cast<std::size_t>(k) * (max_inc_ + 1) + dk) * n_lat_ + j) * width +
      (dj + lat_window_);
  return step_cost_[idx];
}

Waypoint Lattice::make_waypoint(int tau, int k, int j) const {
  const std::size_t idx = static_cast<std::size_t>(k) * n_lat_ + j;
  return Waypoint{{tau, k, j}, {station_value(k), lateral_value(j)}, grid_points_[idx]};
}

bool Lattice::collision_free(Point2 p, int tau, std::span<const Point2> opponent) const {
  if (opponent.empty()) return true;
  return distance(p, opponent[tau]) > cfg_.d_safe + cfg_.collision_margin;
}

LatticePath Lattice::best_response(const LateralProfile& profile,
                                   std::span<const Point2> opponent) const {
  const int T = cfg_.horizon;
  if (static_cast<int>(profile.size()) != T) throw ConfigError("lateral profile length != T");
  if (!opponent.empty() && static_cast<int>(opponent.size()) != T + 1) {
    throw ConfigError("opponent trajectory must have T+1 points");
  }
  if (!collision_free(first_.point, 1, opponent)) {
    throw Infeasible("first step collides with the opponent");
  }

  const std::size_t grid = grid_points_.size();
  auto lateral_term = [&](double e, int tau) {
    const double gap = e - profile[tau];
    return cfg_.w1 * gap * gap;
  };
  const double first_gap = distance(start_.point, first_.point) / cfg_.tau_s - v_max_;
  const double value1 = 0.0 + lateral_term(start_.frenet.e, 0) + first_gap * first_gap;

  // value[tau][node], parent[tau][node]; stages 0 and 1 are fixed.
  std::vector<std::vector<double>> value(T + 1, std::vector<double>(grid, kInf));
  std::vector<std::vector<int>> parent(T + 1, std::vector<int>(grid, -1));
  std::vector<char> free_mask(grid);

  auto fill_mask = [&](int tau) {
    for (std::size_t n = 0; n < grid; ++n) {
      free_mask[n] = grid_valid_[n] && collision_free(grid_points_[n], tau, opponent);
    }
  };

  fill_mask(2);
  {
    const double base = value1 + lateral_term(first_.frenet.e, 1);
    for (int k = 0; k <= max_inc_; ++k) {
      for (int j = 0; j < n_lat_; ++j) {
        const std::size_t n = static_cast<std::size_t>(k) * n_lat_ + j;
        const double c = first_cost_[k * n_lat_ + j];
        if (!free_mask[n] || std::isnan(c)) continue;
        value[2][n] = base + c;
      }
    }
  }

  for (int tau = 2; tau < T; ++tau) {
    fill_mask(tau + 1);
    const int k_max = std::min((tau - 1) * max_inc_, max_k_);
    std::vector<double>& next = value[tau + 1];
    std::vector<int>& next_parent = parent[tau + 1];
    for (int k = 0; k <= k_max; ++k) {
      for (int j = 0; j < n_lat_; ++j) {
        const std::size_t n = static_cast<std::size_t>(k) * n_lat_ + j;
        const double v = value[tau][n];
        if (v == kInf) continue;
        const double base = v + lateral_term(lateral_value(j), tau);
        const double key = std::abs(lateral_value(j) - profile[tau]);
        for (int dk = 0; dk <= max_inc_ && k + dk <= max_k_; ++dk) {
          const int j_lo = std::max(0, j - lat_window_);
          const int j_hi = std::min(n_lat_ - 1, j + lat_window_);
          for (int j2 = j_lo; j2 <= j_hi; ++j2) {
            const std::size_t m = static_cast<std::size_t>(k + dk) * n_lat_ + j2;
            if (!free_mask[m]) continue;
            const double c = table_cost(k, dk, j, j2 - j);
            if (std::isnan(c)) continue;
            const double cand = base + c;
            double& best = next[m];
            if (cand < best) {
              best = cand;
              next_parent[m] = static_cast<int>(n);
            } else if (cand == best) {
              // Tie: prefer the predecessor closer to its lateral target,
              // then the smaller station index.
              const int p = next_parent[m];
              const int pk = p / n_lat_;
              const double pkey = std::abs(lateral_value(p % n_lat_) - profile[tau]);
              if (key < pkey || (key == pkey && k < pk)) next_parent[m] = static_cast<int>(n);
            }
          }
        }
      }
    }
  }

  int best_node = -1;
  double best_value = kInf;
  double best_key = kInf;
  for (std::size_t n = 0; n < grid; ++n) {
    const double v = value[T][n];
    if (v == kInf) continue;
    const double key = std::abs(lateral_value(static_cast<int>(n % n_lat_)) - profile[T - 1]);
    if (v < best_value || (v == best_value && key < best_key)) {
      best_value = v;
      best_key = key;
      best_node = static_cast<int>(n);
    }
  }
  if (best_node < 0) throw Infeasible("no collision-free lattice path");

  LatticePath path;
  path.cost = best_value;
  path.waypoints.resize(T + 1);
  int node = best_node;
  for (int tau = T; tau >= 2; --tau) {
    path.waypoints[tau] = make_waypoint(tau, node / n_lat_, node % n_lat_);
    node = parent[tau][node];
  }
  path.waypoints[0] = start_;
  path.waypoints[1] = first_;
  return path;
}

LatticePath Lattice::braking_path(const LateralProfile& profile,
                                  std::span<const Point2> opponent) const {
  const int T = cfg_.horizon;
  LatticePath path;
  path.fallback = true;
  path.waypoints.push_back(start_);
  path.waypoints.push_back(first_);
  const int half = n_lat_ / 2;
  const int j = std::clamp(static_cast<int>(std::lround(first_.frenet.e / cfg_.e_res)) + half, 0,
                           n_lat_ - 1);
  int k = -1;  // -1: still at the off-grid first step
  for (int tau = 1; tau < T; ++tau) {
    const Point2 from = k < 0 ? first_.point : grid_points_[k * n_lat_ + j];
    const int base_k = std::max(k, 0);
    int chosen = -1;
    int collision_free_choice = -1;
    for (int dk = max_inc_; dk >= 0; --dk) {
      const auto to = grid_point(base_k + dk, j);
      if (!to || !collision_free(*to, tau + 1, opponent)) continue;
      if (collision_free_choice < 0) collision_free_choice = base_k + dk;
      if (transition_cost(from, *to)) {
        chosen = base_k + dk;
        break;
      }
    }
    if (chosen < 0) chosen = collision_free_choice >= 0 ? collision_free_choice : base_k;
    k = chosen;
    path.waypoints.push_back(make_waypoint(tau + 1, k, j));
  }
  path.cost = path_objective(path.waypoints, profile, opponent).value_or(kInf);
  return path;
}

std::optional<double> Lattice::path_objective(const std::vector<Waypoint>& path,
                                              const LateralProfile& profile,
                                              std::span<const Point2> opponent) const {
  const int T = cfg_.horizon;
  if (static_cast<int>(path.size()) != T + 1) return std::nullopt;
  const double first_gap = distance(path[0].point, path[1].point) / cfg_.tau_s - v_max_;
  double total = 0.0;
  {
    const double gap = path[0].frenet.e - profile[0];
    total = total + cfg_.w1 * gap * gap + first_gap * first_gap;
  }
  if (!collision_free(path[1].point, 1, opponent)) return std::nullopt;
  for (int tau = 1; tau < T; ++tau) {
    const auto c = transition_cost(path[tau].point, path[tau + 1].point);
    if (!c || !collision_free(path[tau + 1].point, tau + 1, opponent)) return std::nullopt;
    const double gap = path[tau].frenet.e - profile[tau];
    total = total + cfg_.w1 * gap * gap + *c;
  }
  return total;
}

LatticePath best_response_dp(const Track& track, const LowGameConfig& cfg,
                             const LateralProfile& profile,
                             const std::vector<FrenetPose>& opponent, const VehicleState& start,
                             double v_max) {
  const Lattice lattice(track, cfg, start, v_max);
  std::vector<Point2> opp;
  opp.reserve(opponent.size());
  for (const FrenetPose& f : opponent) opp.push_back(track.from_frenet(f).first);
  return lattice.best_response(profile, opp);
}

}  // namespace sps_racing
