#pragma once

// Ego-vehicle kinematics, the two-point steering and headway-following
// difference laws of the ACT-R driver, and fine-grained simulation of
// compressed lane-change maneuvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adasynth/errors.hpp"

namespace adasynth {

struct VehicleState {
    double x = 0.0;    ///< longitudinal position (m)
    double y = 0.0;    ///< lateral position (m), positive to the left
    double v = 0.0;    ///< speed (m/s)
    double psi = 0.0;  ///< heading (rad)
    double rho = 0.0;  ///< steering angle (rad)
    double a = 0.0;    ///< acceleration (m/s^2)

    bool operator==(const VehicleState&) const = default;
};

struct ControlInput {
    double rho = 0.0;
    double a = 0.0;
};

/// Steering gains (k_far, k_near, k_I). ADAS gain sets use the same type and
/// are added component-wise to the human gains.
struct GainSet {
    double k_far = 0.0;
    double k_near = 0.0;
    double k_integral = 0.0;

    GainSet operator+(const GainSet& o) const {
        return {k_far + o.k_far, k_near + o.k_near, k_integral + o.k_integral};
    }
    bool operator==(const GainSet&) const = default;
};

struct DynamicsParams {
    double length = 5.0;          ///< vehicle length l (m)
    double dt_sim = 0.005;        ///< maneuver integration step (s)
    double dt = 0.5;              ///< ACT-R control/decision cycle (s)
    GainSet human_gains{15.0, 3.0, 5.0};
    double theta_max = 0.07;      ///< cap on the integral steering term (rad)
    bool symmetric_theta_cap = false;
    double k_car = 3.0;
    double k_follow = 1.0;
    double thw_follow = 2.0;      ///< target following headway (s)
    double thw_cap = 10.0;        ///< headway used when no lead exists (s)
    double a_min = -5.0;
    double a_max = 3.0;
    double lane_width = 3.6;
    double d_near = 10.0;
    double d_far = 100.0;
    double eps_y = 0.05;          ///< lateral settling tolerance (m)
    double eps_psi = 0.005;       ///< heading settling tolerance (rad)
    double t_maneuver_max = 15.0; ///< lane changes longer than this diverged (s)

    /// Throws ConfigError naming the first violated field.
    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("dynamics: ") + what);
        };
        const double all[] = {length, dt_sim, dt, human_gains.k_far, human_gains.k_near,
                              human_gains.k_integral, theta_max, k_car, k_follow,
                              thw_follow, thw_cap, a_min, a_max, lane_width, d_near,
                              d_far, eps_y, eps_psi, t_maneuver_max};
        for (double value : all) require(std::isfinite(value), "all parameters must be finite");
        require(length > 0.0, "length must be > 0");
        require(dt > 0.0, "dt must be > 0");
        require(dt_sim > 0.0 && dt_sim <= dt, "dt_sim must satisfy 0 < dt_sim <= dt");
        require(a_min < 0.0 && 0.0 < a_max, "a_min < 0 < a_max required");
        require(lane_width > 0.0, "lane_width must be > 0");
        require(d_near > 0.0 && d_far >= d_near, "0 < d_near <= d_far required");
        require(thw_cap > 0.0 && thw_follow >= 0.0, "thw_cap > 0 and thw_follow >= 0 required");
        require(eps_y > 0.0 && eps_psi > 0.0, "settling tolerances must be > 0");
        require(t_maneuver_max > 0.0, "t_maneuver_max must be > 0");
        require(theta_max > 0.0, "theta_max must be > 0");
    }
};

/// The other vehicle drives at constant speed in a fixed lane.
struct OtherVehicle {
    double x0 = 0.0;
    double v = 0.0;
    int lane = 0;

    double x_at(double t) const { return x0 + v * t; }
};

inline double lane_center(int lane, const DynamicsParams& p) {
    return (static_cast<double>(lane) + 0.5) * p.lane_width;
}

/// Lane whose center is nearest to a lateral position.
inline int lane_of(double y, const DynamicsParams& p) {
    return std::max(0, static_cast<int>(std::floor(y / p.lane_width)));
}

inline double clamp_acceleration(double a, const DynamicsParams& p) {
    return std::max(std::min(a, p.a_max), p.a_min);
}

/// One explicit step of the kinematic model.
inline VehicleState step_kinematics(const VehicleState& s, const ControlInput& u, double dt,
                                    const DynamicsParams& p) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidStateError("step_kinematics: dt must be > 0");
    for (double value : {s.x, s.y, s.v, s.psi, s.rho, s.a, u.rho, u.a}) {
        if (!std::isfinite(value)) throw InvalidStateError("step_kinematics: non-finite state or input");
    }
    VehicleState n = s;
    n.rho = u.rho;
    n.a = u.a;
    n.x = s.x + s.v * std::cos(s.psi + u.rho) * dt;
    n.y = s.y + s.v * std::sin(s.psi + u.rho) * dt;
    n.v = std::max(0.0, s.v + u.a * dt);
    n.psi = s.psi + (2.0 * s.v / p.length) * std::sin(u.rho) * dt;
    return n;
}

struct PerceptionAngles {
    double theta_near = 0.0;
    double theta_far = 0.0;
};

/// Visual angles of the near and far points of `target_lane`. The far point
/// snaps to a lead vehicle that sits in the target lane within d_far.
inline PerceptionAngles perception_angles(const VehicleState& s, int target_lane,
                                          const std::optional<VehicleState>& lead,
                                          const DynamicsParams& p) {
    const double y_target = lane_center(target_lane, p);
    PerceptionAngles out;
    out.theta_near = std::atan2(y_target - s.y, p.d_near) - s.psi;
    double far_distance = p.d_far;
    if (lead && std::abs(lead->y - y_target) < p.lane_width / 2.0) {
        const double ahead = lead->x - s.x;
        if (ahead > 0.0 && ahead < p.d_far) far_distance = std::max(ahead, p.d_near);
    }
    out.theta_far = std::atan2(y_target - s.y, far_distance) - s.psi;
    return out;
}

inline double steering_delta(double dtheta_near, double dtheta_far, double theta_near,
                             const GainSet& gains, double dt, const DynamicsParams& p) {
    double capped = std::min(theta_near, p.theta_max);
    if (p.symmetric_theta_cap) capped = std::max(capped, -p.theta_max);
    return gains.k_far * dtheta_far + gains.k_near * dtheta_near + gains.k_integral * capped * dt;
}

inline double accel_delta(double dthw, double thw, double dt, const DynamicsParams& p) {
    return p.k_car * dthw + p.k_follow * (thw - p.thw_follow) * dt;
}

/// Time headway to `other` when it is ahead in the ego's lane, else the cap.
inline double time_headway(const VehicleState& ego, const VehicleState& other,
                           const DynamicsParams& p) {
    if (lane_of(ego.y, p) != lane_of(other.y, p)) return p.thw_cap;
    if (other.x <= ego.x) return p.thw_cap;
    if (ego.v < 1e-9) return p.thw_cap;
    const double gap = other.x - ego.x - p.length;
    return std::clamp(gap / ego.v, 0.0, p.thw_cap);
}

inline VehicleState other_state_at(const OtherVehicle& other, double t, const DynamicsParams& p) {
    VehicleState s;
    s.x = other.x_at(t);
    s.y = lane_center(other.lane, p);
    s.v = other.v;
    return s;
}

/// Same lane band and overlapping bumpers.
inline bool collides(const VehicleState& ego, const VehicleState& other, const DynamicsParams& p) {
    return std::abs(ego.y - other.y) < p.lane_width / 2.0 &&
           std::abs(ego.x - other.x) < p.length;
}

struct LaneFollowResult {
    VehicleState state;
    /// The driver's own acceleration after the cycle. Interventions act on
    /// the applied acceleration only, so this is what the next cycle builds on.
    double human_accel = 0.0;
    bool collided = false;
};

/// One ACT-R cycle of lane keeping starting at time t: the following law updates the
/// human acceleration, the ADAS increment is added and clamped, and the
/// kinematics integrate with zero steering. With `forced_accel` the applied
/// acceleration is replaced by a constant value for this cycle
/// (deceleration decision).
inline LaneFollowResult simulate_lane_follow(const VehicleState& s, double t,
                                             const std::optional<OtherVehicle>& other,
                                             const DynamicsParams& p, double a_extra,
                                             std::optional<double> forced_accel = std::nullopt) {
    double thw = p.thw_cap;
    double thw_prev = p.thw_cap;
    if (other) {
        thw = time_headway(s, other_state_at(*other, t, p), p);
        VehicleState prev = s;
        prev.v = std::max(0.0, s.v - s.a * p.dt);
        prev.x = s.x - prev.v * p.dt;
        thw_prev = time_headway(prev, other_state_at(*other, t - p.dt, p), p);
    }
    const double human = clamp_acceleration(s.a + accel_delta(thw - thw_prev, thw, p.dt, p), p);
    const double a_human = forced_accel ? *forced_accel : human;
    const double a = clamp_acceleration(a_human + a_extra, p);
    VehicleState start = s;
    start.psi = 0.0;
    LaneFollowResult out;
    out.human_accel = human;
    out.state = step_kinematics(start, ControlInput{0.0, a}, p.dt, p);
    out.state.y = s.y;
    out.state.psi = 0.0;
    if (other) {
        const VehicleState o0 = other_state_at(*other, t, p);
        const VehicleState o1 = other_state_at(*other, t + p.dt, p);
        const bool same_lane = std::abs(s.y - o0.y) < p.lane_width / 2.0;
        const bool passed_through =
            same_lane && ((s.x - o0.x) * (out.state.x - o1.x) < 0.0);
        out.collided = collides(out.state, o1, p) || passed_through;
    }
    return out;
}

struct ManeuverOutcome {
    VehicleState end_state;
    double duration = 0.0;
    bool collided = false;
    bool diverged = false;
    double event_time = 0.0;              ///< collision time, if collided
    std::set<std::string> labels_seen;
    /// Ego x at every whole ACT-R cycle inside the maneuver (index k = k*dt).
    std::vector<double> cycle_x;

    bool operator==(const ManeuverOutcome&) const = default;
};

/// Records one fine integration sample (time offset, state).
using ManeuverObserver = std::function<void(double, const VehicleState&)>;
/// Adds propositions that hold for a fine sample to `labels`.
using Labeler = std::function<void(const VehicleState&, double, std::set<std::string>&)>;

/// Integrates a lane change from `s` (centered in its lane, time t) toward
/// `target_lane` with the summed steering gains. The maneuver finishes when
/// the ego is laterally settled; the end state snaps to the lane center.
/// A collision stops the integration. Failure to settle within
/// t_maneuver_max yields `diverged`, which callers treat as a crash.
inline ManeuverOutcome simulate_lane_change(const VehicleState& s, double t, int target_lane,
                                            const GainSet& gains,
                                            const std::optional<OtherVehicle>& other,
                                            const DynamicsParams& p,
                                            const Labeler& labeler = {},
                                            const ManeuverObserver& observer = {}) {
    ManeuverOutcome out;
    const int source_lane = lane_of(s.y, p);
    const double y_target = lane_center(target_lane, p);

    VehicleState ego = s;
    ego.psi = 0.0;
    ego.rho = 0.0;
    auto lead_at = [&](double time) -> std::optional<VehicleState> {
        if (!other) return std::nullopt;
        return other_state_at(*other, time, p);
    };

    // Angles of the reference points being followed before the switch.
    PerceptionAngles previous = perception_angles(ego, source_lane, lead_at(t), p);
    double thw_previous = other ? time_headway(ego, *lead_at(t), p) : p.thw_cap;

    const auto max_steps = static_cast<long>(std::ceil(p.t_maneuver_max / p.dt_sim));
    const auto steps_per_cycle = std::max(1L, std::lround(p.dt / p.dt_sim));
    out.cycle_x.push_back(ego.x);
    if (observer) observer(0.0, ego);

    for (long step = 1; step <= max_steps; ++step) {
        const double now = t + static_cast<double>(step - 1) * p.dt_sim;
        const auto lead = lead_at(now);
        const PerceptionAngles current = perception_angles(ego, target_lane, lead, p);
        const double drho = steering_delta(current.theta_near - previous.theta_near,
                                           current.theta_far - previous.theta_far,
                                           current.theta_near, gains, p.dt_sim, p);
        previous = current;

        const double thw = lead ? time_headway(ego, *lead, p) : p.thw_cap;
        const double a = clamp_acceleration(
            ego.a + accel_delta(thw - thw_previous, thw, p.dt_sim, p), p);
        thw_previous = thw;

        ego = step_kinematics(ego, ControlInput{ego.rho + drho, a}, p.dt_sim, p);
        const double elapsed = static_cast<double>(step) * p.dt_sim;
        if (step % steps_per_cycle == 0) out.cycle_x.push_back(ego.x);
        if (observer) observer(elapsed, ego);
        if (labeler) labeler(ego, t + elapsed, out.labels_seen);

        if (other && collides(ego, other_state_at(*other, t + elapsed, p), p)) {
            out.collided = true;
            out.event_time = elapsed;
            out.duration = elapsed;
            out.end_state = ego;
            out.labels_seen.insert("crash");
            return out;
        }
        if (std::abs(ego.y - y_target) < p.eps_y && std::abs(ego.psi) < p.eps_psi) {
            out.duration = elapsed;
            out.end_state = ego;
            out.end_state.y = y_target;
            out.end_state.psi = 0.0;
            out.end_state.rho = 0.0;
            return out;
        }
    }
    out.diverged = true;
    out.duration = static_cast<double>(max_steps) * p.dt_sim;
    out.event_time = out.duration;
    out.end_state = ego;
    out.labels_seen.insert("crash");
    return out;
}

/// Like simulate_lane_change, but reports divergence as an exception.
inline ManeuverOutcome simulate_lane_change_checked(const VehicleState& s, double t,
                                                    int target_lane, const GainSet& gains,
                                                    const std::optional<OtherVehicle>& other,
                                                    const DynamicsParams& p) {
    ManeuverOutcome out = simulate_lane_change(s, t, target_lane, gains, other, p);
    if (out.diverged) {
        throw ManeuverDivergenceError("lane change did not settle within " +
                                      std::to_string(p.t_maneuver_max) + " s");
    }
    return out;
}

}  // namespace adasynth
