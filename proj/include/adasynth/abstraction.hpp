#pragma once

// Finite abstraction of the driver/vehicle loop: grids, the deterministic
// control table, and breadth-first construction of the human-only Markov
// chain and the ADAS decision process.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "adasynth/driver.hpp"
#include "adasynth/dynamics.hpp"
#include "adasynth/errors.hpp"
#include "adasynth/model.hpp"
#include "adasynth/pctl/formula.hpp"

namespace adasynth {

struct Scenario {
    int lambda0 = 0;     ///< initial ego lane
    double x0 = 0.0;     ///< initial ego position (m)
    double v0 = 25.0;    ///< initial ego speed (m/s)
    double x0_ov = 50.0; ///< initial position of the other vehicle (m)
    double v0_ov = 15.0; ///< constant speed of the other vehicle (m/s)
    double x_max = 500.0;

    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("scenario: ") + what);
        };
        require(lambda0 == 0 || lambda0 == 1, "lambda0 must be 0 or 1");
        require(std::isfinite(x0) && x0 >= 0.0, "x0 must be >= 0");
        require(std::isfinite(v0) && v0 >= 0.0, "v0 must be >= 0");
        require(std::isfinite(v0_ov) && v0_ov >= 0.0, "v0_ov must be >= 0");
        require(std::isfinite(x0_ov) && x0 < x0_ov, "x0 must be < x0_ov");
        require(std::isfinite(x_max) && x_max > x0_ov, "x_max must be > x0_ov");
    }

    bool operator==(const Scenario&) const = default;
};

struct GridParams {
    double x_step = 2.5;
    double v_step = 0.5;
    double a_step = 0.5;
    double v_max = 40.0;
    std::size_t state_cap = 2'000'000;
    double horizon_slack = 30.0;  ///< seconds added to the traversal time
    double speed_floor = 1.0;     ///< lower bound on the speed used for the horizon
    /// Lattice for the other vehicle's offset at the start of a lane change;
    /// maneuvers are simulated and cached per lattice point. 0 keeps it exact.
    double offset_step = 0.5;

    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("grid: ") + what);
        };
        require(std::isfinite(x_step) && x_step > 0.0, "x_step must be > 0");
        require(std::isfinite(v_step) && v_step > 0.0, "v_step must be > 0");
        require(std::isfinite(a_step) && a_step > 0.0, "a_step must be > 0");
        require(std::isfinite(v_max) && v_max > 0.0, "v_max must be > 0");
        require(state_cap > 0, "state_cap must be > 0");
        require(std::isfinite(horizon_slack) && horizon_slack >= 0.0, "horizon_slack must be >= 0");
        require(std::isfinite(speed_floor) && speed_floor > 0.0, "speed_floor must be > 0");
        require(std::isfinite(offset_step) && offset_step >= 0.0, "offset_step must be >= 0");
    }
};

/// Every parameter of the human model and its abstraction.
struct ModelParams {
    DynamicsParams dynamics;
    DecisionParams decision;
    GridParams grid;

    void validate() const {
        dynamics.validate();
        decision.validate();
        grid.validate();
    }
};

struct AdasConfig {
    double gamma = 0.5;  ///< responsiveness to suggestions
    double a_d = -2.0;   ///< deceleration applied after a deceleration decision
    std::vector<double> accel_increments{-1.0, 0.0, 1.0};
    std::vector<GainSet> gain_sets{{0.0, 0.0, 0.0}, {2.0, 0.0, 1.0}, {-0.5, 0.0, 2.0}};
    bool passive_enabled = true;
    bool active_accel_enabled = true;
    bool active_steer_enabled = true;
    /// Interventions are offered only while the other vehicle is within this
    /// longitudinal distance of the ego; elsewhere the driver acts alone.
    double intervention_range = 50.0;

    void validate(const DynamicsParams& dyn) const {
        auto require = [](bool ok, const std::string& what) {
            if (!ok) throw ConfigError("adas: " + what);
        };
        require(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0,1]");
        require(std::isfinite(a_d) && a_d >= dyn.a_min && a_d <= dyn.a_max,
                "a_d must lie in [a_min, a_max]");
        require(!std::isnan(intervention_range) && intervention_range > 0.0,
                "intervention_range must be > 0");
        require(!accel_increments.empty(), "accel_increments must not be empty");
        for (double inc : accel_increments) {
            require(std::isfinite(inc) && dyn.a_min < inc && inc < dyn.a_max,
                    "accel_increments must lie strictly inside (a_min, a_max)");
        }
        require(!gain_sets.empty(), "gain_sets must not be empty");
        for (const auto& g : gain_sets) {
            require(std::isfinite(g.k_far) && std::isfinite(g.k_near) && std::isfinite(g.k_integral),
                    "gain_sets entries must be finite");
        }
        if (active_accel_enabled) {
            require(std::find(accel_increments.begin(), accel_increments.end(), 0.0) !=
                        accel_increments.end(),
                    "accel_increments must contain 0");
        }
        if (active_steer_enabled) {
            require(std::find(gain_sets.begin(), gain_sets.end(), GainSet{}) != gain_sets.end(),
                    "gain_sets must contain (0,0,0)");
        }
    }
};

// ---------------------------------------------------------------------------
// Abstract states

enum class Phase : std::uint8_t { Control = 1, Decision = 2 };
enum class Pending : std::uint8_t { None, LaneChange, Decelerate };
enum class Sink : std::uint8_t { None, Crash, Timeout };

/// Discretized tuple (mu, x, lambda, a, v, t) plus the decided intent.
/// Gain index 0 is the unassisted human controller; g > 0 selects
/// AdasConfig::gain_sets[g - 1].
struct AbstractState {
    Phase mu = Phase::Control;
    int x = 0;
    int lambda = 0;
    int a = 0;
    int v = 0;
    int t = 0;
    Pending pending = Pending::None;
    int gain = 0;
    Sink sink = Sink::None;

    bool operator==(const AbstractState&) const = default;

    static AbstractState crash() {
        AbstractState s;
        s.mu = Phase::Decision;
        s.sink = Sink::Crash;
        return s;
    }
    static AbstractState timeout() {
        AbstractState s;
        s.mu = Phase::Decision;
        s.sink = Sink::Timeout;
        return s;
    }
};

struct AbstractStateHash {
    std::size_t operator()(const AbstractState& s) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0x100000001b3ULL;
        };
        mix(static_cast<std::uint64_t>(s.mu));
        mix(static_cast<std::uint32_t>(s.x));
        mix(static_cast<std::uint32_t>(s.lambda));
        mix(static_cast<std::uint32_t>(s.a));
        mix(static_cast<std::uint32_t>(s.v));
        mix(static_cast<std::uint32_t>(s.t));
        mix(static_cast<std::uint64_t>(s.pending));
        mix(static_cast<std::uint32_t>(s.gain));
        mix(static_cast<std::uint64_t>(s.sink));
        return static_cast<std::size_t>(h);
    }
};

inline const char* to_string(Pending p) {
    switch (p) {
        case Pending::None: return "none";
        case Pending::LaneChange: return "lane_change";
        case Pending::Decelerate: return "decelerate";
    }
    return "?";
}

inline const char* to_string(Sink s) {
    switch (s) {
        case Sink::None: return "none";
        case Sink::Crash: return "crash";
        case Sink::Timeout: return "timeout";
    }
    return "?";
}

/// Round to the nearest multiple of `step`, ties toward zero.
inline long quantize(double value, double step) {
    const double r = value / step;
    const double whole = std::trunc(r);
    if (std::abs(r - whole) == 0.5) return static_cast<long>(whole);
    return std::lround(r);
}

/// Index/value conversions for one scenario.
class Grid {
public:
    Grid(const Scenario& scenario, const ModelParams& params)
        : x_step_(params.grid.x_step),
          v_step_(params.grid.v_step),
          a_step_(params.grid.a_step),
          dt_(params.dynamics.dt) {
        x_goal_ = static_cast<int>(quantize(scenario.x_max, x_step_));
        if (static_cast<double>(x_goal_) * x_step_ < scenario.x_max - 1e-9) ++x_goal_;
        v_top_ = static_cast<int>(std::floor(params.grid.v_max / v_step_ + 1e-9));
        a_low_ = static_cast<int>(std::ceil(params.dynamics.a_min / a_step_ - 1e-9));
        a_high_ = static_cast<int>(std::floor(params.dynamics.a_max / a_step_ + 1e-9));
        const double slowest =
            std::max(std::min(scenario.v0, scenario.v0_ov), params.grid.speed_floor);
        horizon_ = scenario.x_max / slowest + params.grid.horizon_slack;
        t_top_ = static_cast<int>(std::floor(horizon_ / dt_ + 1e-9));
    }

    double x_of(int i) const { return static_cast<double>(i) * x_step_; }
    double v_of(int i) const { return static_cast<double>(i) * v_step_; }
    double a_of(int i) const { return static_cast<double>(i) * a_step_; }
    double t_of(int i) const { return static_cast<double>(i) * dt_; }

    /// Non-goal positions never occupy the goal cell.
    int x_index(double x) const {
        return static_cast<int>(std::clamp(quantize(x, x_step_), 0L, static_cast<long>(x_goal_) - 1));
    }
    int v_index(double v) const {
        return static_cast<int>(std::clamp(quantize(v, v_step_), 0L, static_cast<long>(v_top_)));
    }
    int a_index(double a) const {
        return static_cast<int>(
            std::clamp(quantize(a, a_step_), static_cast<long>(a_low_), static_cast<long>(a_high_)));
    }

    int x_goal() const { return x_goal_; }
    int v_top() const { return v_top_; }
    int t_top() const { return t_top_; }
    double horizon() const { return horizon_; }
    double dt() const { return dt_; }

    bool is_goal(const AbstractState& s) const { return s.sink == Sink::None && s.x == x_goal_; }
    bool is_absorbing(const AbstractState& s) const { return s.sink != Sink::None || is_goal(s); }

private:
    double x_step_, v_step_, a_step_, dt_;
    int x_goal_ = 0, v_top_ = 0, a_low_ = 0, a_high_ = 0, t_top_ = 0;
    double horizon_ = 0.0;
};

// ---------------------------------------------------------------------------
// Control table

/// Cache key of a compressed lane change in coordinates relative to the ego.
struct ManeuverKey {
    int v = 0;
    int a = 0;
    int lane = 0;
    int gain = 0;
    double offset = 0.0;  ///< other-vehicle position minus ego position at the start

    auto operator<=>(const ManeuverKey&) const = default;
};

/// Observer of continuous samples produced while stepping (absolute time).
using TraceObserver = std::function<void(double, const VehicleState&)>;

/// Deterministic successor function of control-phase states, shared by the
/// chain builder, the decision-process builder and the trace sampler.
class ControlStepper {
public:
    ControlStepper(const Scenario& scenario, const ModelParams& params, const AdasConfig& adas)
        : scenario_(scenario),
          params_(params),
          adas_(adas),
          grid_(scenario, params),
          window_(params.decision),
          other_{scenario.x0_ov, scenario.v0_ov, 0} {}

    const Grid& grid() const { return grid_; }
    const Scenario& scenario() const { return scenario_; }
    const ModelParams& params() const { return params_; }
    const AdasConfig& adas() const { return adas_; }
    const OtherVehicle& other() const { return other_; }

    AbstractState initial() const {
        AbstractState s;
        s.mu = Phase::Control;
        s.x = grid_.x_index(scenario_.x0);
        s.lambda = scenario_.lambda0;
        s.a = 0;
        s.v = grid_.v_index(scenario_.v0);
        s.t = 0;
        return s;
    }

    VehicleState continuous(const AbstractState& s) const {
        VehicleState out;
        out.x = grid_.x_of(s.x);
        out.y = lane_center(s.lambda, params_.dynamics);
        out.v = grid_.v_of(s.v);
        out.a = grid_.a_of(s.a);
        return out;
    }

    /// Steering gains for gain index g (0 = human only).
    GainSet gains(int g) const {
        GainSet total = params_.dynamics.human_gains;
        if (g > 0) total = total + adas_.gain_sets.at(static_cast<std::size_t>(g - 1));
        return total;
    }

    /// Canonical gain index of gain_sets[i]: zero gains collapse onto 0.
    int gain_index(std::size_t i) const {
        return adas_.gain_sets.at(i) == GainSet{} ? 0 : static_cast<int>(i) + 1;
    }

    /// Probability that the driver decides to change lane in decision state s.
    double lane_change_probability(const AbstractState& s) const {
        const double x = grid_.x_of(s.x);
        const double x_ov = other_.x_at(grid_.t_of(s.t));
        const double l = params_.dynamics.length;
        const double v = grid_.v_of(s.v);
        if (s.lambda == 0) {
            if (!(x_ov > x)) return 0.0;
            return smoothed_probability(x_ov - x - l, v, 0, window_, params_.decision,
                                        params_.dynamics.thw_cap);
        }
        if (!(x_ov < x)) return 0.0;
        return smoothed_probability(x - x_ov - l, v, 1, window_, params_.decision,
                                    params_.dynamics.thw_cap);
    }

    /// Whether the ADAS may intervene in state s.
    bool assisted(const AbstractState& s) const {
        const double gap = other_.x_at(grid_.t_of(s.t)) - grid_.x_of(s.x);
        return std::abs(gap) <= adas_.intervention_range;
    }

    /// Successor of control state s when the ADAS adds `a_extra`. Lane
    /// changes ignore the increment. The observer receives the continuous
    /// samples of the step.
    AbstractState control(const AbstractState& s, double a_extra,
                          const TraceObserver& observer = {}) {
        if (s.pending == Pending::LaneChange) return lane_change(s, observer);
        const double t = grid_.t_of(s.t);
        std::optional<double> forced;
        if (s.pending == Pending::Decelerate) forced = adas_.a_d;
        const LaneFollowResult r =
            simulate_lane_follow(continuous(s), t, other_, params_.dynamics, a_extra, forced);
        if (observer) observer(t + params_.dynamics.dt, r.state);
        if (r.collided) return AbstractState::crash();
        VehicleState end = r.state;
        end.a = r.human_accel;
        return settle(end, s.lambda, s.t + 1, end.x >= scenario_.x_max);
    }

    /// Decision-phase successor carrying the chosen intent.
    static AbstractState with_intent(const AbstractState& s, Pending pending, int gain) {
        AbstractState out = s;
        out.mu = Phase::Control;
        out.pending = pending;
        out.gain = pending == Pending::LaneChange ? gain : 0;
        return out;
    }

    const std::map<ManeuverKey, ManeuverOutcome>& maneuvers() const { return maneuvers_; }

private:
    AbstractState settle(const VehicleState& end, int lane, long t_index, bool goal) const {
        if (t_index > grid_.t_top()) return AbstractState::timeout();
        AbstractState out;
        out.mu = Phase::Decision;
        out.x = goal ? grid_.x_goal() : grid_.x_index(end.x);
        out.lambda = lane;
        out.a = grid_.a_index(end.a);
        out.v = grid_.v_index(end.v);
        out.t = static_cast<int>(t_index);
        return out;
    }

    AbstractState lane_change(const AbstractState& s, const TraceObserver& observer) {
        const double t = grid_.t_of(s.t);
        const double x = grid_.x_of(s.x);
        const int target = 1 - s.lambda;
        double offset = other_.x_at(t) - x;
        const double step = params_.grid.offset_step;
        if (step > 0.0) offset = static_cast<double>(quantize(offset, step)) * step;
        ManeuverKey key{s.v, s.a, s.lambda, s.gain, offset};

        VehicleState start = continuous(s);
        start.x = 0.0;
        const OtherVehicle relative{key.offset, other_.v, other_.lane};
        auto run = [&](const ManeuverObserver& obs) {
            return simulate_lane_change(start, 0.0, target, gains(s.gain), relative,
                                        params_.dynamics, {}, obs);
        };

        const ManeuverOutcome* outcome = nullptr;
        ManeuverOutcome observed;
        if (observer) {
            observed = run([&](double elapsed, const VehicleState& rel) {
                VehicleState abs = rel;
                abs.x += x;
                observer(t + elapsed, abs);
            });
            outcome = &observed;
        } else {
            auto it = maneuvers_.find(key);
            if (it == maneuvers_.end()) it = maneuvers_.emplace(key, run({})).first;
            outcome = &it->second;
        }

        const double dt = params_.dynamics.dt;
        const bool failed = outcome->collided || outcome->diverged;
        // Crossing the end of the road before the maneuver ends or fails.
        for (std::size_t k = 1; k < outcome->cycle_x.size(); ++k) {
            const double at = static_cast<double>(k) * dt;
            if (failed && outcome->event_time < at) break;
            if (x + outcome->cycle_x[k] >= scenario_.x_max) {
                VehicleState end = outcome->end_state;
                end.x += x;
                return settle(end, target, s.t + static_cast<long>(k), true);
            }
        }
        if (failed) return AbstractState::crash();
        VehicleState end = outcome->end_state;
        end.x += x;
        const long cycles = std::max(1L, quantize(outcome->duration, dt));
        return settle(end, target, s.t + cycles, end.x >= scenario_.x_max);
    }

    Scenario scenario_;
    ModelParams params_;
    AdasConfig adas_;
    Grid grid_;
    NoiseWindow window_;
    OtherVehicle other_;
    std::map<ManeuverKey, ManeuverOutcome> maneuvers_;
};

// ---------------------------------------------------------------------------
// Built models

enum class ActionKind { Stay, Suggest, Human, Accelerate, Maneuver };
enum class Suggestion { LaneChange, Continue, Decelerate };

inline const char* to_string(Suggestion s) {
    switch (s) {
        case Suggestion::LaneChange: return "lc";
        case Suggestion::Continue: return "con";
        case Suggestion::Decelerate: return "dec";
    }
    return "?";
}

/// What an MDP choice means for the vehicle.
struct ActionSpec {
    ActionKind kind = ActionKind::Stay;
    Suggestion suggestion = Suggestion::Continue;
    int gain = 0;
    double increment = 0.0;
};

/// A model together with the abstract state behind every index.
template <class Model>
struct Abstraction {
    Model model;
    std::vector<AbstractState> states;
    std::unordered_map<AbstractState, StateIndex, AbstractStateHash> index;
    /// Per global choice (MDP only).
    std::vector<ActionSpec> actions;
    /// Compressed lane changes computed during construction.
    std::map<ManeuverKey, ManeuverOutcome> maneuvers;
    Scenario scenario;
    ModelParams params;
    AdasConfig adas;

    std::optional<StateIndex> find(const AbstractState& s) const {
        const auto it = index.find(s);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
    std::size_t num_states() const { return states.size(); }
};

using AbstractChain = Abstraction<MarkovChain>;
using AbstractMdp = Abstraction<Mdp>;

/// Names of the propositions every abstraction carries.
inline const std::vector<std::string>& base_propositions() {
    static const std::vector<std::string> names{"init", "crash", "goal", "timeout", "lane0",
                                                "lane1", "control", "decision"};
    return names;
}

/// State variables usable in threshold propositions.
inline const std::vector<std::string>& threshold_variables() {
    static const std::vector<std::string> names{"t", "x", "v", "a", "lambda"};
    return names;
}

namespace detail {

inline std::string known_predicates() {
    std::string out;
    for (const auto& n : base_propositions()) out += (out.empty() ? "" : ", ") + n;
    out += "; thresholds over";
    for (const auto& n : threshold_variables()) out += " " + n;
    return out;
}

inline void collect(const pctl::StateFormula& f, std::vector<std::string>& atoms,
                    std::vector<pctl::Threshold>& thresholds);

inline void collect(const pctl::PathFormula& p, std::vector<std::string>& atoms,
                    std::vector<pctl::Threshold>& thresholds) {
    const pctl::Until u = pctl::as_until(p);
    if (const auto* n = std::get_if<pctl::Next>(&p.node)) {
        collect(*n->operand, atoms, thresholds);
        return;
    }
    collect(*u.lhs, atoms, thresholds);
    collect(*u.rhs, atoms, thresholds);
}

inline void collect(const pctl::StateFormula& f, std::vector<std::string>& atoms,
                    std::vector<pctl::Threshold>& thresholds) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, pctl::Atomic>) {
                atoms.push_back(node.name);
            } else if constexpr (std::is_same_v<T, pctl::Threshold>) {
                thresholds.push_back(node);
            } else if constexpr (std::is_same_v<T, pctl::Not>) {
                collect(*node.operand, atoms, thresholds);
            } else if constexpr (std::is_same_v<T, pctl::And> || std::is_same_v<T, pctl::Or>) {
                collect(*node.lhs, atoms, thresholds);
                collect(*node.rhs, atoms, thresholds);
            } else if constexpr (std::is_same_v<T, pctl::Probability>) {
                collect(*node.path, atoms, thresholds);
            }
        },
        f.node);
}

}  // namespace detail

/// Assigns the base propositions and one label per threshold predicate.
/// Sink states satisfy no threshold.
inline Labels label_states(const std::vector<AbstractState>& states, const Grid& grid,
                           const std::vector<pctl::Threshold>& thresholds, StateIndex initial) {
    const std::size_t n = states.size();
    Labels labels;
    for (const auto& name : base_propositions()) labels[name] = StateSet(n, false);
    if (initial < n) labels["init"][initial] = true;
    for (std::size_t i = 0; i < n; ++i) {
        const AbstractState& s = states[i];
        labels["crash"][i] = s.sink == Sink::Crash;
        labels["timeout"][i] = s.sink == Sink::Timeout;
        labels["goal"][i] = grid.is_goal(s);
        if (s.sink == Sink::None) {
            labels["lane0"][i] = s.lambda == 0;
            labels["lane1"][i] = s.lambda == 1;
            labels[s.mu == Phase::Control ? "control" : "decision"][i] = true;
        }
    }
    const auto& vars = threshold_variables();
    for (const auto& th : thresholds) {
        if (std::find(vars.begin(), vars.end(), th.variable) == vars.end()) {
            throw LabelingError("unknown state variable '" + th.variable +
                                "' (known predicates: " + detail::known_predicates() + ")");
        }
        StateSet set(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const AbstractState& s = states[i];
            if (s.sink != Sink::None) continue;
            double value = 0.0;
            if (th.variable == "t") value = grid.t_of(s.t);
            else if (th.variable == "x") value = grid.x_of(s.x);
            else if (th.variable == "v") value = grid.v_of(s.v);
            else if (th.variable == "a") value = grid.a_of(s.a);
            else value = s.lambda;
            // Grid values carry rounding noise from the step multiplication.
            const double eps = 1e-9 * std::max(1.0, std::abs(th.value));
            switch (th.op) {
                case pctl::Comparison::Less: set[i] = value < th.value - eps; break;
                case pctl::Comparison::LessEqual: set[i] = value <= th.value + eps; break;
                case pctl::Comparison::Greater: set[i] = value > th.value + eps; break;
                case pctl::Comparison::GreaterEqual: set[i] = value >= th.value - eps; break;
                case pctl::Comparison::Equal: set[i] = std::abs(value - th.value) <= eps; break;
            }
        }
        labels[th.label()] = std::move(set);
    }
    return labels;
}

/// Adds the threshold labels used by `f` to a built abstraction and checks
/// that every named proposition exists.
template <class Model>
void label_formula(Abstraction<Model>& abs, const pctl::StateFormula& f) {
    std::vector<std::string> atoms;
    std::vector<pctl::Threshold> thresholds;
    detail::collect(f, atoms, thresholds);
    for (const auto& name : atoms) {
        if (!abs.model.labels().count(name)) {
            throw LabelingError("unknown proposition \"" + name +
                                "\" (known predicates: " + detail::known_predicates() + ")");
        }
    }
    const Grid grid(abs.scenario, abs.params);
    Labels extra = label_states(abs.states, grid, thresholds, abs.model.initial());
    for (const auto& th : thresholds) abs.model.labels()[th.label()] = std::move(extra[th.label()]);
}

namespace detail {

/// Assigns indices to abstract states in discovery order.
class StateIndexer {
public:
    explicit StateIndexer(std::size_t cap, const GridParams& grid) : cap_(cap), grid_(grid) {}

    StateIndex intern(const AbstractState& s) {
        const auto [it, inserted] = index.try_emplace(s, states.size());
        if (inserted) {
            if (states.size() >= cap_) {
                throw SizeLimitError("state space exceeds the cap of " + std::to_string(cap_) +
                                     " states at resolution x_step=" +
                                     pctl::format_number(grid_.x_step) +
                                     " v_step=" + pctl::format_number(grid_.v_step) +
                                     " a_step=" + pctl::format_number(grid_.a_step));
            }
            states.push_back(s);
        }
        return it->second;
    }

    std::vector<AbstractState> states;
    std::unordered_map<AbstractState, StateIndex, AbstractStateHash> index;

private:
    std::size_t cap_;
    GridParams grid_;
};

inline void push(std::vector<Transition>& row, StateIndex target, double p) {
    if (p > 0.0) row.push_back({target, p});
}

/// Distribution of a suggestion under the responsiveness table.
struct SuggestionMass {
    double lane_change = 0.0, keep = 0.0, decelerate = 0.0;
};

inline SuggestionMass suggestion_mass(Suggestion a, double gamma, double p) {
    SuggestionMass m;
    switch (a) {
        case Suggestion::LaneChange:
            m.lane_change = gamma + (1.0 - gamma) * p;
            m.keep = (1.0 - gamma) * (1.0 - p);
            break;
        case Suggestion::Decelerate:
            m.decelerate = gamma;
            m.lane_change = (1.0 - gamma) * p;
            m.keep = (1.0 - gamma) * (1.0 - p);
            break;
        case Suggestion::Continue:
            m.keep = gamma + (1.0 - gamma) * (1.0 - p);
            m.lane_change = (1.0 - gamma) * p;
            break;
    }
    return m;
}

inline std::string increment_name(double inc) {
    if (inc == 0.0) return "acc:0";
    return std::string("acc:") + (inc > 0.0 ? "+" : "") + pctl::format_number(inc);
}

template <class Model>
void finish(Abstraction<Model>& out, StateIndexer& indexer, const ControlStepper& stepper) {
    const Scenario& scenario = stepper.scenario();
    const ModelParams& params = stepper.params();
    const AdasConfig& adas = stepper.adas();
    out.maneuvers = stepper.maneuvers();
    out.states = std::move(indexer.states);
    out.index = std::move(indexer.index);
    out.scenario = scenario;
    out.params = params;
    out.adas = adas;
    out.model.set_initial(0);
    const Grid grid(scenario, params);
    out.model.labels() = label_states(out.states, grid, {}, 0);
    out.model.validate();
}

}  // namespace detail

/// Human-only chain: control states step deterministically, decision
/// states branch on the lane-change probability (zero branches removed).
inline AbstractChain build_mc(const Scenario& scenario, const ModelParams& params,
                              const AdasConfig& adas = {}) {
    scenario.validate();
    params.validate();
    ControlStepper stepper(scenario, params, adas);
    detail::StateIndexer indexer(params.grid.state_cap, params.grid);
    AbstractChain out;

    indexer.intern(stepper.initial());
    for (StateIndex i = 0; i < indexer.states.size(); ++i) {
        const AbstractState s = indexer.states[i];
        std::vector<Transition> row;
        if (stepper.grid().is_absorbing(s)) {
            row.push_back({i, 1.0});
        } else if (s.mu == Phase::Control) {
            row.push_back({indexer.intern(stepper.control(s, 0.0)), 1.0});
        } else {
            const double p = stepper.lane_change_probability(s);
            if (p > 0.0) {
                detail::push(row, indexer.intern(ControlStepper::with_intent(s, Pending::LaneChange, 0)), p);
            }
            detail::push(row, indexer.intern(ControlStepper::with_intent(s, Pending::None, 0)), 1.0 - p);
        }
        out.model.add_state(std::move(row));
    }
    detail::finish(out, indexer, stepper);
    return out;
}

/// Human driver plus ADAS: suggestions and steering gain sets at decision
/// states, acceleration increments at control states.
inline AbstractMdp build_mdp(const Scenario& scenario, const ModelParams& params,
                             const AdasConfig& adas) {
    scenario.validate();
    params.validate();
    adas.validate(params.dynamics);
    ControlStepper stepper(scenario, params, adas);
    detail::StateIndexer indexer(params.grid.state_cap, params.grid);
    AbstractMdp out;
    Mdp& mdp = out.model;

    // Distinct gain indices offered at lane changes, in configuration order.
    std::vector<std::pair<int, std::string>> gain_choices;
    if (adas.active_steer_enabled) {
        for (std::size_t i = 0; i < adas.gain_sets.size(); ++i) {
            gain_choices.emplace_back(stepper.gain_index(i), "@g" + std::to_string(i));
        }
    } else {
        gain_choices.emplace_back(0, "");
    }
    std::vector<double> increments{0.0};
    if (adas.active_accel_enabled) increments = adas.accel_increments;

    auto add = [&](const std::string& name, const ActionSpec& spec,
                   const std::vector<Transition>& dist) {
        mdp.add_choice(mdp.action_id(name), dist);
        out.actions.push_back(spec);
    };

    indexer.intern(stepper.initial());
    for (StateIndex i = 0; i < indexer.states.size(); ++i) {
        const AbstractState s = indexer.states[i];
        mdp.begin_state();
        if (stepper.grid().is_absorbing(s)) {
            add("stay", {ActionKind::Stay}, {{i, 1.0}});
            continue;
        }
        if (s.mu == Phase::Control) {
            if (s.pending == Pending::LaneChange) {
                add("maneuver", {ActionKind::Maneuver, Suggestion::Continue, s.gain},
                    {{indexer.intern(stepper.control(s, 0.0)), 1.0}});
                continue;
            }
            if (!stepper.assisted(s)) {
                add("acc:0", {ActionKind::Accelerate}, {{indexer.intern(stepper.control(s, 0.0)), 1.0}});
                continue;
            }
            for (double inc : increments) {
                add(detail::increment_name(inc),
                    {ActionKind::Accelerate, Suggestion::Continue, 0, inc},
                    {{indexer.intern(stepper.control(s, inc)), 1.0}});
            }
            continue;
        }
        const double p = stepper.lane_change_probability(s);
        if (!stepper.assisted(s)) {
            std::vector<Transition> dist;
            if (p > 0.0) {
                detail::push(dist, indexer.intern(ControlStepper::with_intent(s, Pending::LaneChange, 0)), p);
            }
            detail::push(dist, indexer.intern(ControlStepper::with_intent(s, Pending::None, 0)), 1.0 - p);
            add("human", {ActionKind::Human}, dist);
            continue;
        }
        for (const auto& [gain, suffix] : gain_choices) {
            auto lc = [&] {
                return indexer.intern(ControlStepper::with_intent(s, Pending::LaneChange, gain));
            };
            auto keep = [&] {
                return indexer.intern(ControlStepper::with_intent(s, Pending::None, 0));
            };
            if (!adas.passive_enabled) {
                std::vector<Transition> dist;
                if (p > 0.0) detail::push(dist, lc(), p);
                detail::push(dist, keep(), 1.0 - p);
                add("human" + suffix, {ActionKind::Human, Suggestion::Continue, gain}, dist);
                continue;
            }
            for (Suggestion a : {Suggestion::LaneChange, Suggestion::Continue, Suggestion::Decelerate}) {
                const auto m = detail::suggestion_mass(a, adas.gamma, p);
                std::vector<Transition> dist;
                if (m.lane_change > 0.0) detail::push(dist, lc(), m.lane_change);
                if (m.keep > 0.0) detail::push(dist, keep(), m.keep);
                if (m.decelerate > 0.0) {
                    detail::push(dist,
                                 indexer.intern(ControlStepper::with_intent(s, Pending::Decelerate, 0)),
                                 m.decelerate);
                }
                add(std::string(to_string(a)) + suffix, {ActionKind::Suggest, a, gain}, dist);
            }
        }
    }
    detail::finish(out, indexer, stepper);
    return out;
}

/// One row of the control lookup table.
struct ControlEntry {
    AbstractState state;
    std::string action;
    AbstractState successor;
};

/// Every reachable (control state, active-control action) pair of the ADAS
/// decision process with its successor.
inline std::vector<ControlEntry> build_control_table(const Scenario& scenario,
                                                     const ModelParams& params,
                                                     const AdasConfig& adas) {
    const AbstractMdp abs = build_mdp(scenario, params, adas);
    std::vector<ControlEntry> table;
    for (StateIndex s = 0; s < abs.num_states(); ++s) {
        const AbstractState& st = abs.states[s];
        if (st.mu != Phase::Control || Grid(scenario, params).is_absorbing(st)) continue;
        for (std::size_t c = abs.model.first_choice(s); c < abs.model.end_choice(s); ++c) {
            const auto dist = abs.model.distribution(c);
            table.push_back({st, abs.model.action_names()[abs.model.choice_action(c)],
                             abs.states[dist.front().target]});
        }
    }
    return table;
}

/// Writes the compressed lane changes of a built abstraction as CSV.
template <class Model>
void write_maneuver_csv(std::ostream& out, const Abstraction<Model>& abs) {
    const Grid grid(abs.scenario, abs.params);
    out << "v,a,source_lane,gain_set,offset,duration,end_v,collided,diverged,labels\n";
    for (const auto& [key, m] : abs.maneuvers) {
        std::string labels;
        for (const auto& l : m.labels_seen) labels += (labels.empty() ? "" : ";") + l;
        out << pctl::format_number(grid.v_of(key.v)) << ',' << pctl::format_number(grid.a_of(key.a))
            << ',' << key.lane << ',' << key.gain << ',' << pctl::format_number(key.offset) << ','
            << pctl::format_number(m.duration) << ',' << pctl::format_number(m.end_state.v) << ','
            << (m.collided ? 1 : 0) << ',' << (m.diverged ? 1 : 0) << ',' << labels << '\n';
    }
}

}  // namespace adasynth
