#pragma once

// Case studies, scenario sampling, parameter sweeps and Monte-Carlo traces.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "adasynth/abstraction.hpp"
#include "adasynth/errors.hpp"
#include "adasynth/pctl/checker.hpp"
#include "adasynth/pctl/parser.hpp"
#include "adasynth/synthesis.hpp"

namespace adasynth {

// ---------------------------------------------------------------------------
// Utilities

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of task `index` under a master seed.
inline std::uint64_t task_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ (index + 1) * 0xd1b54a32d192ed03ULL);
}

/// Uniform draw in [0,1) that does not depend on the standard library's
/// distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written by index; the first exception is rethrown.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct Quartiles {
    double q1 = 0.0, median = 0.0, q3 = 0.0;
};

/// Quartiles with the median-exclusive convention: Q1 and Q3 are the medians
/// of the halves below and above the median, the median itself excluded
/// when the count is odd.
inline Quartiles quartiles(std::vector<double> values) {
    if (values.empty()) throw DomainError("quartiles of an empty sample");
    std::sort(values.begin(), values.end());
    auto median_of = [](const std::vector<double>& v, std::size_t lo, std::size_t hi) {
        const std::size_t n = hi - lo;
        if (n == 0) return v[lo];
        const std::size_t mid = lo + n / 2;
        return n % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
    };
    const std::size_t n = values.size();
    Quartiles q;
    q.median = median_of(values, 0, n);
    if (n == 1) {
        q.q1 = q.q3 = values[0];
        return q;
    }
    q.q1 = median_of(values, 0, n / 2);
    q.q3 = median_of(values, (n + 1) / 2, n);
    return q;
}

// ---------------------------------------------------------------------------
// Case studies

inline std::string safety_formula() { return "P=? [ F \"crash\" ]"; }

inline std::string liveness_formula(double deadline) {
    return "P=? [ !\"crash\" U (\"goal\" & (t<=" + pctl::format_number(deadline) + ")) ]";
}

struct CaseStudy {
    double p_human = 0.0;
    double p_adas = 0.0;
    Policy policy;
    std::size_t mc_states = 0;
    std::size_t mdp_states = 0;
    /// p_adas improves on (or equals) p_human in the optimized direction.
    bool ordered = true;
};

inline constexpr double kOrderTolerance = 1e-9;

/// Human chain value versus the synthesized ADAS value of one formula.
inline CaseStudy compare_human_adas(const Scenario& scenario, const ModelParams& params,
                                    const AdasConfig& adas, const pctl::StateFormula& f,
                                    pctl::Direction direction,
                                    const pctl::SolverOptions& options = {}) {
    CaseStudy out;
    AbstractChain mc = build_mc(scenario, params, adas);
    label_formula(mc, f);
    out.p_human = pctl::check_mc(mc.model, f, options).initial_probability;
    out.mc_states = mc.num_states();

    AbstractMdp mdp = build_mdp(scenario, params, adas);
    label_formula(mdp, f);
    Synthesis syn = synthesize(mdp.model, f, direction, options);
    out.p_adas = syn.policy.value;
    out.policy = std::move(syn.policy);
    out.mdp_states = mdp.num_states();
    out.ordered = direction == pctl::Direction::Min ? out.p_adas <= out.p_human + kOrderTolerance
                                                    : out.p_adas >= out.p_human - kOrderTolerance;
    return out;
}

/// Probability of ever crashing: human chain versus the minimizing ADAS.
inline CaseStudy case_study_safety(const Scenario& scenario, const ModelParams& params,
                                   const AdasConfig& adas, const pctl::SolverOptions& options = {}) {
    return compare_human_adas(scenario, params, adas, *pctl::parse(safety_formula()),
                              pctl::Direction::Min, options);
}

/// Probability of reaching the end of the road by `deadline` seconds
/// without crashing: human chain versus the maximizing ADAS.
inline CaseStudy case_study_liveness(const Scenario& scenario, const ModelParams& params,
                                     const AdasConfig& adas, double deadline,
                                     const pctl::SolverOptions& options = {}) {
    if (!(deadline > 0.0) || !std::isfinite(deadline)) throw ConfigError("deadline T must be > 0");
    return compare_human_adas(scenario, params, adas, *pctl::parse(liveness_formula(deadline)),
                              pctl::Direction::Max, options);
}

// ---------------------------------------------------------------------------
// Scenario populations and sweeps

struct Interval {
    double lo = 0.0, hi = 0.0;
};

struct SamplingBounds {
    int lambda0_lo = 0, lambda0_hi = 0;
    Interval x0{0.0, 0.0};
    Interval v0{20.0, 30.0};
    Interval x0_ov{30.0, 80.0};
    Interval v0_ov{15.0, 20.0};
    double x_max = 500.0;

    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("sampling: ") + what);
        };
        require(lambda0_lo <= lambda0_hi, "lambda0 bounds reversed");
        for (const Interval* i : {&x0, &v0, &x0_ov, &v0_ov}) {
            require(std::isfinite(i->lo) && std::isfinite(i->hi) && i->lo <= i->hi,
                    "interval bounds must be finite with lo <= hi");
        }
    }
};

/// Draws `n` scenarios uniformly and independently per field, redrawing
/// infeasible ones.
inline std::vector<Scenario> sample_scenarios(std::size_t n, const SamplingBounds& bounds,
                                              std::uint64_t seed) {
    if (n == 0) throw SamplingError("sample size must be > 0");
    bounds.validate();
    if (bounds.x0.lo >= bounds.x0_ov.hi || bounds.x0_ov.lo >= bounds.x_max ||
        bounds.lambda0_hi < 0 || bounds.lambda0_lo > 1 || bounds.v0.hi < 0.0 ||
        bounds.v0_ov.hi < 0.0) {
        throw SamplingError("sampling bounds admit no feasible scenario");
    }
    constexpr int kMaxAttempts = 10000;
    std::mt19937_64 rng(splitmix64(seed));
    std::vector<Scenario> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool found = false;
        for (int attempt = 0; attempt < kMaxAttempts && !found; ++attempt) {
            Scenario s;
            const int span = bounds.lambda0_hi - bounds.lambda0_lo + 1;
            s.lambda0 = bounds.lambda0_lo + static_cast<int>(rng() % static_cast<std::uint64_t>(span));
            s.x0 = uniform(rng, bounds.x0.lo, bounds.x0.hi);
            s.v0 = uniform(rng, bounds.v0.lo, bounds.v0.hi);
            s.x0_ov = uniform(rng, bounds.x0_ov.lo, bounds.x0_ov.hi);
            s.v0_ov = uniform(rng, bounds.v0_ov.lo, bounds.v0_ov.hi);
            s.x_max = bounds.x_max;
            try {
                s.validate();
                out.push_back(s);
                found = true;
            } catch (const ConfigError&) {
            }
        }
        if (!found) throw SamplingError("no feasible scenario after repeated draws");
    }
    return out;
}

struct SweepCell {
    double v0 = 0.0;
    double v0_ov = 0.0;
    double p_human = 0.0;
    double p_adas = 0.0;
    bool ordered = true;
    std::string error;  ///< non-empty when the cell failed
};

struct SweepGrid {
    std::vector<double> v0_values;
    std::vector<double> v0_ov_values;
    Scenario base;
    std::vector<SweepCell> cells;  ///< row-major: v0 outer, v0_ov inner
    std::vector<std::string> warnings;
};

/// Evaluates every (v0, v0_ov) cell of the grid; failures are recorded per
/// cell and do not stop the sweep.
inline SweepGrid sweep(const std::vector<double>& v0_values, const std::vector<double>& v0_ov_values,
                       const Scenario& base, const ModelParams& params, const AdasConfig& adas,
                       const pctl::StateFormula& f, pctl::Direction direction, unsigned threads = 1,
                       const pctl::SolverOptions& options = {}) {
    if (v0_values.empty() || v0_ov_values.empty()) throw ConfigError("sweep grid is empty");
    SweepGrid grid{v0_values, v0_ov_values, base, {}, {}};
    grid.cells.resize(v0_values.size() * v0_ov_values.size());
    parallel_for(grid.cells.size(), threads, [&](std::size_t i) {
        SweepCell& cell = grid.cells[i];
        cell.v0 = v0_values[i / v0_ov_values.size()];
        cell.v0_ov = v0_ov_values[i % v0_ov_values.size()];
        Scenario s = base;
        s.v0 = cell.v0;
        s.v0_ov = cell.v0_ov;
        try {
            const CaseStudy r = compare_human_adas(s, params, adas, f, direction, options);
            cell.p_human = r.p_human;
            cell.p_adas = r.p_adas;
            cell.ordered = r.ordered;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });
    // Closing speed grows with v0, so the human value should not drop.
    for (std::size_t j = 0; j < v0_ov_values.size(); ++j) {
        for (std::size_t i = 1; i < v0_values.size(); ++i) {
            const SweepCell& prev = grid.cells[(i - 1) * v0_ov_values.size() + j];
            const SweepCell& cur = grid.cells[i * v0_ov_values.size() + j];
            if (prev.error.empty() && cur.error.empty() && cur.p_human + 1e-9 < prev.p_human) {
                grid.warnings.push_back("human value decreases from v0=" + pctl::format_number(prev.v0) +
                                        " to v0=" + pctl::format_number(cur.v0) +
                                        " at v0_ov=" + pctl::format_number(cur.v0_ov));
            }
        }
    }
    return grid;
}

inline void write_sweep_csv(std::ostream& out, const SweepGrid& grid) {
    out << "v0,v0_ov,p_human,p_adas,error\n";
    for (const auto& c : grid.cells) {
        out << pctl::format_number(c.v0) << ',' << pctl::format_number(c.v0_ov) << ','
            << pctl::format_number(c.p_human) << ',' << pctl::format_number(c.p_adas) << ','
            << c.error << '\n';
    }
}

struct PopulationRow {
    Scenario scenario;
    double p_human = 0.0;
    double p_adas = 0.0;
    std::string error;
};

inline std::vector<PopulationRow> run_population(const std::vector<Scenario>& scenarios,
                                                 const ModelParams& params, const AdasConfig& adas,
                                                 const pctl::StateFormula& f,
                                                 pctl::Direction direction, unsigned threads = 1,
                                                 const pctl::SolverOptions& options = {}) {
    std::vector<PopulationRow> rows(scenarios.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        rows[i].scenario = scenarios[i];
        try {
            const CaseStudy r = compare_human_adas(scenarios[i], params, adas, f, direction, options);
            rows[i].p_human = r.p_human;
            rows[i].p_adas = r.p_adas;
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

inline void write_population_csv(std::ostream& out, const std::vector<PopulationRow>& rows) {
    out << "lambda0,x0,v0,x0_ov,v0_ov,x_max,p_human,p_adas,error\n";
    for (const auto& r : rows) {
        const Scenario& s = r.scenario;
        out << s.lambda0 << ',' << pctl::format_number(s.x0) << ',' << pctl::format_number(s.v0) << ','
            << pctl::format_number(s.x0_ov) << ',' << pctl::format_number(s.v0_ov) << ','
            << pctl::format_number(s.x_max) << ',' << pctl::format_number(r.p_human) << ','
            << pctl::format_number(r.p_adas) << ',' << r.error << '\n';
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo traces

enum class Outcome { Crash, Goal, Timeout };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Crash: return "crash";
        case Outcome::Goal: return "goal";
        case Outcome::Timeout: return "timeout";
    }
    return "?";
}

struct TracePoint {
    double t = 0.0;
    VehicleState ego;
    VehicleState other;
    std::string event;
};

struct Trace {
    std::vector<TracePoint> points;
    Outcome outcome = Outcome::Timeout;
};

/// Chooses actions in policy mode: the synthesized policy over its MDP.
struct PolicyDriver {
    const AbstractMdp* mdp = nullptr;
    const Policy* policy = nullptr;
};

struct TraceOptions {
    /// Decide on the continuous state instead of the abstraction's grid.
    bool continuous = false;
    /// Keep one maneuver sample out of this many fine steps.
    int maneuver_stride = 10;
};

namespace detail {

class TraceRecorder {
public:
    TraceRecorder(Trace* trace, const OtherVehicle& other, const DynamicsParams& p)
        : trace_(trace), other_(other), p_(p) {}

    bool enabled() const { return trace_ != nullptr; }

    void sample(double t, const VehicleState& ego, const std::string& event = {}) {
        if (!trace_) return;
        auto& pts = trace_->points;
        if (!pts.empty() && t <= pts.back().t + 1e-12) {
            // Snapped abstract time can fall behind a fine sample.
            if (!event.empty()) {
                pts.back().event += pts.back().event.empty() ? event : ";" + event;
            }
            return;
        }
        pts.push_back({t, ego, other_state_at(other_, t, p_), event});
    }

    void mark(const std::string& event) {
        if (!trace_ || trace_->points.empty()) return;
        auto& e = trace_->points.back().event;
        e += e.empty() ? event : ";" + event;
    }

private:
    Trace* trace_;
    OtherVehicle other_;
    DynamicsParams p_;
};

/// Action chosen at an abstract state in policy mode; nullopt means the
/// unassisted human behavior.
inline std::optional<ActionSpec> policy_action(const PolicyDriver& driver, const AbstractState& s,
                                               std::size_t* global_choice = nullptr) {
    if (!driver.mdp || !driver.policy) return std::nullopt;
    const auto idx = driver.mdp->find(s);
    if (!idx || !driver.policy->defined(*idx)) return std::nullopt;
    const std::size_t c = driver.mdp->model.first_choice(*idx) + driver.policy->choice[*idx];
    if (c >= driver.mdp->model.end_choice(*idx)) return std::nullopt;
    if (global_choice) *global_choice = c;
    return driver.mdp->actions[c];
}

/// One run on the abstraction: every step is a transition of the built
/// chain (human mode) or of the policy-induced chain (policy mode).
inline Outcome run_quantized(ControlStepper& stepper, std::mt19937_64& rng,
                             const PolicyDriver& driver, TraceRecorder& rec) {
    const Grid& grid = stepper.grid();
    AbstractState s = stepper.initial();
    rec.sample(0.0, stepper.continuous(s));
    while (true) {
        if (s.sink == Sink::Crash) {
            rec.mark("crash");
            return Outcome::Crash;
        }
        if (s.sink == Sink::Timeout) {
            rec.mark("timeout");
            return Outcome::Timeout;
        }
        if (grid.is_goal(s)) {
            rec.mark("goal");
            return Outcome::Goal;
        }
        if (s.mu == Phase::Control) {
            double increment = 0.0;
            if (auto a = policy_action(driver, s); a && a->kind == ActionKind::Accelerate) {
                increment = a->increment;
            }
            if (s.pending == Pending::LaneChange) rec.mark("lc_start");
            if (s.pending == Pending::Decelerate) rec.mark("decelerate");
            TraceObserver observer;
            int counter = 0;
            if (rec.enabled()) {
                const bool maneuver = s.pending == Pending::LaneChange;
                observer = [&, maneuver](double t, const VehicleState& ego) {
                    if (!maneuver || ++counter % 10 == 0) rec.sample(t, ego);
                };
            }
            const AbstractState before = s;
            s = stepper.control(s, increment, observer);
            if (s.sink == Sink::None) {
                rec.sample(grid.t_of(s.t), stepper.continuous(s));
                if (before.pending == Pending::LaneChange) rec.mark("lc_end");
            }
            continue;
        }
        std::size_t c = 0;
        if (policy_action(driver, s, &c)) {
            // Sample the policy's distribution over abstract successors.
            const auto dist = driver.mdp->model.distribution(c);
            double u = uniform01(rng), acc = 0.0;
            StateIndex target = dist.back().target;
            for (const auto& tr : dist) {
                acc += tr.probability;
                if (u < acc) {
                    target = tr.target;
                    break;
                }
            }
            s = driver.mdp->states[target];
            continue;
        }
        const double p = stepper.lane_change_probability(s);
        s = ControlStepper::with_intent(s, uniform01(rng) < p ? Pending::LaneChange : Pending::None, 0);
    }
}

/// One run of the continuous model: decisions use the exact distance to the
/// other vehicle and no state is snapped to the grid.
inline Outcome run_continuous(ControlStepper& stepper, std::mt19937_64& rng,
                              const PolicyDriver& driver, TraceRecorder& rec, int stride) {
    const Grid& grid = stepper.grid();
    const Scenario& sc = stepper.scenario();
    const ModelParams& mp = stepper.params();
    const DynamicsParams& dyn = mp.dynamics;
    const OtherVehicle& other = stepper.other();
    const NoiseWindow window(mp.decision);

    VehicleState ego;
    ego.x = sc.x0;
    ego.y = lane_center(sc.lambda0, dyn);
    ego.v = sc.v0;
    int lane = sc.lambda0;
    double t = 0.0;
    rec.sample(t, ego);

    auto abstract_of = [&](Phase mu, Pending pending, int gain) {
        AbstractState s;
        s.mu = mu;
        s.x = grid.x_index(ego.x);
        s.lambda = lane;
        s.a = grid.a_index(ego.a);
        s.v = grid.v_index(ego.v);
        s.t = static_cast<int>(quantize(t, dyn.dt));
        s.pending = pending;
        s.gain = gain;
        return s;
    };

    // The initial state is a control state: the first cycle decides nothing.
    bool first = true;
    while (true) {
        if (t > grid.horizon()) {
            rec.mark("timeout");
            return Outcome::Timeout;
        }
        // Decision phase.
        const bool deciding = !first;
        first = false;
        const double x_ov = other.x_at(t);
        double p = 0.0;
        if (deciding && lane == 0 && x_ov > ego.x) {
            p = smoothed_probability(x_ov - ego.x - dyn.length, ego.v, 0, window, mp.decision, dyn.thw_cap);
        } else if (deciding && lane == 1 && x_ov < ego.x) {
            p = smoothed_probability(ego.x - x_ov - dyn.length, ego.v, 1, window, mp.decision, dyn.thw_cap);
        }
        Pending pending = deciding && uniform01(rng) < p ? Pending::LaneChange : Pending::None;
        int gain = 0;
        if (auto a = deciding ? policy_action(driver, abstract_of(Phase::Decision, Pending::None, 0))
                              : std::nullopt) {
            const double u = uniform01(rng);
            if (a->kind == ActionKind::Suggest) {
                const auto m = suggestion_mass(a->suggestion, stepper.adas().gamma, p);
                pending = u < m.lane_change ? Pending::LaneChange
                          : u < m.lane_change + m.keep ? Pending::None
                                                       : Pending::Decelerate;
            } else {
                pending = u < p ? Pending::LaneChange : Pending::None;
            }
            gain = pending == Pending::LaneChange ? a->gain : 0;
        }

        // Control phase.
        double increment = 0.0;
        if (auto a = policy_action(driver, abstract_of(Phase::Control, pending, gain));
            a && a->kind == ActionKind::Accelerate) {
            increment = a->increment;
        }
        if (pending == Pending::LaneChange) {
            rec.mark("lc_start");
            int counter = 0;
            const ManeuverOutcome m = simulate_lane_change(
                ego, t, 1 - lane, stepper.gains(gain), other, dyn, {},
                [&](double elapsed, const VehicleState& st) {
                    if (++counter % stride == 0) rec.sample(t + elapsed, st);
                });
            for (std::size_t k = 1; k < m.cycle_x.size(); ++k) {
                const double at = static_cast<double>(k) * dyn.dt;
                if ((m.collided || m.diverged) && m.event_time < at) break;
                if (m.cycle_x[k] >= sc.x_max) {
                    rec.sample(t + at, m.end_state);
                    rec.mark("goal");
                    return Outcome::Goal;
                }
            }
            if (m.collided || m.diverged) {
                rec.sample(t + m.event_time, m.end_state);
                rec.mark("crash");
                return Outcome::Crash;
            }
            ego = m.end_state;
            lane = 1 - lane;
            t += m.duration;
            rec.sample(t, ego, "lc_end");
        } else {
            std::optional<double> forced;
            if (pending == Pending::Decelerate) {
                forced = stepper.adas().a_d;
                rec.mark("decelerate");
            }
            const LaneFollowResult r = simulate_lane_follow(ego, t, other, dyn, increment, forced);
            ego = r.state;
            ego.a = r.human_accel;
            t += dyn.dt;
            rec.sample(t, ego);
            if (r.collided) {
                rec.mark("crash");
                return Outcome::Crash;
            }
        }
        if (ego.x >= sc.x_max) {
            rec.mark("goal");
            return Outcome::Goal;
        }
    }
}

}  // namespace detail

/// Monte-Carlo run of the driver (human mode) or of the driver under a
/// synthesized policy, recorded as a trace.
inline Trace sample_trace(ControlStepper& stepper, std::uint64_t seed,
                          const PolicyDriver& driver = {}, const TraceOptions& options = {}) {
    Trace trace;
    std::mt19937_64 rng(splitmix64(seed));
    detail::TraceRecorder rec(&trace, stepper.other(), stepper.params().dynamics);
    trace.outcome = options.continuous
                        ? detail::run_continuous(stepper, rng, driver, rec, std::max(1, options.maneuver_stride))
                        : detail::run_quantized(stepper, rng, driver, rec);
    return trace;
}

inline Trace sample_trace(const Scenario& scenario, const ModelParams& params, const AdasConfig& adas,
                          std::uint64_t seed, const PolicyDriver& driver = {},
                          const TraceOptions& options = {}) {
    ControlStepper stepper(scenario, params, adas);
    return sample_trace(stepper, seed, driver, options);
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "t,ego_x,ego_y,ego_v,ego_psi,ov_x,ov_y,ov_v,ov_psi,event\n";
    for (const auto& p : trace.points) {
        out << pctl::format_number(p.t) << ',' << pctl::format_number(p.ego.x) << ','
            << pctl::format_number(p.ego.y) << ',' << pctl::format_number(p.ego.v) << ','
            << pctl::format_number(p.ego.psi) << ',' << pctl::format_number(p.other.x) << ','
            << pctl::format_number(p.other.y) << ',' << pctl::format_number(p.other.v) << ','
            << pctl::format_number(p.other.psi) << ',' << p.event << '\n';
    }
}

struct Estimate {
    std::size_t hits = 0;
    std::size_t samples = 0;
    double probability() const { return samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0; }
    /// Binomial standard error of the estimate.
    double standard_error() const {
        if (!samples) return 0.0;
        const double p = probability();
        return std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    }
};

/// Fraction of `samples` runs ending in `outcome`. Run i uses
/// task_seed(seed, i), so the result does not depend on `threads`.
inline Estimate estimate_outcome(const Scenario& scenario, const ModelParams& params,
                                 const AdasConfig& adas, Outcome outcome, std::size_t samples,
                                 std::uint64_t seed, const PolicyDriver& driver = {},
                                 const TraceOptions& options = {}, unsigned threads = 1) {
    threads = std::max(1u, threads);
    std::vector<char> hit(samples, 0);
    std::vector<std::unique_ptr<ControlStepper>> steppers;
    for (unsigned w = 0; w < threads; ++w) {
        steppers.push_back(std::make_unique<ControlStepper>(scenario, params, adas));
    }
    // Worker w handles indices w, w + threads, ... with its own stepper cache.
    parallel_for(threads, threads, [&](std::size_t w) {
        ControlStepper& stepper = *steppers[w];
        for (std::size_t i = w; i < samples; i += threads) {
            std::mt19937_64 rng(splitmix64(task_seed(seed, i)));
            detail::TraceRecorder rec(nullptr, stepper.other(), params.dynamics);
            const Outcome o = options.continuous
                                  ? detail::run_continuous(stepper, rng, driver, rec, 1)
                                  : detail::run_quantized(stepper, rng, driver, rec);
            hit[i] = o == outcome;
        }
    });
    Estimate e;
    e.samples = samples;
    for (char h : hit) e.hits += static_cast<std::size_t>(h);
    return e;
}

}  // namespace adasynth
