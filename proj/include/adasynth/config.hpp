#pragma once

// JSON configuration: the full parameter tree, validated at load time.
// Comments are allowed in the file; unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "adasynth/abstraction.hpp"
#include "adasynth/errors.hpp"
#include "adasynth/experiments.hpp"
#include "adasynth/pctl/checker.hpp"

namespace adasynth {

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t population_size = 100;
    SamplingBounds sampling;
    std::vector<double> sweep_v0{20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30};
    std::vector<double> sweep_v0_ov{15, 16, 17, 18, 19, 20};
    double liveness_deadline = 21.0;  ///< T (s)
    std::size_t monte_carlo_samples = 10'000;
    bool continuous_traces = false;
    int maneuver_stride = 10;
};

struct Config {
    Scenario scenario;
    ModelParams model;
    AdasConfig adas;
    pctl::SolverOptions solver;
    ExperimentConfig experiments;
    std::string output_dir = "out";

    /// Revalidates every module invariant; errors are prefixed with "config: ".
    void validate() const;
};

namespace detail {

using nlohmann::json;

/// Reads fields of one JSON object and remembers which keys were consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "root" : path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& field, const std::string& what) {
        throw ConfigError("config: " + field + ": " + what);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(field(key), "expected a number");
            out = v->get<double>();
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(field(key), "expected an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned()) {
                    out = static_cast<Int>(v->get<std::uint64_t>());
                    return;
                }
                fail(field(key), "expected a non-negative integer");
            } else {
                const auto value = v->get<std::int64_t>();
                if (value < std::numeric_limits<Int>::min() || value > std::numeric_limits<Int>::max()) {
                    fail(field(key), "integer out of range");
                }
                out = static_cast<Int>(value);
            }
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(field(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(field(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(field(key), "expected an array of numbers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) fail(field(key), "expected an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    }

    /// A [lo, hi] pair.
    void interval(const std::string& key, double& lo, double& hi) {
        if (const json* v = find(key)) {
            if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
                fail(field(key), "expected [lo, hi]");
            }
            lo = (*v)[0].get<double>();
            hi = (*v)[1].get<double>();
        }
    }

    void gains(const std::string& key, GainSet& out) {
        if (const json* v = find(key)) out = gain_of(*v, field(key));
    }

    static GainSet gain_of(const json& v, const std::string& field) {
        if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
            fail(field, "expected [k_far, k_near, k_I]");
        }
        return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    }

    /// Nested object, or nullptr when absent.
    const json* object(const std::string& key) {
        const json* v = find(key);
        if (v && !v->is_object()) fail(field(key), "expected an object");
        return v;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail(field(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn>
void read_section(ObjectReader& parent, const std::string& key, Fn&& fn) {
    if (const json* v = parent.object(key)) {
        ObjectReader r(*v, parent.field(key));
        fn(r);
        r.finish();
    }
}

}  // namespace detail

inline void Config::validate() const {
    auto prefixed = [](auto&& check) {
        try {
            check();
        } catch (const ConfigError& e) {
            const std::string what = e.what();
            if (what.rfind("config: ", 0) == 0) throw;
            throw ConfigError("config: " + what);
        }
    };
    prefixed([&] { scenario.validate(); });
    prefixed([&] { model.validate(); });
    prefixed([&] { adas.validate(model.dynamics); });
    prefixed([&] { experiments.sampling.validate(); });
    using detail::ObjectReader;
    if (!(solver.tolerance > 0.0) || !std::isfinite(solver.tolerance)) {
        ObjectReader::fail("solver.tolerance", "must be > 0");
    }
    if (solver.max_sweeps == 0) ObjectReader::fail("solver.max_sweeps", "must be > 0");
    if (experiments.population_size == 0) ObjectReader::fail("experiments.population_size", "must be > 0");
    if (experiments.sweep_v0.empty()) ObjectReader::fail("experiments.sweep.v0", "must not be empty");
    if (experiments.sweep_v0_ov.empty()) ObjectReader::fail("experiments.sweep.v0_ov", "must not be empty");
    for (double v : experiments.sweep_v0) {
        if (!std::isfinite(v) || v < 0.0) ObjectReader::fail("experiments.sweep.v0", "speeds must be finite and >= 0");
    }
    for (double v : experiments.sweep_v0_ov) {
        if (!std::isfinite(v) || v < 0.0) ObjectReader::fail("experiments.sweep.v0_ov", "speeds must be finite and >= 0");
    }
    if (!(experiments.liveness_deadline > 0.0) || !std::isfinite(experiments.liveness_deadline)) {
        ObjectReader::fail("experiments.liveness_deadline", "must be > 0");
    }
    if (experiments.monte_carlo_samples == 0) ObjectReader::fail("experiments.monte_carlo_samples", "must be > 0");
    if (experiments.maneuver_stride < 1) ObjectReader::fail("experiments.maneuver_stride", "must be >= 1");
    if (output_dir.empty()) ObjectReader::fail("output_dir", "must not be empty");
}

/// Parses and validates a configuration; absent keys keep their defaults.
inline Config parse_config(const std::string& text) {
    using detail::ObjectReader;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    Config c;
    ObjectReader root(j, "");
    detail::read_section(root, "scenario", [&](ObjectReader& r) {
        r.integer("lambda0", c.scenario.lambda0);
        r.number("x0", c.scenario.x0);
        r.number("v0", c.scenario.v0);
        r.number("x0_ov", c.scenario.x0_ov);
        r.number("v0_ov", c.scenario.v0_ov);
        r.number("x_max", c.scenario.x_max);
    });
    detail::read_section(root, "dynamics", [&](ObjectReader& r) {
        DynamicsParams& d = c.model.dynamics;
        r.number("length", d.length);
        r.number("dt", d.dt);
        r.number("dt_sim", d.dt_sim);
        r.gains("human_gains", d.human_gains);
        r.number("theta_max", d.theta_max);
        r.boolean("symmetric_theta_cap", d.symmetric_theta_cap);
        r.number("k_car", d.k_car);
        r.number("k_follow", d.k_follow);
        r.number("thw_follow", d.thw_follow);
        r.number("thw_cap", d.thw_cap);
        r.number("a_min", d.a_min);
        r.number("a_max", d.a_max);
        r.number("lane_width", d.lane_width);
        r.number("d_near", d.d_near);
        r.number("d_far", d.d_far);
        r.number("eps_y", d.eps_y);
        r.number("eps_psi", d.eps_psi);
        r.number("t_maneuver_max", d.t_maneuver_max);
    });
    detail::read_section(root, "decision", [&](ObjectReader& r) {
        DecisionParams& d = c.model.decision;
        r.number("alpha", d.alpha);
        r.number("beta", d.beta);
        r.number("d_max", d.d_max);
        r.number("sigma", d.sigma);
        r.number("delta", d.delta);
        r.integer("window", d.window);
    });
    detail::read_section(root, "grid", [&](ObjectReader& r) {
        GridParams& g = c.model.grid;
        r.number("x_step", g.x_step);
        r.number("v_step", g.v_step);
        r.number("a_step", g.a_step);
        r.number("v_max", g.v_max);
        r.integer("state_cap", g.state_cap);
        r.number("horizon_slack", g.horizon_slack);
        r.number("speed_floor", g.speed_floor);
        r.number("offset_step", g.offset_step);
    });
    detail::read_section(root, "adas", [&](ObjectReader& r) {
        AdasConfig& a = c.adas;
        r.number("gamma", a.gamma);
        r.number("a_d", a.a_d);
        r.numbers("accel_increments", a.accel_increments);
        if (const auto* v = r.find("gain_sets")) {
            if (!v->is_array()) ObjectReader::fail(r.field("gain_sets"), "expected an array of [k_far, k_near, k_I]");
            a.gain_sets.clear();
            for (const auto& e : *v) a.gain_sets.push_back(ObjectReader::gain_of(e, r.field("gain_sets")));
        }
        r.boolean("passive_enabled", a.passive_enabled);
        r.boolean("active_accel_enabled", a.active_accel_enabled);
        r.boolean("active_steer_enabled", a.active_steer_enabled);
        r.number("intervention_range", a.intervention_range);
    });
    detail::read_section(root, "solver", [&](ObjectReader& r) {
        r.number("tolerance", c.solver.tolerance);
        r.integer("max_sweeps", c.solver.max_sweeps);
    });
    detail::read_section(root, "experiments", [&](ObjectReader& r) {
        ExperimentConfig& e = c.experiments;
        r.integer("seed", e.seed);
        r.integer("population_size", e.population_size);
        r.number("liveness_deadline", e.liveness_deadline);
        r.integer("monte_carlo_samples", e.monte_carlo_samples);
        r.boolean("continuous_traces", e.continuous_traces);
        r.integer("maneuver_stride", e.maneuver_stride);
        detail::read_section(r, "sampling", [&](ObjectReader& s) {
            SamplingBounds& b = e.sampling;
            double lo = b.lambda0_lo, hi = b.lambda0_hi;
            s.interval("lambda0", lo, hi);
            if (lo != std::floor(lo) || hi != std::floor(hi)) {
                ObjectReader::fail(s.field("lambda0"), "lane bounds must be integers");
            }
            b.lambda0_lo = static_cast<int>(lo);
            b.lambda0_hi = static_cast<int>(hi);
            s.interval("x0", b.x0.lo, b.x0.hi);
            s.interval("v0", b.v0.lo, b.v0.hi);
            s.interval("x0_ov", b.x0_ov.lo, b.x0_ov.hi);
            s.interval("v0_ov", b.v0_ov.lo, b.v0_ov.hi);
            s.number("x_max", b.x_max);
        });
        detail::read_section(r, "sweep", [&](ObjectReader& s) {
            s.numbers("v0", e.sweep_v0);
            s.numbers("v0_ov", e.sweep_v0_ov);
        });
    });
    root.string("output_dir", c.output_dir);
    root.finish();
    c.validate();
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

}  // namespace adasynth
