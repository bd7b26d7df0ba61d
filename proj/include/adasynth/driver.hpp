#pragma once

// Probabilistic lane-change decisions and the perception-noise smoothing of
// the monitoring module.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adasynth/errors.hpp"

namespace adasynth {

struct DecisionParams {
    double alpha = 1.0;    ///< headway decay rate (1/s), right lane
    double beta = 0.05;    ///< log shape (1/m), left lane
    double d_max = 500.0;  ///< largest distance in the scenario (m)
    double sigma = 2.0;    ///< perception noise std-dev (m)
    double delta = 1.0;    ///< integration window width (m)
    int window = 10;       ///< L: offsets i*delta for i in [-L, L]

    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("decision: ") + what);
        };
        require(std::isfinite(alpha) && alpha > 0.0, "alpha must be > 0");
        require(std::isfinite(beta) && beta > 0.0, "beta must be > 0");
        require(std::isfinite(d_max) && d_max > 0.0, "d_max must be > 0");
        require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
        require(std::isfinite(delta) && delta > 0.0, "delta must be > 0");
        require(window >= 0, "window (L) must be >= 0");
    }
};

/// Standard deviations below this are treated as noiseless.
inline constexpr double kNoiselessSigma = 1e-9;

/// Probability of leaving the right lane given the headway to the lead.
inline double p_change_from_right(double thw, const DecisionParams& params) {
    if (!(thw >= 0.0)) throw DomainError("p_change_from_right: headway must be >= 0");
    return std::exp(-params.alpha * thw);
}

/// Probability of returning from the left lane given the distance ahead of the
/// overtaken vehicle; d is clamped into [0, d_max].
inline double p_change_from_left(double d, const DecisionParams& params) {
    const double clamped = std::clamp(d, 0.0, params.d_max);
    return std::log1p(params.beta * clamped) / std::log1p(params.beta * params.d_max);
}

inline double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Mass of N(0, sigma) over [offset - delta/2, offset + delta/2].
inline double gaussian_interval_mass(double offset, const DecisionParams& params) {
    if (!(params.sigma > 0.0)) throw DomainError("gaussian_interval_mass: sigma must be > 0");
    const double hi = (offset + params.delta / 2.0) / params.sigma;
    const double lo = (offset - params.delta / 2.0) / params.sigma;
    // Evaluate in the tail that keeps precision.
    if (lo > 0.0) return 0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2));
    if (hi < 0.0) return 0.5 * (std::erfc(-hi / std::numbers::sqrt2) - std::erfc(-lo / std::numbers::sqrt2));
    return standard_normal_cdf(hi) - standard_normal_cdf(lo);
}

/// Noiseless lane-change probability for a perceived distance d.
/// Lane 0 converts d into a headway with the true ego speed.
inline double lane_change_probability(double d, double v, int lane, const DecisionParams& params,
                                      double thw_cap) {
    const double clamped = std::clamp(d, 0.0, params.d_max);
    if (lane == 0) {
        const double thw = v > 1e-9 ? std::min(clamped / v, thw_cap) : thw_cap;
        return p_change_from_right(thw, params);
    }
    return p_change_from_left(clamped, params);
}

/// Gaussian weights of the perception-noise window, computed once per
/// parameter set.
struct NoiseWindow {
    std::vector<double> offsets;
    std::vector<double> masses;
    double total_mass = 0.0;

    explicit NoiseWindow(const DecisionParams& params) {
        if (params.sigma < kNoiselessSigma) return;
        for (int i = -params.window; i <= params.window; ++i) {
            const double offset = static_cast<double>(i) * params.delta;
            offsets.push_back(offset);
            masses.push_back(gaussian_interval_mass(offset, params));
            total_mass += masses.back();
        }
    }

    bool noiseless() const { return offsets.empty() || !(total_mass > 0.0); }
};

inline double smoothed_probability(double d, double v, int lane, const NoiseWindow& window,
                                   const DecisionParams& params, double thw_cap) {
    if (window.noiseless()) return lane_change_probability(d, v, lane, params, thw_cap);
    double weighted = 0.0;
    for (std::size_t i = 0; i < window.offsets.size(); ++i) {
        weighted += window.masses[i] *
                    lane_change_probability(d + window.offsets[i], v, lane, params, thw_cap);
    }
    return std::clamp(weighted / window.total_mass, 0.0, 1.0);
}

/// Lane-change probability averaged over the truncated perception noise on
/// d, renormalized by the captured Gaussian mass.
inline double noisy_decision_prob(double d, double v, int lane, const DecisionParams& params,
                                  double thw_cap = 10.0) {
    return smoothed_probability(d, v, lane, NoiseWindow(params), params, thw_cap);
}

/// Precomputed decision table with columns lane,d,v,p_lc.
inline void write_decision_table_csv(std::ostream& out, std::span<const double> distances,
                                     std::span<const double> speeds, const DecisionParams& params,
                                     double thw_cap = 10.0) {
    const NoiseWindow window(params);
    out << "lane,d,v,p_lc\n";
    char buf[64];
    for (int lane = 0; lane <= 1; ++lane) {
        for (double d : distances) {
            for (double v : speeds) {
                std::snprintf(buf, sizeof buf, "%.17g", smoothed_probability(d, v, lane, window, params, thw_cap));
                out << lane << ',' << d << ',' << v << ',' << buf << '\n';
            }
        }
    }
}

}  // namespace adasynth
