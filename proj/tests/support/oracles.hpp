#pragma once

// Reference computations that share no code with the checker: explicit path
// enumeration, dense Gaussian elimination and exhaustive policy enumeration.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "adasynth/model.hpp"

namespace oracle {

using adasynth::Labels;
using adasynth::MarkovChain;
using adasynth::Mdp;
using adasynth::StateSet;
using adasynth::Transition;

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) throw std::runtime_error("singular system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Dense transition matrix of a chain.
inline Matrix dense(const MarkovChain& mc) {
    const std::size_t n = mc.num_states();
    Matrix p(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& t : mc.row(s)) p[s][t.target] += t.probability;
    }
    return p;
}

/// Probability of sat1 U<=k sat2 from `s`, summing the mass of every path
/// of length <= k explicitly.
inline double paths_bounded_until(const Matrix& p, const StateSet& sat1, const StateSet& sat2,
                                  std::size_t s, unsigned k) {
    if (sat2[s]) return 1.0;
    if (k == 0 || !sat1[s]) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (p[s][t] > 0.0) total += p[s][t] * paths_bounded_until(p, sat1, sat2, t, k - 1);
    }
    return total;
}

/// Unbounded until: states that cannot reach sat2 through sat1 are 0, the
/// rest solve x = P x with x = 1 on sat2.
inline std::vector<double> linear_until(const Matrix& p, const StateSet& sat1, const StateSet& sat2) {
    const std::size_t n = p.size();
    std::vector<bool> can(n, false);
    for (std::size_t s = 0; s < n; ++s) can[s] = sat2[s];
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (can[s] || !sat1[s]) continue;
            for (std::size_t t = 0; t < n; ++t) {
                if (p[s][t] > 0.0 && can[t]) {
                    can[s] = changed = true;
                    break;
                }
            }
        }
    }
    Matrix a(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        a[s][s] = 1.0;
        if (sat2[s]) {
            b[s] = 1.0;
        } else if (can[s]) {
            for (std::size_t t = 0; t < n; ++t) a[s][t] -= p[s][t];
        }
    }
    return solve(a, b);
}

inline std::vector<double> next(const Matrix& p, const StateSet& sat) {
    std::vector<double> out(p.size(), 0.0);
    for (std::size_t s = 0; s < p.size(); ++s) {
        for (std::size_t t = 0; t < p.size(); ++t) {
            if (sat[t]) out[s] += p[s][t];
        }
    }
    return out;
}

/// The chain obtained by fixing local choice policy[s] in every state.
inline Matrix dense_under(const Mdp& mdp, const std::vector<std::size_t>& policy) {
    const std::size_t n = mdp.num_states();
    Matrix p(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& t : mdp.distribution(mdp.first_choice(s) + policy[s])) p[s][t.target] += t.probability;
    }
    return p;
}

/// Calls fn on every memoryless deterministic policy.
inline void for_each_policy(const Mdp& mdp, const std::function<void(const std::vector<std::size_t>&)>& fn) {
    const std::size_t n = mdp.num_states();
    std::vector<std::size_t> policy(n, 0);
    while (true) {
        fn(policy);
        std::size_t s = 0;
        while (s < n && ++policy[s] == mdp.num_choices(s)) policy[s++] = 0;
        if (s == n) return;
    }
}

/// Best unbounded-until value per state over all memoryless policies.
inline std::vector<double> policy_until(const Mdp& mdp, const StateSet& sat1, const StateSet& sat2, bool maximize) {
    std::vector<double> best(mdp.num_states(), maximize ? -1.0 : 2.0);
    for_each_policy(mdp, [&](const std::vector<std::size_t>& pol) {
        const auto v = linear_until(dense_under(mdp, pol), sat1, sat2);
        for (std::size_t s = 0; s < v.size(); ++s) best[s] = maximize ? std::max(best[s], v[s]) : std::min(best[s], v[s]);
    });
    return best;
}

/// Value of a memoryless policy for unbounded until.
inline std::vector<double> policy_value(const Mdp& mdp, const std::vector<std::size_t>& pol,
                                        const StateSet& sat1, const StateSet& sat2) {
    return linear_until(dense_under(mdp, pol), sat1, sat2);
}

/// Step-bounded until over all history-dependent schedulers: the choice is
/// re-optimized at every node of the path tree.
inline double tree_bounded_until(const Mdp& mdp, const StateSet& sat1, const StateSet& sat2, std::size_t s,
                                 unsigned k, bool maximize) {
    if (sat2[s]) return 1.0;
    if (k == 0 || !sat1[s]) return 0.0;
    double best = maximize ? -1.0 : 2.0;
    for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
        double v = 0.0;
        for (const auto& t : mdp.distribution(c)) {
            v += t.probability * tree_bounded_until(mdp, sat1, sat2, t.target, k - 1, maximize);
        }
        best = maximize ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

inline double extremal_next(const Mdp& mdp, const StateSet& sat, std::size_t s, bool maximize) {
    double best = maximize ? -1.0 : 2.0;
    for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
        double v = 0.0;
        for (const auto& t : mdp.distribution(c)) v += sat[t.target] ? t.probability : 0.0;
        best = maximize ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Random models

/// Random distribution over 1..3 targets, with probabilities that are exact
/// multiples of 1/8 half of the time (exercises exact ties).
inline std::vector<Transition> random_distribution(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<int> count(1, 3);
    const int m = count(rng);
    std::vector<double> w(m);
    const bool dyadic = rng() % 2 == 0;
    double total = 0.0;
    for (auto& x : w) {
        x = dyadic ? static_cast<double>(1 + rng() % 4) : std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        total += x;
    }
    std::vector<Transition> row;
    double used = 0.0;
    for (int i = 0; i < m; ++i) {
        const double p = i + 1 == m ? 1.0 - used : w[i] / total;
        used += p;
        const std::size_t target = pick(rng);
        bool merged = false;
        for (auto& t : row) {
            if (t.target == target) {
                t.probability += p;
                merged = true;
            }
        }
        if (!merged) row.push_back({target, p});
    }
    return row;
}

inline Labels random_labels(std::mt19937_64& rng, std::size_t n) {
    // "a" dense but not universal, "b" sparse.
    Labels labels{{"a", StateSet(n, false)}, {"b", StateSet(n, false)}};
    for (std::size_t s = 0; s < n; ++s) {
        labels["b"][s] = rng() % 4 == 0;
        labels["a"][s] = rng() % 4 != 0;
    }
    return labels;
}

inline MarkovChain random_mc(std::mt19937_64& rng, std::size_t n) {
    MarkovChain mc;
    for (std::size_t s = 0; s < n; ++s) mc.add_state(random_distribution(rng, n));
    mc.set_initial(0);
    mc.labels() = random_labels(rng, n);
    mc.validate();
    return mc;
}

inline Mdp random_mdp(std::mt19937_64& rng, std::size_t n, std::size_t max_actions) {
    Mdp mdp;
    const auto a = mdp.action_id("a");
    const auto b = mdp.action_id("b");
    for (std::size_t s = 0; s < n; ++s) {
        mdp.begin_state();
        const std::size_t k = 1 + rng() % max_actions;
        for (std::size_t c = 0; c < k; ++c) mdp.add_choice(c == 0 ? a : b, random_distribution(rng, n));
    }
    mdp.set_initial(0);
    mdp.labels() = random_labels(rng, n);
    mdp.validate();
    return mdp;
}

}  // namespace oracle
