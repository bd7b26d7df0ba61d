#pragma once

// Quantitative PCTL model checking over explicit Markov chains and MDPs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "adasynth/errors.hpp"
#include "adasynth/model.hpp"
#include "adasynth/pctl/formula.hpp"

namespace adasynth::pctl {

struct SolverOptions {
    /// Gauss-Seidel stops once no state value moves by more than this.
    double tolerance = 1e-12;
    std::size_t max_sweeps = 1'000'000;
};

struct NumericResult {
    std::vector<double> values;
    std::size_t iterations = 0;
    double residual = 0.0;
    /// MDP only: optimizing local choice index per state.
    std::vector<std::size_t> scheduler;
};

struct VerificationResult {
    std::string formula;
    std::optional<Direction> direction;
    std::vector<double> probabilities;
    double initial_probability = 0.0;
    /// Present for bounded P operators and for purely boolean formulas.
    std::optional<StateSet> satisfaction;
    /// MDP only: optimizing local choice index per state.
    std::vector<std::size_t> scheduler;
    std::size_t iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline StateSet set_and(const StateSet& a, const StateSet& b) {
    StateSet out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
    return out;
}

inline StateSet set_not(const StateSet& a) {
    StateSet out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = !a[i];
    return out;
}

inline StateSet set_or(const StateSet& a, const StateSet& b) {
    StateSet out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] || b[i];
    return out;
}

/// Reverse adjacency: for each target the (source, choice) pairs with a
/// positive-probability edge into it. For Markov chains choice == source.
struct Predecessors {
    std::vector<std::size_t> start;
    std::vector<std::pair<StateIndex, std::size_t>> entries;

    std::span<const std::pair<StateIndex, std::size_t>> of(StateIndex t) const {
        return {entries.data() + start[t], start[t + 1] - start[t]};
    }
};

inline Predecessors predecessors(const MarkovChain& mc) {
    const std::size_t n = mc.num_states();
    Predecessors out;
    out.start.assign(n + 1, 0);
    for (StateIndex s = 0; s < n; ++s) {
        for (const auto& t : mc.row(s)) {
            if (t.probability > 0.0) ++out.start[t.target + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) out.start[i + 1] += out.start[i];
    out.entries.resize(out.start[n]);
    std::vector<std::size_t> fill(out.start.begin(), out.start.end() - 1);
    for (StateIndex s = 0; s < n; ++s) {
        for (const auto& t : mc.row(s)) {
            if (t.probability > 0.0) out.entries[fill[t.target]++] = {s, s};
        }
    }
    return out;
}

inline Predecessors predecessors(const Mdp& mdp) {
    const std::size_t n = mdp.num_states();
    Predecessors out;
    out.start.assign(n + 1, 0);
    for (StateIndex s = 0; s < n; ++s) {
        for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
            for (const auto& t : mdp.distribution(c)) {
                if (t.probability > 0.0) ++out.start[t.target + 1];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) out.start[i + 1] += out.start[i];
    out.entries.resize(out.start[n]);
    std::vector<std::size_t> fill(out.start.begin(), out.start.end() - 1);
    for (StateIndex s = 0; s < n; ++s) {
        for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
            for (const auto& t : mdp.distribution(c)) {
                if (t.probability > 0.0) out.entries[fill[t.target]++] = {s, c};
            }
        }
    }
    return out;
}

/// States that can reach `targets` moving only through `through` states.
/// Every target is included.
inline StateSet backward_reach(const Predecessors& pred, const StateSet& targets,
                               const StateSet& through) {
    StateSet reached = targets;
    std::deque<StateIndex> queue;
    for (StateIndex s = 0; s < targets.size(); ++s) {
        if (targets[s]) queue.push_back(s);
    }
    while (!queue.empty()) {
        const StateIndex t = queue.front();
        queue.pop_front();
        for (const auto& [s, c] : pred.of(t)) {
            if (!reached[s] && through[s]) {
                reached[s] = true;
                queue.push_back(s);
            }
        }
    }
    return reached;
}

inline double dot(std::span<const Transition> row, const std::vector<double>& x) {
    double sum = 0.0;
    for (const auto& t : row) sum += t.probability * x[t.target];
    return sum;
}

inline bool better(double candidate, double incumbent, Direction dir) {
    return dir == Direction::Max ? candidate > incumbent : candidate < incumbent;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Markov chains

inline std::vector<double> prob_next(const MarkovChain& mc, const StateSet& sat) {
    std::vector<double> indicator(mc.num_states());
    for (StateIndex s = 0; s < mc.num_states(); ++s) indicator[s] = sat[s] ? 1.0 : 0.0;
    std::vector<double> out(mc.num_states());
    for (StateIndex s = 0; s < mc.num_states(); ++s) out[s] = detail::dot(mc.row(s), indicator);
    return out;
}

inline std::vector<double> prob_bounded_until(const MarkovChain& mc, const StateSet& sat1,
                                              const StateSet& sat2, unsigned k) {
    const std::size_t n = mc.num_states();
    std::vector<double> x(n), next(n);
    for (StateIndex s = 0; s < n; ++s) x[s] = sat2[s] ? 1.0 : 0.0;
    for (unsigned step = 0; step < k; ++step) {
        for (StateIndex s = 0; s < n; ++s) {
            if (sat2[s]) next[s] = 1.0;
            else if (!sat1[s]) next[s] = 0.0;
            else next[s] = detail::dot(mc.row(s), x);
        }
        x.swap(next);
    }
    return x;
}

/// States with probability exactly 0 and exactly 1 for sat1 U sat2.
struct QualitativeSets {
    StateSet zero;
    StateSet one;
};

inline QualitativeSets prob01(const MarkovChain& mc, const StateSet& sat1, const StateSet& sat2) {
    const auto pred = detail::predecessors(mc);
    const StateSet can_reach = detail::backward_reach(pred, sat2, sat1);
    QualitativeSets out;
    out.zero = detail::set_not(can_reach);
    const StateSet transient = detail::set_and(sat1, detail::set_not(sat2));
    out.one = detail::set_not(detail::backward_reach(pred, out.zero, transient));
    return out;
}

inline NumericResult prob_until(const MarkovChain& mc, const StateSet& sat1, const StateSet& sat2,
                                const SolverOptions& options = {}) {
    const std::size_t n = mc.num_states();
    const QualitativeSets q = prob01(mc, sat1, sat2);
    NumericResult out;
    out.values.assign(n, 0.0);
    std::vector<StateIndex> maybe;
    for (StateIndex s = n; s-- > 0;) {
        if (q.one[s]) out.values[s] = 1.0;
        else if (!q.zero[s]) maybe.push_back(s);
    }
    if (maybe.empty()) return out;
    for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double change = 0.0;
        for (StateIndex s : maybe) {
            const double updated = detail::dot(mc.row(s), out.values);
            change = std::max(change, std::abs(updated - out.values[s]));
            out.values[s] = updated;
        }
        out.iterations = sweep;
        out.residual = change;
        if (change < options.tolerance) return out;
    }
    throw IterationLimitError("value iteration did not converge within " +
                                  std::to_string(options.max_sweeps) + " sweeps (residual " +
                                  std::to_string(out.residual) + ")",
                              out.residual);
}

// --------------------------------------------------------------------------
// MDPs

inline NumericResult mdp_prob_next(const Mdp& mdp, const StateSet& sat, Direction dir) {
    const std::size_t n = mdp.num_states();
    std::vector<double> indicator(n);
    for (StateIndex s = 0; s < n; ++s) indicator[s] = sat[s] ? 1.0 : 0.0;
    NumericResult out;
    out.values.assign(n, 0.0);
    out.scheduler.assign(n, 0);
    for (StateIndex s = 0; s < n; ++s) {
        double best = 0.0;
        for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
            const double q = detail::dot(mdp.distribution(c), indicator);
            if (c == mdp.first_choice(s) || detail::better(q, best, dir)) {
                best = q;
                out.scheduler[s] = c - mdp.first_choice(s);
            }
        }
        out.values[s] = best;
    }
    return out;
}

/// k Jacobi steps of the extremal bounded-until recurrence. The returned
/// scheduler is the optimal first-step choice for the full horizon.
inline NumericResult mdp_prob_bounded_until(const Mdp& mdp, const StateSet& sat1,
                                            const StateSet& sat2, unsigned k, Direction dir) {
    const std::size_t n = mdp.num_states();
    NumericResult out;
    out.values.assign(n, 0.0);
    out.scheduler.assign(n, 0);
    for (StateIndex s = 0; s < n; ++s) out.values[s] = sat2[s] ? 1.0 : 0.0;
    std::vector<double> next(n);
    for (unsigned step = 0; step < k; ++step) {
        for (StateIndex s = 0; s < n; ++s) {
            if (sat2[s]) {
                next[s] = 1.0;
                continue;
            }
            if (!sat1[s]) {
                next[s] = 0.0;
                continue;
            }
            double best = 0.0;
            for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
                const double q = detail::dot(mdp.distribution(c), out.values);
                if (c == mdp.first_choice(s) || detail::better(q, best, dir)) {
                    best = q;
                    out.scheduler[s] = c - mdp.first_choice(s);
                }
            }
            next[s] = best;
        }
        out.values.swap(next);
    }
    out.iterations = k;
    return out;
}

/// Qualitative precomputation for extremal sat1 U sat2.
inline QualitativeSets mdp_prob01(const Mdp& mdp, const StateSet& sat1, const StateSet& sat2,
                                  Direction dir, const detail::Predecessors& pred) {
    const std::size_t n = mdp.num_states();
    const StateSet transient = detail::set_and(sat1, detail::set_not(sat2));
    QualitativeSets out;
    std::deque<StateIndex> queue;
    if (dir == Direction::Max) {
        // Some scheduler reaches with positive probability.
        out.zero = detail::set_not(detail::backward_reach(pred, sat2, sat1));
        // Greatest fixed point over u of: states with a choice that stays in
        // u and reaches sat2 inside u (states with max probability 1).
        StateSet u = detail::set_not(out.zero);
        std::vector<bool> inside(mdp.num_choices());
        while (true) {
            for (StateIndex s = 0; s < n; ++s) {
                for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
                    bool ok = true;
                    for (const auto& t : mdp.distribution(c)) {
                        if (t.probability > 0.0 && !u[t.target]) {
                            ok = false;
                            break;
                        }
                    }
                    inside[c] = ok;
                }
            }
            StateSet r = sat2;
            for (StateIndex s = 0; s < n; ++s) {
                if (r[s]) queue.push_back(s);
            }
            while (!queue.empty()) {
                const StateIndex t = queue.front();
                queue.pop_front();
                for (const auto& [s, c] : pred.of(t)) {
                    if (!r[s] && transient[s] && u[s] && inside[c]) {
                        r[s] = true;
                        queue.push_back(s);
                    }
                }
            }
            if (r == u) break;
            u = std::move(r);
        }
        out.one = std::move(u);
    } else {
        // Least fixed point: states where every choice reaches r with
        // positive probability (min probability > 0).
        StateSet r = sat2;
        std::vector<bool> hits(mdp.num_choices(), false);
        std::vector<std::size_t> missing(n);
        for (StateIndex s = 0; s < n; ++s) {
            missing[s] = mdp.num_choices(s);
            if (r[s]) queue.push_back(s);
        }
        while (!queue.empty()) {
            const StateIndex t = queue.front();
            queue.pop_front();
            for (const auto& [s, c] : pred.of(t)) {
                if (hits[c]) continue;
                hits[c] = true;
                if (--missing[s] == 0 && !r[s] && transient[s]) {
                    r[s] = true;
                    queue.push_back(s);
                }
            }
        }
        out.zero = detail::set_not(r);
        out.one = detail::set_not(detail::backward_reach(pred, out.zero, transient));
    }
    return out;
}

namespace detail {

/// Picks, among value-optimal choices, ones that make progress toward sat2
/// (attractor construction); needed for maximizing schedulers in the
/// presence of end components.
inline std::vector<std::size_t> max_reach_scheduler(const Mdp& mdp, const StateSet& sat2,
                                                    const std::vector<double>& values,
                                                    const Predecessors& pred) {
    constexpr double kOptimalSlack = 1e-9;
    const std::size_t n = mdp.num_states();
    std::vector<std::size_t> scheduler(n, 0);
    StateSet assigned(n, false);
    auto optimal = [&](StateIndex s, std::size_t c) {
        return dot(mdp.distribution(c), values) >= values[s] - kOptimalSlack;
    };
    std::deque<StateIndex> queue;
    for (StateIndex s = 0; s < n; ++s) {
        if (sat2[s]) {
            assigned[s] = true;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const StateIndex t = queue.front();
        queue.pop_front();
        for (const auto& [s, c] : pred.of(t)) {
            if (assigned[s] || values[s] <= 0.0) continue;
            // Lowest-index optimal choice that enters the attractor.
            for (std::size_t d = mdp.first_choice(s); d < mdp.end_choice(s); ++d) {
                bool enters = false;
                for (const auto& tr : mdp.distribution(d)) {
                    if (tr.probability > 0.0 && assigned[tr.target]) {
                        enters = true;
                        break;
                    }
                }
                if (enters && optimal(s, d)) {
                    scheduler[s] = d - mdp.first_choice(s);
                    assigned[s] = true;
                    queue.push_back(s);
                    break;
                }
            }
        }
    }
    return scheduler;
}

inline std::vector<std::size_t> greedy_scheduler(const Mdp& mdp, const std::vector<double>& values,
                                                 Direction dir) {
    std::vector<std::size_t> scheduler(mdp.num_states(), 0);
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        double best = 0.0;
        for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
            const double q = dot(mdp.distribution(c), values);
            if (c == mdp.first_choice(s) || better(q, best, dir)) {
                best = q;
                scheduler[s] = c - mdp.first_choice(s);
            }
        }
    }
    return scheduler;
}

}  // namespace detail

inline NumericResult mdp_prob_until(const Mdp& mdp, const StateSet& sat1, const StateSet& sat2,
                                    Direction dir, const SolverOptions& options = {}) {
    const std::size_t n = mdp.num_states();
    const auto pred = detail::predecessors(mdp);
    const QualitativeSets q = mdp_prob01(mdp, sat1, sat2, dir, pred);
    NumericResult out;
    out.values.assign(n, 0.0);
    std::vector<StateIndex> maybe;
    for (StateIndex s = n; s-- > 0;) {
        if (q.one[s]) out.values[s] = 1.0;
        else if (!q.zero[s]) maybe.push_back(s);
    }
    bool converged = maybe.empty();
    for (std::size_t sweep = 1; !converged && sweep <= options.max_sweeps; ++sweep) {
        double change = 0.0;
        for (StateIndex s : maybe) {
            double best = 0.0;
            for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
                const double value = detail::dot(mdp.distribution(c), out.values);
                if (c == mdp.first_choice(s) || detail::better(value, best, dir)) best = value;
            }
            change = std::max(change, std::abs(best - out.values[s]));
            out.values[s] = best;
        }
        out.iterations = sweep;
        out.residual = change;
        converged = change < options.tolerance;
    }
    if (!converged) {
        throw IterationLimitError("value iteration did not converge within " +
                                      std::to_string(options.max_sweeps) + " sweeps (residual " +
                                      std::to_string(out.residual) + ")",
                                  out.residual);
    }
    out.scheduler = dir == Direction::Max ? detail::max_reach_scheduler(mdp, sat2, out.values, pred)
                                          : detail::greedy_scheduler(mdp, out.values, dir);
    return out;
}

// --------------------------------------------------------------------------
// Formula evaluation

namespace detail {

inline const StateSet& lookup_label(const Labels& labels, const std::string& name) {
    auto it = labels.find(name);
    if (it == labels.end()) {
        throw VerificationError("proposition '" + name + "' is not labeled in the model");
    }
    return it->second;
}

inline Direction universal_direction(Comparison op) {
    // P>=p holds for all schedulers iff the minimum satisfies it.
    return (op == Comparison::Greater || op == Comparison::GreaterEqual) ? Direction::Min
                                                                        : Direction::Max;
}

template <class Model>
class Evaluator {
public:
    Evaluator(const Model& model, const SolverOptions& options) : model_(model), options_(options) {}

    StateSet satisfy(const StateFormula& f) {
        const std::size_t n = model_.num_states();
        return std::visit(
            [&](const auto& node) -> StateSet {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, True>) {
                    return all_states(n);
                } else if constexpr (std::is_same_v<T, False>) {
                    return no_states(n);
                } else if constexpr (std::is_same_v<T, Atomic>) {
                    return lookup_label(model_.labels(), node.name);
                } else if constexpr (std::is_same_v<T, Threshold>) {
                    return lookup_label(model_.labels(), node.label());
                } else if constexpr (std::is_same_v<T, Not>) {
                    return set_not(satisfy(*node.operand));
                } else if constexpr (std::is_same_v<T, And>) {
                    return set_and(satisfy(*node.lhs), satisfy(*node.rhs));
                } else if constexpr (std::is_same_v<T, Or>) {
                    return set_or(satisfy(*node.lhs), satisfy(*node.rhs));
                } else {
                    if (!node.bound) {
                        throw VerificationError("nested P=? query has no truth value");
                    }
                    Direction dir = node.direction.value_or(universal_direction(node.bound->op));
                    const NumericResult r = path_probabilities(*node.path, dir);
                    StateSet out(n);
                    for (StateIndex s = 0; s < n; ++s) {
                        out[s] = compare(r.values[s], node.bound->op, node.bound->probability);
                    }
                    return out;
                }
            },
            f.node);
    }

    NumericResult path_probabilities(const PathFormula& path, Direction dir) {
        if (const auto* next = std::get_if<Next>(&path.node)) {
            const StateSet sat = satisfy(*next->operand);
            if constexpr (std::is_same_v<Model, MarkovChain>) {
                return NumericResult{prob_next(model_, sat), 0, 0.0, {}};
            } else {
                return mdp_prob_next(model_, sat, dir);
            }
        }
        const Until until = as_until(path);
        const StateSet sat1 = satisfy(*until.lhs);
        const StateSet sat2 = satisfy(*until.rhs);
        if constexpr (std::is_same_v<Model, MarkovChain>) {
            if (until.step_bound) {
                return NumericResult{prob_bounded_until(model_, sat1, sat2, *until.step_bound),
                                     *until.step_bound, 0.0, {}};
            }
            return prob_until(model_, sat1, sat2, options_);
        } else {
            if (until.step_bound) return mdp_prob_bounded_until(model_, sat1, sat2, *until.step_bound, dir);
            return mdp_prob_until(model_, sat1, sat2, dir, options_);
        }
    }

private:
    const Model& model_;
    SolverOptions options_;
};

template <class Model>
VerificationResult check(const Model& model, const StateFormula& f, std::optional<Direction> dir,
                         const SolverOptions& options) {
    Evaluator<Model> evaluator(model, options);
    VerificationResult result;
    result.formula = to_string(f);
    const std::size_t n = model.num_states();
    if (const auto* prob = std::get_if<Probability>(&f.node)) {
        Direction d = Direction::Max;
        if constexpr (std::is_same_v<Model, Mdp>) {
            d = prob->direction ? *prob->direction
                                : dir.value_or(prob->bound ? universal_direction(prob->bound->op)
                                                           : Direction::Max);
            result.direction = d;
        }
        NumericResult r = evaluator.path_probabilities(*prob->path, d);
        result.probabilities = std::move(r.values);
        result.scheduler = std::move(r.scheduler);
        result.iterations = r.iterations;
        result.residual = r.residual;
        if (prob->bound) {
            StateSet sat(n);
            for (StateIndex s = 0; s < n; ++s) {
                sat[s] = compare(result.probabilities[s], prob->bound->op, prob->bound->probability);
            }
            result.satisfaction = std::move(sat);
        }
    } else {
        StateSet sat = evaluator.satisfy(f);
        result.probabilities.resize(n);
        for (StateIndex s = 0; s < n; ++s) result.probabilities[s] = sat[s] ? 1.0 : 0.0;
        result.satisfaction = std::move(sat);
    }
    result.initial_probability = result.probabilities.at(model.initial());
    return result;
}

}  // namespace detail

inline VerificationResult check_mc(const MarkovChain& model, const StateFormula& f,
                                   const SolverOptions& options = {}) {
    return detail::check(model, f, std::nullopt, options);
}

/// Extremal probabilities over all schedulers. A direction written in the
/// formula (Pmax/Pmin) takes precedence over `direction`.
inline VerificationResult check_mdp(const Mdp& model, const StateFormula& f, Direction direction,
                                    const SolverOptions& options = {}) {
    return detail::check(model, f, direction, options);
}

/// True when the initial state satisfies the formula (always true for
/// quantitative queries).
inline bool initial_satisfied(const VerificationResult& r, StateIndex initial) {
    return !r.satisfaction || (*r.satisfaction)[initial];
}

}  // namespace adasynth::pctl
