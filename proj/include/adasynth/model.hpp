#pragma once

// Explicit-state Markov chains and MDPs in compressed sparse row layout.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adasynth/errors.hpp"

namespace adasynth {

using StateIndex = std::size_t;
using StateSet = std::vector<bool>;
/// Atomic proposition name -> member states.
using Labels = std::map<std::string, StateSet>;

inline constexpr double kStochasticTolerance = 1e-9;

struct Transition {
    StateIndex target = 0;
    double probability = 0.0;

    bool operator==(const Transition&) const = default;
};

namespace detail {

inline void check_distribution(std::span<const Transition> row, std::size_t num_states,
                               const std::string& where) {
    double sum = 0.0;
    for (const auto& t : row) {
        if (t.target >= num_states) throw InvalidStateError(where + ": transition target out of range");
        if (!(t.probability >= 0.0 && t.probability <= 1.0 + kStochasticTolerance)) {
            throw InvalidStateError(where + ": probability outside [0,1]");
        }
        sum += t.probability;
    }
    if (row.empty() || std::abs(sum - 1.0) > kStochasticTolerance) {
        throw InvalidStateError(where + ": distribution sums to " + std::to_string(sum));
    }
}

inline void check_labels(const Labels& labels, std::size_t num_states) {
    for (const auto& [name, set] : labels) {
        if (set.size() != num_states) throw InvalidStateError("label '" + name + "' has wrong size");
    }
}

}  // namespace detail

class MarkovChain {
public:
    MarkovChain() = default;

    StateIndex add_state(std::vector<Transition> row) {
        const StateIndex s = num_states();
        for (auto& t : row) entries_.push_back(t);
        row_start_.push_back(entries_.size());
        return s;
    }

    /// Checks row stochasticity, label sizes, and the initial state.
    void validate() const {
        if (num_states() == 0) throw InvalidStateError("markov chain has no states");
        if (initial_ >= num_states()) throw InvalidStateError("initial state out of range");
        for (StateIndex s = 0; s < num_states(); ++s) {
            detail::check_distribution(row(s), num_states(), "state " + std::to_string(s));
        }
        detail::check_labels(labels_, num_states());
    }

    std::size_t num_states() const { return row_start_.size() - 1; }
    std::size_t num_transitions() const { return entries_.size(); }

    std::span<const Transition> row(StateIndex s) const {
        return {entries_.data() + row_start_[s], row_start_[s + 1] - row_start_[s]};
    }

    StateIndex initial() const { return initial_; }
    void set_initial(StateIndex s) { initial_ = s; }

    const Labels& labels() const { return labels_; }
    Labels& labels() { return labels_; }

    bool operator==(const MarkovChain&) const = default;

private:
    std::vector<std::size_t> row_start_{0};
    std::vector<Transition> entries_;
    StateIndex initial_ = 0;
    Labels labels_;
};

/// One nondeterministic choice of a state: an action label and its distribution.
struct Choice {
    std::size_t action = 0;  ///< index into Mdp::action_names()
    std::span<const Transition> distribution;
};

class Mdp {
public:
    Mdp() = default;

    /// Registers an action name, returning its id (existing ids are reused).
    std::size_t action_id(const std::string& name) {
        for (std::size_t i = 0; i < action_names_.size(); ++i) {
            if (action_names_[i] == name) return i;
        }
        action_names_.push_back(name);
        return action_names_.size() - 1;
    }

    /// Starts a new state; subsequent add_choice calls attach to it.
    StateIndex begin_state() {
        state_start_.push_back(choice_action_.size());
        return state_start_.size() - 1;
    }

    void add_choice(std::size_t action, const std::vector<Transition>& distribution) {
        if (state_start_.empty()) throw InvalidStateError("add_choice before begin_state");
        choice_action_.push_back(action);
        for (const auto& t : distribution) entries_.push_back(t);
        choice_start_.push_back(entries_.size());
    }

    void validate() const {
        if (num_states() == 0) throw InvalidStateError("mdp has no states");
        if (initial_ >= num_states()) throw InvalidStateError("initial state out of range");
        for (StateIndex s = 0; s < num_states(); ++s) {
            if (num_choices(s) == 0) {
                throw InvalidStateError("state " + std::to_string(s) + " has no actions");
            }
            for (std::size_t c = first_choice(s); c < end_choice(s); ++c) {
                if (choice_action_[c] >= action_names_.size()) {
                    throw InvalidStateError("choice references unknown action");
                }
                detail::check_distribution(distribution(c), num_states(),
                                           "state " + std::to_string(s) + " choice " +
                                               std::to_string(c - first_choice(s)));
            }
        }
        detail::check_labels(labels_, num_states());
    }

    std::size_t num_states() const { return state_start_.size(); }
    std::size_t num_choices() const { return choice_action_.size(); }
    std::size_t num_transitions() const { return entries_.size(); }

    std::size_t first_choice(StateIndex s) const { return state_start_[s]; }
    std::size_t end_choice(StateIndex s) const {
        return s + 1 < state_start_.size() ? state_start_[s + 1] : choice_action_.size();
    }
    std::size_t num_choices(StateIndex s) const { return end_choice(s) - first_choice(s); }

    std::span<const Transition> distribution(std::size_t choice) const {
        return {entries_.data() + choice_start_[choice],
                choice_start_[choice + 1] - choice_start_[choice]};
    }
    std::size_t choice_action(std::size_t choice) const { return choice_action_[choice]; }
    Choice choice(std::size_t c) const { return {choice_action_[c], distribution(c)}; }

    const std::vector<std::string>& action_names() const { return action_names_; }

    StateIndex initial() const { return initial_; }
    void set_initial(StateIndex s) { initial_ = s; }

    const Labels& labels() const { return labels_; }
    Labels& labels() { return labels_; }

    bool operator==(const Mdp&) const = default;

private:
    std::vector<std::size_t> state_start_;
    std::vector<std::size_t> choice_action_;
    std::vector<std::size_t> choice_start_{0};
    std::vector<Transition> entries_;
    std::vector<std::string> action_names_;
    StateIndex initial_ = 0;
    Labels labels_;
};

/// Sets of states: small helpers used by the checkers.
inline StateSet all_states(std::size_t n) { return StateSet(n, true); }
inline StateSet no_states(std::size_t n) { return StateSet(n, false); }

}  // namespace adasynth
