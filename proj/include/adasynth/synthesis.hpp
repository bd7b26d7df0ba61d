#pragma once

// Optimal memoryless ADAS policies and the closed-loop chain they induce.

#include <deque>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "adasynth/abstraction.hpp"
#include "adasynth/errors.hpp"
#include "adasynth/model.hpp"
#include "adasynth/pctl/checker.hpp"
#include "adasynth/pctl/formula.hpp"

namespace adasynth {

/// Memoryless deterministic policy: a local choice index per state.
struct Policy {
    static constexpr std::size_t kUndefined = std::numeric_limits<std::size_t>::max();

    std::vector<std::size_t> choice;
    std::string formula;
    pctl::Direction direction = pctl::Direction::Max;
    double value = 0.0;

    bool defined(StateIndex s) const { return s < choice.size() && choice[s] != kUndefined; }
    bool operator==(const Policy&) const = default;
};

struct Synthesis {
    Policy policy;
    pctl::VerificationResult result;
};

/// Runs the extremal check and keeps the optimizing choice of every state.
/// Step-bounded objectives are rejected because memoryless policies are not
/// optimal for them in general.
inline Synthesis synthesize(const Mdp& model, const pctl::StateFormula& f, pctl::Direction direction,
                            const pctl::SolverOptions& options = {}) {
    const auto* prob = std::get_if<pctl::Probability>(&f.node);
    if (!prob) throw VerificationError("synthesis needs a P operator at the top of the formula");
    const pctl::Until until = pctl::as_until(*prob->path);
    const bool bounded = std::holds_alternative<pctl::Next>(prob->path->node) || until.step_bound;
    if (bounded) {
        throw VerificationError("synthesis supports unbounded until/eventually objectives only");
    }
    Synthesis out;
    out.result = pctl::check_mdp(model, f, direction, options);
    out.policy.choice = out.result.scheduler;
    out.policy.formula = out.result.formula;
    out.policy.direction = out.result.direction.value_or(direction);
    out.policy.value = out.result.initial_probability;
    return out;
}

/// The chain whose rows are the policy's distributions. Only states
/// reachable under the policy need a defined choice; the others fall back
/// to their first choice.
inline MarkovChain induce_mc(const Mdp& model, const Policy& pi) {
    const std::size_t n = model.num_states();
    auto choice_of = [&](StateIndex s) -> std::optional<std::size_t> {
        if (!pi.defined(s) || pi.choice[s] >= model.num_choices(s)) return std::nullopt;
        return pi.choice[s];
    };
    StateSet reached(n, false);
    std::deque<StateIndex> queue{model.initial()};
    reached[model.initial()] = true;
    while (!queue.empty()) {
        const StateIndex s = queue.front();
        queue.pop_front();
        const auto c = choice_of(s);
        if (!c) {
            throw PolicyDomainError("policy has no valid action for reachable state " +
                                    std::to_string(s));
        }
        for (const auto& t : model.distribution(model.first_choice(s) + *c)) {
            if (!reached[t.target]) {
                reached[t.target] = true;
                queue.push_back(t.target);
            }
        }
    }
    MarkovChain mc;
    for (StateIndex s = 0; s < n; ++s) {
        const std::size_t local = choice_of(s).value_or(0);
        const auto dist = model.distribution(model.first_choice(s) + local);
        mc.add_state(std::vector<Transition>(dist.begin(), dist.end()));
    }
    mc.set_initial(model.initial());
    mc.labels() = model.labels();
    return mc;
}

/// Policy table: one row per non-absorbing state with more than one action.
inline void write_policy_csv(std::ostream& out, const AbstractMdp& abs, const Policy& pi,
                             const std::vector<double>& values) {
    const Grid grid(abs.scenario, abs.params);
    out << "state,mu,x,lambda,a,v,t,pending,gain,action,value\n";
    for (StateIndex s = 0; s < abs.num_states(); ++s) {
        if (abs.model.num_choices(s) < 2 || !pi.defined(s)) continue;
        const AbstractState& st = abs.states[s];
        const std::size_t c = abs.model.first_choice(s) + pi.choice[s];
        out << s << ',' << static_cast<int>(st.mu) << ',' << pctl::format_number(grid.x_of(st.x))
            << ',' << st.lambda << ',' << pctl::format_number(grid.a_of(st.a)) << ','
            << pctl::format_number(grid.v_of(st.v)) << ',' << pctl::format_number(grid.t_of(st.t))
            << ',' << to_string(st.pending) << ',' << st.gain << ','
            << abs.model.action_names()[abs.model.choice_action(c)] << ','
            << pctl::format_number(values.at(s)) << '\n';
    }
}

}  // namespace adasynth
