#pragma once

// PCTL abstract syntax and its canonical concrete-syntax printer.

#include <charconv>
#include <memory>
#include <optional>
#include <string>
#include <system_error>
#include <variant>

namespace adasynth::pctl {

enum class Comparison { Less, LessEqual, Greater, GreaterEqual, Equal };
enum class Direction { Max, Min };

inline const char* to_string(Comparison c) {
    switch (c) {
        case Comparison::Less: return "<";
        case Comparison::LessEqual: return "<=";
        case Comparison::Greater: return ">";
        case Comparison::GreaterEqual: return ">=";
        case Comparison::Equal: return "=";
    }
    return "?";
}

inline const char* to_string(Direction d) { return d == Direction::Max ? "max" : "min"; }

inline bool compare(double lhs, Comparison c, double rhs) {
    switch (c) {
        case Comparison::Less: return lhs < rhs;
        case Comparison::LessEqual: return lhs <= rhs;
        case Comparison::Greater: return lhs > rhs;
        case Comparison::GreaterEqual: return lhs >= rhs;
        case Comparison::Equal: return lhs == rhs;
    }
    return false;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) return std::to_string(value);
    return std::string(buf, end);
}

struct StateFormula;
struct PathFormula;
using StatePtr = std::shared_ptr<const StateFormula>;
using PathPtr = std::shared_ptr<const PathFormula>;

struct True {};
struct False {};
/// A named proposition, written `"name"`.
struct Atomic {
    std::string name;
};
/// A comparison of a state variable with a constant, e.g. `(t<=21)`.
/// Resolved to a label at labeling time.
struct Threshold {
    std::string variable;
    Comparison op = Comparison::LessEqual;
    double value = 0.0;

    std::string label() const { return variable + to_string(op) + format_number(value); }
};
struct Not {
    StatePtr operand;
};
struct And {
    StatePtr lhs, rhs;
};
struct Or {
    StatePtr lhs, rhs;
};
struct Bound {
    Comparison op = Comparison::Less;
    double probability = 0.0;
};
/// P~p [ path ] or, without bound, the quantitative query P=? [ path ].
struct Probability {
    std::optional<Direction> direction;
    std::optional<Bound> bound;
    PathPtr path;
};

struct StateFormula {
    std::variant<True, False, Atomic, Threshold, Not, And, Or, Probability> node;
};

struct Next {
    StatePtr operand;
};
/// lhs U rhs, optionally step-bounded (U<=k).
struct Until {
    StatePtr lhs, rhs;
    std::optional<unsigned> step_bound;
};
/// F rhs, equivalent to true U rhs.
struct Eventually {
    StatePtr operand;
    std::optional<unsigned> step_bound;
};

struct PathFormula {
    std::variant<Next, Until, Eventually> node;
};

template <class Node>
StatePtr make_state(Node node) {
    return std::make_shared<const StateFormula>(StateFormula{std::move(node)});
}
template <class Node>
PathPtr make_path(Node node) {
    return std::make_shared<const PathFormula>(PathFormula{std::move(node)});
}

/// Normalizes F to until-form: returns (lhs, rhs, bound).
inline Until as_until(const PathFormula& path) {
    if (const auto* until = std::get_if<Until>(&path.node)) return *until;
    if (const auto* ev = std::get_if<Eventually>(&path.node)) {
        return Until{make_state(True{}), ev->operand, ev->step_bound};
    }
    return Until{};
}

namespace detail {

// Binding strength for parenthesization: or < and < unary/primary.
inline int precedence(const StateFormula& f) {
    if (std::holds_alternative<Or>(f.node)) return 1;
    if (std::holds_alternative<And>(f.node)) return 2;
    return 3;
}

inline std::string print(const StateFormula& f);

inline std::string print_operand(const StateFormula& f, int min_precedence) {
    std::string text = print(f);
    if (precedence(f) < min_precedence) return "(" + text + ")";
    return text;
}

inline std::string print_path(const PathFormula& p) {
    return std::visit(
        [](const auto& node) -> std::string {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Next>) {
                return "X " + print_operand(*node.operand, 3);
            } else if constexpr (std::is_same_v<T, Eventually>) {
                std::string op = "F";
                if (node.step_bound) op += "<=" + std::to_string(*node.step_bound);
                return op + " " + print_operand(*node.operand, 3);
            } else {
                std::string op = "U";
                if (node.step_bound) op += "<=" + std::to_string(*node.step_bound);
                return print_operand(*node.lhs, 3) + " " + op + " " + print_operand(*node.rhs, 3);
            }
        },
        p.node);
}

inline std::string print(const StateFormula& f) {
    return std::visit(
        [](const auto& node) -> std::string {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, True>) {
                return "true";
            } else if constexpr (std::is_same_v<T, False>) {
                return "false";
            } else if constexpr (std::is_same_v<T, Atomic>) {
                return "\"" + node.name + "\"";
            } else if constexpr (std::is_same_v<T, Threshold>) {
                return "(" + node.label() + ")";
            } else if constexpr (std::is_same_v<T, Not>) {
                return "!" + print_operand(*node.operand, 3);
            } else if constexpr (std::is_same_v<T, And>) {
                return print_operand(*node.lhs, 2) + " & " + print_operand(*node.rhs, 3);
            } else if constexpr (std::is_same_v<T, Or>) {
                return print_operand(*node.lhs, 1) + " | " + print_operand(*node.rhs, 2);
            } else {
                std::string op = "P";
                if (node.direction) op += to_string(*node.direction);
                if (node.bound) {
                    op += to_string(node.bound->op);
                    op += format_number(node.bound->probability);
                } else {
                    op += "=?";
                }
                return op + " [ " + print_path(*node.path) + " ]";
            }
        },
        f.node);
}

}  // namespace detail

inline std::string to_string(const StateFormula& f) { return detail::print(f); }
inline std::string to_string(const PathFormula& p) { return detail::print_path(p); }

/// Structural equality.
inline bool equal(const StateFormula& a, const StateFormula& b);

inline bool equal(const PathFormula& a, const PathFormula& b) {
    if (a.node.index() != b.node.index()) return false;
    if (const auto* n = std::get_if<Next>(&a.node)) {
        return equal(*n->operand, *std::get<Next>(b.node).operand);
    }
    if (const auto* e = std::get_if<Eventually>(&a.node)) {
        const auto& o = std::get<Eventually>(b.node);
        return e->step_bound == o.step_bound && equal(*e->operand, *o.operand);
    }
    const auto& u = std::get<Until>(a.node);
    const auto& o = std::get<Until>(b.node);
    return u.step_bound == o.step_bound && equal(*u.lhs, *o.lhs) && equal(*u.rhs, *o.rhs);
}

inline bool equal(const StateFormula& a, const StateFormula& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&b](const auto& node) -> bool {
            using T = std::decay_t<decltype(node)>;
            const auto& other = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, True> || std::is_same_v<T, False>) {
                return true;
            } else if constexpr (std::is_same_v<T, Atomic>) {
                return node.name == other.name;
            } else if constexpr (std::is_same_v<T, Threshold>) {
                return node.variable == other.variable && node.op == other.op &&
                       node.value == other.value;
            } else if constexpr (std::is_same_v<T, Not>) {
                return equal(*node.operand, *other.operand);
            } else if constexpr (std::is_same_v<T, And> || std::is_same_v<T, Or>) {
                return equal(*node.lhs, *other.lhs) && equal(*node.rhs, *other.rhs);
            } else {
                if (node.direction != other.direction) return false;
                if (node.bound.has_value() != other.bound.has_value()) return false;
                if (node.bound && (node.bound->op != other.bound->op ||
                                   node.bound->probability != other.bound->probability)) {
                    return false;
                }
                return equal(*node.path, *other.path);
            }
        },
        a.node);
}

}  // namespace adasynth::pctl
