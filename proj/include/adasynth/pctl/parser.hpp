#pragma once

// Recursive-descent parser for the concrete PCTL syntax:
//
//   state   := or
//   or      := and ('|' and)*
//   and     := unary ('&' unary)*
//   unary   := '!' unary | primary
//   primary := 'true' | 'false' | '"' name '"' | ident cmp number
//            | '(' state ')' | P-op
//   P-op    := ('P' | 'Pmax' | 'Pmin') (cmp number | '=?') '[' path ']'
//   path    := 'X' unary | 'F' ('<=' k)? unary | unary 'U' ('<=' k)? unary

#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "adasynth/errors.hpp"
#include "adasynth/pctl/formula.hpp"

namespace adasynth::pctl {

namespace detail {

enum class TokenKind { Identifier, String, Number, Symbol, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        while (true) {
            skip_space();
            Token token;
            token.line = line_;
            token.column = column_;
            if (pos_ >= text_.size()) {
                tokens.push_back(token);
                return tokens;
            }
            const char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                token.kind = TokenKind::Identifier;
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                    token.text += advance();
                }
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                token.kind = TokenKind::Number;
                token.text = lex_number();
            } else if (c == '"') {
                token.kind = TokenKind::String;
                advance();
                while (pos_ < text_.size() && text_[pos_] != '"') {
                    if (text_[pos_] == '\n') break;
                    token.text += advance();
                }
                if (pos_ >= text_.size() || text_[pos_] != '"') {
                    throw ParseError("unterminated string", token.line, token.column, "'\"'");
                }
                advance();
                if (token.text.empty()) {
                    throw ParseError("empty proposition name", token.line, token.column, "a name");
                }
            } else {
                token.kind = TokenKind::Symbol;
                token.text = lex_symbol(token);
            }
            tokens.push_back(std::move(token));
        }
    }

private:
    char advance() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
    }

    std::string lex_number() {
        std::string out;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                out += advance();
            }
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            out += advance();
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            const std::size_t save = pos_;
            const int save_line = line_, save_column = column_;
            std::string exponent(1, advance());
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) exponent += advance();
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                out += exponent;
                digits();
            } else {
                pos_ = save;
                line_ = save_line;
                column_ = save_column;
            }
        }
        return out;
    }

    std::string lex_symbol(const Token& token) {
        const char c = advance();
        auto next_is = [&](char n) { return pos_ < text_.size() && text_[pos_] == n; };
        switch (c) {
            case '(': case ')': case '[': case ']': case '!': case '&': case '|': case '-':
                return std::string(1, c);
            case '<':
            case '>':
                if (next_is('=')) {
                    advance();
                    return std::string(1, c) + "=";
                }
                return std::string(1, c);
            case '=':
                if (next_is('?')) {
                    advance();
                    return "=?";
                }
                return "=";
            default:
                break;
        }
        std::string shown = std::isprint(static_cast<unsigned char>(c))
                                ? std::string("'") + c + "'"
                                : "byte " + std::to_string(static_cast<unsigned char>(c));
        throw ParseError("unexpected character " + shown, token.line, token.column,
                         "a formula token");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    StatePtr parse_formula() {
        StatePtr f = parse_or();
        if (peek().kind != TokenKind::End) fail("unexpected token", "end of input, '&' or '|'");
        return f;
    }

private:
    static constexpr int kMaxDepth = 200;

    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    bool is_symbol(std::string_view s, std::size_t ahead = 0) const {
        return peek(ahead).kind == TokenKind::Symbol && peek(ahead).text == s;
    }
    bool is_keyword(std::string_view s) const {
        return peek().kind == TokenKind::Identifier && peek().text == s;
    }
    const Token& take() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

    [[noreturn]] void fail(const std::string& message, const std::string& expected) const {
        const Token& t = peek();
        std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(message + ", found " + found, t.line, t.column, expected);
    }

    void expect_symbol(std::string_view s) {
        if (!is_symbol(s)) fail("unexpected token", "'" + std::string(s) + "'");
        take();
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : parser(p) {
            if (++parser.depth_ > kMaxDepth) parser.fail("formula nested too deeply", "a shallower formula");
        }
        ~DepthGuard() { --parser.depth_; }
        Parser& parser;
    };

    StatePtr parse_or() {
        DepthGuard guard(*this);
        StatePtr lhs = parse_and();
        while (is_symbol("|")) {
            take();
            lhs = make_state(Or{lhs, parse_and()});
        }
        return lhs;
    }

    StatePtr parse_and() {
        StatePtr lhs = parse_unary();
        while (is_symbol("&")) {
            take();
            lhs = make_state(And{lhs, parse_unary()});
        }
        return lhs;
    }

    StatePtr parse_unary() {
        DepthGuard guard(*this);
        if (is_symbol("!")) {
            take();
            return make_state(Not{parse_unary()});
        }
        return parse_primary();
    }

    static bool is_comparison(const Token& t) {
        if (t.kind != TokenKind::Symbol) return false;
        return t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=" || t.text == "=";
    }

    static Comparison comparison_of(const std::string& text) {
        if (text == "<") return Comparison::Less;
        if (text == "<=") return Comparison::LessEqual;
        if (text == ">") return Comparison::Greater;
        if (text == ">=") return Comparison::GreaterEqual;
        return Comparison::Equal;
    }

    double parse_number() {
        bool negative = false;
        if (is_symbol("-")) {
            take();
            negative = true;
        }
        if (peek().kind != TokenKind::Number) fail("expected a number", "a number");
        const Token& t = take();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size() || !std::isfinite(value)) {
            throw ParseError("malformed number '" + t.text + "'", t.line, t.column, "a number");
        }
        return negative ? -value : value;
    }

    unsigned parse_step_bound() {
        if (peek().kind != TokenKind::Number) fail("expected a step bound", "a natural number");
        const Token& t = take();
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) {
            throw ParseError("step bound must be a natural number", t.line, t.column,
                             "a natural number");
        }
        return value;
    }

    StatePtr parse_primary() {
        const Token& t = peek();
        if (t.kind == TokenKind::String) {
            return make_state(Atomic{take().text});
        }
        if (is_symbol("(")) {
            take();
            StatePtr inner = parse_or();
            expect_symbol(")");
            return inner;
        }
        if (t.kind == TokenKind::Identifier) {
            if (t.text == "true") {
                take();
                return make_state(True{});
            }
            if (t.text == "false") {
                take();
                return make_state(False{});
            }
            if ((t.text == "P" || t.text == "Pmax" || t.text == "Pmin") &&
                (is_comparison(peek(1)) || is_symbol("=?", 1))) {
                return parse_probability();
            }
            if (is_comparison(peek(1))) {
                Threshold threshold;
                threshold.variable = take().text;
                threshold.op = comparison_of(take().text);
                threshold.value = parse_number();
                return make_state(threshold);
            }
            fail("unknown identifier", "'true', 'false', '\"name\"', a comparison or 'P'");
        }
        fail("unexpected token", "'true', 'false', '!', '(', '\"name\"', a comparison or 'P'");
    }

    StatePtr parse_probability() {
        Probability prob;
        const std::string head = take().text;
        if (head == "Pmax") prob.direction = Direction::Max;
        if (head == "Pmin") prob.direction = Direction::Min;
        if (is_symbol("=?")) {
            take();
        } else {
            Bound bound;
            bound.op = comparison_of(take().text);
            const Token& at = peek();
            bound.probability = parse_number();
            if (bound.probability < 0.0 || bound.probability > 1.0) {
                throw ParseError("probability bound outside [0,1]", at.line, at.column,
                                 "a probability in [0,1]");
            }
            prob.bound = bound;
        }
        expect_symbol("[");
        prob.path = parse_path();
        expect_symbol("]");
        return make_state(std::move(prob));
    }

    PathPtr parse_path() {
        if (is_keyword("X")) {
            take();
            return make_path(Next{parse_unary()});
        }
        if (is_keyword("F")) {
            take();
            Eventually ev;
            if (is_symbol("<=")) {
                take();
                ev.step_bound = parse_step_bound();
            }
            ev.operand = parse_unary();
            return make_path(std::move(ev));
        }
        Until until;
        until.lhs = parse_unary();
        if (!is_keyword("U")) fail("expected path operator", "'U'");
        take();
        if (is_symbol("<=")) {
            take();
            until.step_bound = parse_step_bound();
        }
        until.rhs = parse_unary();
        return make_path(std::move(until));
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace detail

/// Parses one formula. Throws ParseError with position and expected tokens.
inline StatePtr parse(std::string_view text) {
    detail::Lexer lexer(text);
    detail::Parser parser(lexer.run());
    return parser.parse_formula();
}

/// Reads a formula file: one formula per line, blank lines and `#` comments
/// ignored. Errors report the file line.
inline std::vector<StatePtr> parse_formula_file(std::istream& in) {
    std::vector<StatePtr> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse(line));
        } catch (const ParseError& e) {
            throw ParseError(e.message(), number, e.column(), e.expected());
        }
    }
    return out;
}

}  // namespace adasynth::pctl
