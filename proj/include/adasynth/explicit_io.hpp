#pragma once

// Explicit-state text export/import in the common .tra/.sta/.lab layout:
//
//   .tra  MC:  "n m" then "src dst p"          MDP: "n k m" then "src choice dst p"
//   .sta  "(mu,x,lambda,a,v,t,pending,gain,sink)" then "i:(...)"
//   .lab  `0="init" 1="crash" ...` then "i: id id ..."
//   .act  MDP action names, "src choice name" (an extension; the others stay
//         readable by external checkers)

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adasynth/abstraction.hpp"
#include "adasynth/errors.hpp"
#include "adasynth/model.hpp"
#include "adasynth/pctl/formula.hpp"

namespace adasynth::io {

inline void write_tra(std::ostream& out, const MarkovChain& mc) {
    out << mc.num_states() << ' ' << mc.num_transitions() << '\n';
    for (StateIndex s = 0; s < mc.num_states(); ++s) {
        for (const auto& t : mc.row(s)) {
            out << s << ' ' << t.target << ' ' << pctl::format_number(t.probability) << '\n';
        }
    }
}

inline void write_tra(std::ostream& out, const Mdp& mdp) {
    out << mdp.num_states() << ' ' << mdp.num_choices() << ' ' << mdp.num_transitions() << '\n';
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
            for (const auto& t : mdp.distribution(c)) {
                out << s << ' ' << (c - mdp.first_choice(s)) << ' ' << t.target << ' '
                    << pctl::format_number(t.probability) << '\n';
            }
        }
    }
}

inline void write_act(std::ostream& out, const Mdp& mdp) {
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
            out << s << ' ' << (c - mdp.first_choice(s)) << ' '
                << mdp.action_names()[mdp.choice_action(c)] << '\n';
        }
    }
}

/// "init" comes first, the remaining names in lexicographic order.
inline std::vector<std::string> label_order(const Labels& labels) {
    std::vector<std::string> names;
    if (labels.count("init")) names.push_back("init");
    for (const auto& [name, set] : labels) {
        if (name != "init") names.push_back(name);
    }
    return names;
}

inline void write_lab(std::ostream& out, const Labels& labels, std::size_t num_states) {
    const auto names = label_order(labels);
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << (i ? " " : "") << i << "=\"" << names[i] << '"';
    }
    out << '\n';
    for (StateIndex s = 0; s < num_states; ++s) {
        std::string ids;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (labels.at(names[i])[s]) ids += ' ' + std::to_string(i);
        }
        if (!ids.empty()) out << s << ':' << ids << '\n';
    }
}

inline void write_sta(std::ostream& out, const std::vector<AbstractState>& states) {
    out << "(mu,x,lambda,a,v,t,pending,gain,sink)\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
        const AbstractState& s = states[i];
        out << i << ":(" << static_cast<int>(s.mu) << ',' << s.x << ',' << s.lambda << ',' << s.a
            << ',' << s.v << ',' << s.t << ',' << static_cast<int>(s.pending) << ',' << s.gain
            << ',' << static_cast<int>(s.sink) << ")\n";
    }
}

namespace detail {

[[noreturn]] inline void fail(const std::string& file, std::size_t line, const std::string& what) {
    throw FormatError(file + " line " + std::to_string(line) + ": " + what);
}

inline std::vector<std::string> lines_of(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

/// Parses `0="init" 1="crash"` into names by id.
inline std::vector<std::string> parse_lab_header(const std::string& header) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos < header.size()) {
        while (pos < header.size() && header[pos] == ' ') ++pos;
        if (pos >= header.size()) break;
        const std::size_t eq = header.find("=\"", pos);
        if (eq == std::string::npos) fail(".lab", 1, "expected id=\"name\"");
        const std::size_t close = header.find('"', eq + 2);
        if (close == std::string::npos) fail(".lab", 1, "unterminated label name");
        std::size_t id = 0;
        try {
            id = std::stoul(header.substr(pos, eq - pos));
        } catch (const std::exception&) {
            fail(".lab", 1, "bad label id");
        }
        if (id != names.size()) fail(".lab", 1, "label ids must be consecutive from 0");
        names.push_back(header.substr(eq + 2, close - eq - 2));
        pos = close + 1;
    }
    return names;
}

inline Labels read_lab(std::istream& in, std::size_t num_states, StateIndex& initial) {
    const auto lines = lines_of(in);
    if (lines.empty()) fail(".lab", 1, "missing header");
    const auto names = parse_lab_header(lines[0]);
    Labels labels;
    for (const auto& n : names) labels[n] = StateSet(num_states, false);
    initial = 0;
    bool saw_init = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t colon = lines[i].find(':');
        if (colon == std::string::npos) fail(".lab", i + 1, "expected 'state: ids'");
        std::size_t s = 0;
        try {
            s = std::stoul(lines[i].substr(0, colon));
        } catch (const std::exception&) {
            fail(".lab", i + 1, "bad state index");
        }
        if (s >= num_states) fail(".lab", i + 1, "state index out of range");
        std::istringstream ids(lines[i].substr(colon + 1));
        std::size_t id = 0;
        while (ids >> id) {
            if (id >= names.size()) fail(".lab", i + 1, "unknown label id");
            labels[names[id]][s] = true;
            if (names[id] == "init") {
                if (saw_init) fail(".lab", i + 1, "more than one initial state");
                saw_init = true;
                initial = s;
            }
        }
        if (!ids.eof()) fail(".lab", i + 1, "bad label id");
    }
    return labels;
}

inline std::vector<std::size_t> header_numbers(const std::string& line, std::size_t count) {
    std::istringstream in(line);
    std::vector<std::size_t> out(count);
    for (auto& v : out) {
        if (!(in >> v)) fail(".tra", 1, "malformed header");
    }
    std::string rest;
    if (in >> rest) fail(".tra", 1, "malformed header");
    return out;
}

}  // namespace detail

inline MarkovChain read_mc(std::istream& tra, std::istream& lab) {
    const auto lines = detail::lines_of(tra);
    if (lines.empty()) detail::fail(".tra", 1, "missing header");
    const auto header = detail::header_numbers(lines[0], 2);
    const std::size_t n = header[0];
    std::vector<std::vector<Transition>> rows(n);
    std::size_t count = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::istringstream in(lines[i]);
        std::size_t src = 0, dst = 0;
        double p = 0.0;
        std::string extra;
        if (!(in >> src >> dst >> p) || (in >> extra)) detail::fail(".tra", i + 1, "expected 'src dst p'");
        if (src >= n || dst >= n) detail::fail(".tra", i + 1, "state index out of range");
        rows[src].push_back({dst, p});
        ++count;
    }
    if (count != header[1]) detail::fail(".tra", 1, "transition count does not match header");
    MarkovChain mc;
    for (auto& row : rows) mc.add_state(std::move(row));
    StateIndex initial = 0;
    mc.labels() = detail::read_lab(lab, n, initial);
    mc.set_initial(initial);
    mc.validate();
    return mc;
}

inline Mdp read_mdp(std::istream& tra, std::istream& lab, std::istream* act = nullptr) {
    const auto lines = detail::lines_of(tra);
    if (lines.empty()) detail::fail(".tra", 1, "missing header");
    const auto header = detail::header_numbers(lines[0], 3);
    const std::size_t n = header[0];
    // state -> choice -> distribution
    std::vector<std::map<std::size_t, std::vector<Transition>>> choices(n);
    std::size_t count = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::istringstream in(lines[i]);
        std::size_t src = 0, choice = 0, dst = 0;
        double p = 0.0;
        if (!(in >> src >> choice >> dst >> p)) detail::fail(".tra", i + 1, "expected 'src choice dst p'");
        if (src >= n || dst >= n) detail::fail(".tra", i + 1, "state index out of range");
        choices[src][choice].push_back({dst, p});
        ++count;
    }
    if (count != header[2]) detail::fail(".tra", 1, "transition count does not match header");

    std::map<std::pair<std::size_t, std::size_t>, std::string> names;
    if (act) {
        const auto act_lines = detail::lines_of(*act);
        for (std::size_t i = 0; i < act_lines.size(); ++i) {
            if (act_lines[i].empty()) continue;
            std::istringstream in(act_lines[i]);
            std::size_t s = 0, c = 0;
            std::string name;
            if (!(in >> s >> c >> name)) detail::fail(".act", i + 1, "expected 'src choice name'");
            names[{s, c}] = name;
        }
    }

    Mdp mdp;
    std::size_t total = 0;
    for (StateIndex s = 0; s < n; ++s) {
        mdp.begin_state();
        std::size_t expected = 0;
        for (const auto& [c, dist] : choices[s]) {
            if (c != expected++) detail::fail(".tra", 1, "choice indices of state " + std::to_string(s) + " are not consecutive");
            const auto it = names.find({s, c});
            const std::string name = it != names.end() ? it->second : "c" + std::to_string(c);
            mdp.add_choice(mdp.action_id(name), dist);
            ++total;
        }
    }
    if (total != header[1]) detail::fail(".tra", 1, "choice count does not match header");
    StateIndex initial = 0;
    mdp.labels() = detail::read_lab(lab, n, initial);
    mdp.set_initial(initial);
    mdp.validate();
    return mdp;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

inline void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace detail

/// Writes base.tra, base.sta, base.lab (and base.act for MDPs).
template <class Model>
void export_model(const Abstraction<Model>& abs, const std::filesystem::path& base) {
    auto write = [&](const std::string& ext, auto&& body) {
        std::filesystem::path path = base;
        path += ext;
        auto out = detail::open_out(path);
        body(out);
        detail::close_out(out, path);
    };
    write(".tra", [&](std::ostream& o) { write_tra(o, abs.model); });
    write(".sta", [&](std::ostream& o) { write_sta(o, abs.states); });
    write(".lab", [&](std::ostream& o) { write_lab(o, abs.model.labels(), abs.model.num_states()); });
    if constexpr (std::is_same_v<Model, Mdp>) {
        write(".act", [&](std::ostream& o) { write_act(o, abs.model); });
    }
}

}  // namespace adasynth::io
