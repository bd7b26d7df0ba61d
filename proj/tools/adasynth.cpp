// Command-line front end: verify, synthesize, sweep, population, trace, export.
//
// Exit codes: 0 success, 1 operational error, 2 a bounded P~p formula is
// violated at the initial state.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "adasynth/abstraction.hpp"
#include "adasynth/config.hpp"
#include "adasynth/experiments.hpp"
#include "adasynth/explicit_io.hpp"
#include "adasynth/pctl/checker.hpp"
#include "adasynth/pctl/parser.hpp"
#include "adasynth/synthesis.hpp"

namespace fs = std::filesystem;
using namespace adasynth;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kViolated = 2;

struct Options {
    std::string config;
    std::string formula;
    std::string direction;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string mode = "human";
    std::string model = "both";
    std::string format = "explicit";
};

struct Context {
    Config config;
    fs::path out;
    std::uint64_t seed = 1;
};

Context load(const Options& o) {
    Context ctx;
    ctx.config = o.config.empty() ? Config{} : load_config(o.config);
    if (o.config.empty()) ctx.config.validate();
    ctx.out = o.out.empty() ? fs::path(ctx.config.output_dir) : fs::path(o.out);
    ctx.seed = o.seed.value_or(ctx.config.experiments.seed);
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec || !fs::is_directory(ctx.out)) throw Error("cannot create output directory " + ctx.out.string());
    return ctx;
}

/// `--formula TEXT` or `--formula @FILE` (the file must hold exactly one
/// formula); `fallback` when the flag is absent.
pctl::StatePtr formula_of(const Options& o, const std::string& fallback) {
    if (o.formula.empty()) return pctl::parse(fallback);
    if (o.formula.front() != '@') return pctl::parse(o.formula);
    const std::string path = o.formula.substr(1);
    std::ifstream in(path);
    if (!in) throw Error("cannot read formula file " + path);
    try {
        auto all = pctl::parse_formula_file(in);
        if (all.size() != 1) {
            throw Error(path + ": expected exactly one formula, found " + std::to_string(all.size()));
        }
        return all.front();
    } catch (const ParseError& e) {
        throw Error(path + ": " + e.what());
    }
}

pctl::Direction direction_of(const Options& o, pctl::Direction fallback) {
    if (o.direction.empty()) return fallback;
    if (o.direction == "max") return pctl::Direction::Max;
    if (o.direction == "min") return pctl::Direction::Min;
    throw Error("--direction must be max or min, got '" + o.direction + "'");
}

template <class Fn>
void write_file(const fs::path& path, Fn&& body) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    body(out);
    out.close();
    if (!out) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

nlohmann::json result_json(const pctl::VerificationResult& r, std::size_t states, bool satisfied) {
    nlohmann::json j;
    j["formula"] = r.formula;
    j["direction"] = r.direction ? nlohmann::json(pctl::to_string(*r.direction)) : nlohmann::json(nullptr);
    j["initial_probability"] = r.initial_probability;
    j["satisfied"] = satisfied;
    j["states"] = states;
    j["iterations"] = r.iterations;
    j["residual"] = r.residual;
    return j;
}

int cmd_verify(const Options& o) {
    const Context ctx = load(o);
    const auto f = formula_of(o, safety_formula());
    AbstractChain mc = build_mc(ctx.config.scenario, ctx.config.model, ctx.config.adas);
    label_formula(mc, *f);
    const auto r = pctl::check_mc(mc.model, *f, ctx.config.solver);
    const bool ok = pctl::initial_satisfied(r, mc.model.initial());
    write_json(ctx.out / "verify.json", result_json(r, mc.num_states(), ok));
    std::cout << pctl::format_number(r.initial_probability) << '\n';
    return ok ? kOk : kViolated;
}

int cmd_synthesize(const Options& o) {
    const Context ctx = load(o);
    const auto f = formula_of(o, safety_formula());
    const auto dir = direction_of(o, pctl::Direction::Min);
    AbstractMdp mdp = build_mdp(ctx.config.scenario, ctx.config.model, ctx.config.adas);
    label_formula(mdp, *f);
    const Synthesis syn = synthesize(mdp.model, *f, dir, ctx.config.solver);
    const bool ok = pctl::initial_satisfied(syn.result, mdp.model.initial());
    // The closed loop must reproduce the synthesized value.
    const double closed = pctl::check_mc(induce_mc(mdp.model, syn.policy), *f, ctx.config.solver).initial_probability;
    if (std::abs(closed - syn.policy.value) > 1e-8) {
        throw VerificationError("closed-loop value " + pctl::format_number(closed) +
                                " differs from synthesized value " + pctl::format_number(syn.policy.value));
    }
    write_file(ctx.out / "policy.csv", [&](std::ostream& out) {
        write_policy_csv(out, mdp, syn.policy, syn.result.probabilities);
    });
    write_json(ctx.out / "synthesize.json", result_json(syn.result, mdp.num_states(), ok));
    std::cout << pctl::format_number(syn.policy.value) << '\n';
    return ok ? kOk : kViolated;
}

int cmd_sweep(const Options& o) {
    const Context ctx = load(o);
    const auto f = formula_of(o, safety_formula());
    const auto dir = direction_of(o, pctl::Direction::Min);
    const auto& e = ctx.config.experiments;
    const SweepGrid grid = sweep(e.sweep_v0, e.sweep_v0_ov, ctx.config.scenario, ctx.config.model,
                                 ctx.config.adas, *f, dir, o.threads, ctx.config.solver);
    write_file(ctx.out / "sweep.csv", [&](std::ostream& out) { write_sweep_csv(out, grid); });
    std::size_t failed = 0;
    for (const auto& c : grid.cells) {
        if (!c.error.empty()) {
            ++failed;
            std::cerr << "cell v0=" << c.v0 << " v0_ov=" << c.v0_ov << ": " << c.error << '\n';
        }
    }
    for (const auto& w : grid.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << grid.cells.size() << " cells, " << failed << " failed\n";
    return failed ? kError : kOk;
}

int cmd_population(const Options& o) {
    const Context ctx = load(o);
    const auto& e = ctx.config.experiments;
    const auto f = formula_of(o, safety_formula());
    const auto dir = direction_of(o, pctl::Direction::Min);
    const auto scenarios = sample_scenarios(e.population_size, e.sampling, ctx.seed);
    const auto rows = run_population(scenarios, ctx.config.model, ctx.config.adas, *f, dir, o.threads,
                                     ctx.config.solver);
    write_file(ctx.out / "population.csv", [&](std::ostream& out) { write_population_csv(out, rows); });
    std::vector<double> human, adas;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            std::cerr << "scenario failed: " << r.error << '\n';
            continue;
        }
        human.push_back(r.p_human);
        adas.push_back(r.p_adas);
    }
    if (human.empty()) throw Error("every scenario failed");
    const Quartiles qh = quartiles(human), qa = quartiles(adas);
    std::cout << "human quartiles " << pctl::format_number(qh.q1) << ' ' << pctl::format_number(qh.median)
              << ' ' << pctl::format_number(qh.q3) << '\n'
              << "adas quartiles " << pctl::format_number(qa.q1) << ' ' << pctl::format_number(qa.median)
              << ' ' << pctl::format_number(qa.q3) << '\n';
    return human.size() == rows.size() ? kOk : kError;
}

int cmd_trace(const Options& o) {
    const Context ctx = load(o);
    const Config& c = ctx.config;
    TraceOptions options{c.experiments.continuous_traces, c.experiments.maneuver_stride};
    ControlStepper stepper(c.scenario, c.model, c.adas);
    Trace trace;
    if (o.mode == "human") {
        trace = sample_trace(stepper, ctx.seed, {}, options);
    } else if (o.mode == "policy") {
        const auto f = formula_of(o, safety_formula());
        const auto dir = direction_of(o, pctl::Direction::Min);
        AbstractMdp mdp = build_mdp(c.scenario, c.model, c.adas);
        label_formula(mdp, *f);
        const Synthesis syn = synthesize(mdp.model, *f, dir, c.solver);
        trace = sample_trace(stepper, ctx.seed, PolicyDriver{&mdp, &syn.policy}, options);
    } else {
        throw Error("--mode must be human or policy, got '" + o.mode + "'");
    }
    write_file(ctx.out / "trace.csv", [&](std::ostream& out) { write_trace_csv(out, trace); });
    std::cout << to_string(trace.outcome) << ' ' << trace.points.size() << " points\n";
    return kOk;
}

int cmd_export(const Options& o) {
    const Context ctx = load(o);
    if (o.format != "explicit") throw Error("--format must be explicit, got '" + o.format + "'");
    if (o.model != "mc" && o.model != "mdp" && o.model != "both") {
        throw Error("--model must be mc, mdp or both, got '" + o.model + "'");
    }
    const Config& c = ctx.config;
    pctl::StatePtr f = o.formula.empty() ? nullptr : formula_of(o, "");
    if (o.model != "mdp") {
        AbstractChain mc = build_mc(c.scenario, c.model, c.adas);
        if (f) label_formula(mc, *f);
        io::export_model(mc, ctx.out / "model_mc");
        std::cout << "mc " << mc.num_states() << " states\n";
    }
    if (o.model != "mc") {
        AbstractMdp mdp = build_mdp(c.scenario, c.model, c.adas);
        if (f) label_formula(mdp, *f);
        io::export_model(mdp, ctx.out / "model_mdp");
        std::cout << "mdp " << mdp.num_states() << " states\n";
    }
    return kOk;
}

void common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "JSON configuration file (defaults when omitted)");
    sub->add_option("--seed", o.seed, "master seed (overrides experiments.seed)");
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

void formula_options(CLI::App* sub, Options& o, bool direction) {
    sub->add_option("--formula", o.formula, "PCTL formula text, or @FILE");
    if (direction) sub->add_option("--direction", o.direction, "max or min");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driver-model abstraction, PCTL checking and ADAS policy synthesis"};
    app.require_subcommand(1);
    Options o;

    auto* verify = app.add_subcommand("verify", "check a formula on the driver's Markov chain");
    common(verify, o);
    formula_options(verify, o, false);

    auto* synth = app.add_subcommand("synthesize", "synthesize an optimal ADAS policy on the MDP");
    common(synth, o);
    formula_options(synth, o, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "human and ADAS values over a (v0, v0_ov) grid");
    common(sweep_cmd, o);
    formula_options(sweep_cmd, o, true);

    auto* pop = app.add_subcommand("population", "human and ADAS values over sampled scenarios");
    common(pop, o);
    formula_options(pop, o, true);

    auto* trace = app.add_subcommand("trace", "sample one run of the human or closed-loop system");
    common(trace, o);
    formula_options(trace, o, true);
    trace->add_option("--mode", o.mode, "human or policy");

    auto* exp = app.add_subcommand("export", "write the abstraction in explicit-state format");
    common(exp, o);
    formula_options(exp, o, false);
    exp->add_option("--model", o.model, "mc, mdp or both");
    exp->add_option("--format", o.format, "explicit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kError;
    }

    try {
        if (*verify) return cmd_verify(o);
        if (*synth) return cmd_synthesize(o);
        if (*sweep_cmd) return cmd_sweep(o);
        if (*pop) return cmd_population(o);
        if (*trace) return cmd_trace(o);
        if (*exp) return cmd_export(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
