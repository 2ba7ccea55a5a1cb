#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kbes/cli.hpp"

namespace {

using kbes::cli::ExitCode;

struct Flags {
    std::optional<std::string> config;
    std::string out;
    std::optional<std::string> model, solver, initial;
    std::optional<double> n, f_gamma, lambda_gamma, gamma, gamma1, gamma2, beta_i, j, jz, a, b_abs,
        b_phase, t_max;
    std::optional<int> n_qubits, steps, site, fig;
    std::optional<long long> seed;
    std::optional<std::string> sweep_param;
    std::optional<double> sweep_from, sweep_to;
    std::optional<int> sweep_steps;
};

void add_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "JSON config file");
    app.add_option("--out", f.out, "output file (directory for figures); '-' for stdout");
    app.add_option("--model", f.model, "driven-qubit | vtype | xxz");
    app.add_option("--n", f.n, "thermal photon number");
    app.add_option("--f-gamma", f.f_gamma, "drive f/gamma");
    app.add_option("--lambda-gamma", f.lambda_gamma, "detuning Lambda/gamma");
    app.add_option("--gamma", f.gamma, "damping rate");
    app.add_option("--gamma1", f.gamma1, "qutrit rate of level 1");
    app.add_option("--gamma2", f.gamma2, "qutrit rate of level 2");
    app.add_option("--beta-i", f.beta_i, "qutrit dipole alignment in [0, 1]");
    app.add_option("--N", f.n_qubits, "chain length");
    app.add_option("--J", f.j, "chain hopping");
    app.add_option("--Jz", f.jz, "chain anisotropy");
    app.add_option("--a", f.a, "vacuum amplitude of the chain initial state");
    app.add_option("--b-abs", f.b_abs, "|b| of the chain initial state");
    app.add_option("--b-phase", f.b_phase, "arg b of the chain initial state");
    app.add_option("--t-max", f.t_max, "final time in units of 1/rate");
    app.add_option("--steps", f.steps, "number of time steps");
    app.add_option("--solver", f.solver, "expm | spectral | rk4 | analytic-sector");
    app.add_option("--initial", f.initial, "preset name, basis index, or JSON matrix");
    app.add_option("--site", f.site, "chain site for reduced output");
    app.add_option("--fig", f.fig, "figure id: 2, 3 or 5");
    app.add_option("--seed", f.seed, "seed recorded with the run");
    app.add_option("--sweep-param", f.sweep_param, "parameter to sweep");
    app.add_option("--sweep-from", f.sweep_from, "sweep start");
    app.add_option("--sweep-to", f.sweep_to, "sweep end");
    app.add_option("--sweep-steps", f.sweep_steps, "sweep intervals");
}

nlohmann::json overrides(const Flags& f, bool figures) {
    nlohmann::json o = nlohmann::json::object();
    auto put = [&](const char* key, const auto& v) {
        if (v) o[key] = *v;
    };
    put("model", f.model);
    put("n", f.n);
    put("f_gamma", f.f_gamma);
    put("lambda_gamma", f.lambda_gamma);
    put("gamma", f.gamma);
    put("gamma1", f.gamma1);
    put("gamma2", f.gamma2);
    put("beta_i", f.beta_i);
    put("J", f.j);
    put("Jz", f.jz);
    put("a", f.a);
    put("b_abs", f.b_abs);
    put("b_phase", f.b_phase);
    put("t_max", f.t_max);
    put("steps", f.steps);
    put("solver", f.solver);
    put("site", f.site);
    put("fig", f.fig);
    put("seed", f.seed);
    // For figures --N selects the chain length of figure 5 only.
    if (f.n_qubits) o[figures ? "fig_N" : "N"] = *f.n_qubits;
    if (f.initial) {
        const auto& s = *f.initial;
        const bool digits = !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
        if (digits) o["initial"] = std::stoll(s);
        else if (!s.empty() && s.front() == '[') o["initial"] = nlohmann::json::parse(s);
        else o["initial"] = s;
    }
    if (f.sweep_param || f.sweep_from || f.sweep_to || f.sweep_steps) {
        nlohmann::json s = nlohmann::json::object();
        if (f.sweep_param) s["param"] = *f.sweep_param;
        if (f.sweep_from) s["from"] = *f.sweep_from;
        if (f.sweep_to) s["to"] = *f.sweep_to;
        if (f.sweep_steps) s["steps"] = *f.sweep_steps;
        o["sweep"] = s;
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lindblad master equation simulator (vectorized Liouvillian)", "kbes-sim"};
    app.require_subcommand(1);
    Flags flags;
    for (const char* name : {"evolve", "steady", "spectrum", "kraus", "sweep", "figures"}) {
        auto* sub = app.add_subcommand(name);
        add_flags(*sub, flags);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::ConfigError);
    }

    const std::string name = app.get_subcommands().front()->get_name();
    const auto command = *kbes::cli::parse_command(name);
    try {
        const bool figures = command == kbes::cli::Command::Figures;
        const std::string extra = overrides(flags, figures).dump();
        const auto config = flags.config ? kbes::cli::load_config(*flags.config, extra)
                                         : kbes::cli::parse_config("{}", extra);
        return static_cast<int>(kbes::cli::run(config, command, flags.out, std::cerr));
    } catch (const kbes::cli::ConfigError& e) {
        std::cerr << (e.kind == kbes::cli::ConfigError::Kind::Parse ? "parse error: "
                                                                    : "validation error: ")
                  << e.what() << "\n";
        return static_cast<int>(ExitCode::ConfigError);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::ConfigError);
    }
}
