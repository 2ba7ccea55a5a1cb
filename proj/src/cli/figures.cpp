#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "kbes/cli.hpp"
#include "kbes/solvers.hpp"
#include "parallel.hpp"

namespace kbes::cli {

namespace {

constexpr int kGammaTSteps = 200;
constexpr double kGammaTMax = 6.0;
constexpr int kLambdaPoints = 121;
constexpr double kLambdaMax = 3.0;
constexpr double kFig5GammaTMax = 3.0;
constexpr double kFig5JtStep = 0.05;

std::string num(double x) {
    if (x == 0.0) x = 0.0;
    return fmt::format("{:.17g}", x);
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output " + path.string());
    return os;
}

double lambda_at(int i) {
    return -kLambdaMax + 2.0 * kLambdaMax * static_cast<double>(i) / (kLambdaPoints - 1);
}

// Figures 2 and 3 share one set of trajectories; `which` selects the files.
std::vector<std::filesystem::path> qubit_figures(bool fig2, bool fig3, const RunConfig& c,
                                                 const std::filesystem::path& dir) {
    const double gamma = 1.0;
    std::vector<double> times(kGammaTSteps + 1);
    for (int k = 0; k <= kGammaTSteps; ++k) times[static_cast<std::size_t>(k)] = kGammaTMax * k / kGammaTSteps;

    ComplexVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const ComplexMatrix rho0 = plus * plus.adjoint();

    std::vector<std::filesystem::path> written;
    for (const int f : {0, 1, 2}) {
        std::vector<Trajectory> traj(kLambdaPoints);
        detail::parallel_for(kLambdaPoints, [&](std::size_t i) {
            const auto p = models::DrivenQubitParams::from_reduced(c.n, f, lambda_at(static_cast<int>(i)), gamma);
            traj[i] = propagate_expm(build_liouvillian(models::driven_damped_qubit(p)), rho0, times);
        });
        for (const bool populations : {true, false}) {
            if (populations ? !fig2 : !fig3) continue;
            const auto path = dir / fmt::format("{}_f{}.csv", populations ? "fig2" : "fig3", f);
            auto os = open_csv(path);
            os << "gamma_t,lambda_gamma,value\n";
            for (std::size_t k = 0; k < times.size(); ++k) {
                for (int i = 0; i < kLambdaPoints; ++i) {
                    const auto& rho = traj[static_cast<std::size_t>(i)].states[k];
                    const double v = populations
                                         ? rho(models::kExcited, models::kExcited).real()
                                         : std::abs(rho(models::kExcited, models::kGround));
                    os << num(times[k] * gamma) << ',' << num(lambda_at(i)) << ',' << num(v) << '\n';
                }
            }
            written.push_back(path);
        }
    }

    // Stationary values, which a finite γt window only approaches.
    const std::vector<double> drives = {0.0, 0.5, 1.0, 1.5, 2.0};
    std::vector<ComplexMatrix> steady(drives.size() * kLambdaPoints);
    detail::parallel_for(steady.size(), [&](std::size_t idx) {
        const double f = drives[idx / kLambdaPoints];
        const double lg = lambda_at(static_cast<int>(idx % kLambdaPoints));
        const auto p = models::DrivenQubitParams::from_reduced(c.n, f, lg, gamma);
        steady[idx] = steady_state(build_liouvillian(models::driven_damped_qubit(p)));
    });
    for (const bool populations : {true, false}) {
        if (populations ? !fig2 : !fig3) continue;
        const auto path = dir / (populations ? "fig2_steady.csv" : "fig3_steady.csv");
        auto os = open_csv(path);
        os << "f_gamma,lambda_gamma,value\n";
        for (std::size_t idx = 0; idx < steady.size(); ++idx) {
            const auto& rho = steady[idx];
            const double v = populations ? rho(models::kExcited, models::kExcited).real()
                                         : std::abs(rho(models::kExcited, models::kGround));
            os << num(drives[idx / kLambdaPoints]) << ','
               << num(lambda_at(static_cast<int>(idx % kLambdaPoints))) << ',' << num(v) << '\n';
        }
        written.push_back(path);
    }
    return written;
}

std::vector<std::filesystem::path> chain_figure(const RunConfig& c,
                                                const std::filesystem::path& dir) {
    std::vector<int> sizes = {3, 4, 5, 6};
    if (c.figure_n) sizes = {*c.figure_n};

    std::vector<std::filesystem::path> written;
    for (const int n : sizes) {
        models::XXZParams p;
        p.n_qubits = n;
        p.jz = c.model == ModelKind::XXZ ? c.jz : 0.0;
        const double t_end = kFig5GammaTMax / p.gamma;
        const auto steps = static_cast<std::size_t>(std::ceil(std::abs(p.j) * t_end / kFig5JtStep));

        std::vector<models::SectorState> states(steps + 1);
        detail::parallel_for(states.size(), [&](std::size_t k) {
            states[k] = models::xxz_analytic_evolve(p, t_end * static_cast<double>(k) / steps);
        });

        const auto path = dir / fmt::format("fig5_N{}.csv", n);
        auto os = open_csv(path);
        os << "gamma_t,J_t";
        for (int s = 1; s <= n; ++s) os << ",rho11_" << s;
        for (int s = 1; s <= n; ++s) os << ",abs_rho01_" << s;
        os << '\n';
        for (std::size_t k = 0; k <= steps; ++k) {
            const double t = t_end * static_cast<double>(k) / steps;
            os << num(p.gamma * t) << ',' << num(p.j * t);
            for (int s = 0; s < n; ++s) os << ',' << num(states[k].excitation_block(s, s).real());
            for (int s = 0; s < n; ++s) os << ',' << num(std::abs(states[k].vacuum_coherence(s)));
            os << '\n';
        }
        written.push_back(path);

        const auto crossings = models::xxz_cross_points(p, {0.0, t_end, 0});
        const auto cpath = dir / fmt::format("fig5_N{}_crossings.csv", n);
        auto cs = open_csv(cpath);
        cs << "gamma_t,J_t,spread,w_fidelity\n";
        for (const auto& cp : crossings) {
            cs << num(p.gamma * cp.t) << ',' << num(p.j * cp.t) << ',' << num(cp.spread) << ','
               << (cp.w_fidelity ? num(*cp.w_fidelity) : std::string("nan")) << '\n';
        }
        written.push_back(cpath);
    }
    return written;
}

}  // namespace

std::vector<std::filesystem::path> emit_figure_data(int figure, const RunConfig& config,
                                                    const std::filesystem::path& out) {
    if (figure != 0 && figure != 2 && figure != 3 && figure != 5) {
        throw ConfigError(ConfigError::Kind::Validation, "fig",
                          fmt::format("unknown figure id {} (2, 3, 5)", figure));
    }
    std::filesystem::create_directories(out);
    std::vector<std::filesystem::path> written;
    if (figure == 0 || figure == 2 || figure == 3) {
        written = qubit_figures(figure != 3, figure != 2, config, out);
    }
    if (figure == 0 || figure == 5) {
        const auto chain = chain_figure(config, out);
        written.insert(written.end(), chain.begin(), chain.end());
    }
    return written;
}

}  // namespace kbes::cli
