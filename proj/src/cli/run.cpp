#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "kbes/cli.hpp"
#include "kbes/solvers.hpp"
#include "parallel.hpp"

namespace kbes::cli {

namespace {

struct Element {
    Eigen::Index m = 0;
    Eigen::Index n = 0;
};

std::vector<Element> selected_elements(const RunConfig& c, Eigen::Index dim) {
    std::vector<Element> out;
    if (c.outputs.empty()) {
        for (Eigen::Index m = 0; m < dim; ++m) {
            for (Eigen::Index n = 0; n < dim; ++n) out.push_back({m, n});
        }
        return out;
    }
    for (const auto& o : c.outputs) {
        int m = 0, n = 0;
        std::sscanf(o.c_str(), "rho_%d_%d", &m, &n);
        out.push_back({m, n});
    }
    return out;
}

void append_number(fmt::memory_buffer& buf, double x) {
    // Signed zeros would make byte-identical output depend on rounding paths.
    if (x == 0.0) x = 0.0;
    fmt::format_to(std::back_inserter(buf), "{:.17g}", x);
}

void append_elements(fmt::memory_buffer& buf, const ComplexMatrix& rho,
                     const std::vector<Element>& elements) {
    for (const auto& e : elements) {
        buf.push_back(',');
        append_number(buf, rho(e.m, e.n).real());
        buf.push_back(',');
        append_number(buf, rho(e.m, e.n).imag());
    }
}

std::string element_header(const std::vector<Element>& elements) {
    std::string h;
    for (const auto& e : elements) {
        h += fmt::format(",re_rho_{0}_{1},im_rho_{0}_{1}", e.m, e.n);
    }
    return h;
}

class Sink {
public:
    explicit Sink(const std::filesystem::path& path) {
        if (path.empty() || path == "-") return;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        file_.open(path, std::ios::binary);
        if (!file_) throw std::runtime_error("cannot open output " + path.string());
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::vector<double> time_grid(const RunConfig& c) {
    std::vector<double> t(static_cast<std::size_t>(c.steps) + 1);
    for (int k = 0; k <= c.steps; ++k) {
        t[static_cast<std::size_t>(k)] = c.t_max * static_cast<double>(k) / c.steps;
    }
    return t;
}

models::SectorState sector_state_from_dense(const ComplexMatrix& rho, int n_qubits) {
    models::SectorState s;
    s.n_qubits = n_qubits;
    s.vacuum_population = rho(0, 0);
    s.vacuum_coherence = ComplexVector(n_qubits);
    s.excitation_block = ComplexMatrix(n_qubits, n_qubits);
    for (int i = 1; i <= n_qubits; ++i) {
        const auto ii = models::single_excitation_index(n_qubits, i);
        s.vacuum_coherence(i - 1) = rho(0, ii);
        for (int k = 1; k <= n_qubits; ++k) {
            s.excitation_block(i - 1, k - 1) = rho(ii, models::single_excitation_index(n_qubits, k));
        }
    }
    return s;
}

// Diagnostics of a sector state; the dense matrix is zero outside the sector,
// so its spectrum is the sector block spectrum plus zeros.
StateDiagnostics sector_diagnostics(const models::SectorState& s) {
    const int n = s.n_qubits;
    ComplexMatrix small(n + 1, n + 1);
    small(0, 0) = s.vacuum_population;
    small.block(0, 1, 1, n) = s.vacuum_coherence.transpose();
    small.block(1, 0, n, 1) = s.vacuum_coherence.adjoint().transpose();
    small.block(1, 1, n, n) = s.excitation_block;
    StateDiagnostics d = diagnose(small);
    const Eigen::Index full = Eigen::Index{1} << n;
    if (full > n + 1) d.min_eigenvalue = std::min(d.min_eigenvalue, 0.0);
    return d;
}

ComplexMatrix reduce_to_site(const ComplexMatrix& rho, int n_qubits, int site) {
    return partial_trace(rho, std::vector<Eigen::Index>(static_cast<std::size_t>(n_qubits), 2),
                         {static_cast<std::size_t>(site - 1)});
}

ExitCode run_evolve(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const double rate = c.reference_rate();
    const auto grid = time_grid(c);
    std::vector<double> physical(grid.size());
    std::transform(grid.begin(), grid.end(), physical.begin(), [&](double t) { return t / rate; });

    std::vector<ComplexMatrix> states;
    std::vector<StateDiagnostics> diags;
    const ComplexMatrix rho0 = c.initial_matrix();

    if (c.solver == SolverKind::AnalyticSector) {
        const auto sector = models::one_particle_sector(c.n_qubits, c.j, c.jz);
        const auto initial = sector_state_from_dense(rho0, c.n_qubits);
        for (double t : physical) {
            const auto s = models::xxz_sector_evolve(sector, c.gamma, initial, t);
            diags.push_back(sector_diagnostics(s));
            states.push_back(s.to_dense());
        }
    } else {
        const LindbladModel model = c.build_model();
        Trajectory traj;
        if (c.solver == SolverKind::Rk4) {
            const double target = default_rk4_step(model);
            traj.times.push_back(0.0);
            traj.states.push_back(rho0);
            ComplexMatrix current = rho0;
            for (std::size_t k = 1; k < physical.size(); ++k) {
                const double span = physical[k] - physical[k - 1];
                const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(span / target)));
                auto seg = integrate_rk4(model, current, span, span / static_cast<double>(sub), sub);
                current = seg.states.back();
                traj.states.push_back(current);
            }
        } else {
            const Liouvillian l = build_liouvillian(model);
            traj = c.solver == SolverKind::Spectral ? propagate_spectral(l, rho0, physical)
                                                    : propagate_expm(l, rho0, physical);
        }
        states = std::move(traj.states);
        for (const auto& s : states) diags.push_back(diagnose(s));
    }

    const bool reduced = c.model == ModelKind::XXZ && c.site > 0;
    if (reduced) {
        for (auto& s : states) s = reduce_to_site(s, c.n_qubits, c.site);
    }
    const Eigen::Index dim = states.front().rows();
    const auto elements = selected_elements(c, dim);

    Sink sink(out);
    auto& os = sink.stream();
    os << "t" << element_header(elements) << ",trace_dev,min_eig\n";
    double worst = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        fmt::memory_buffer buf;
        append_number(buf, grid[k]);
        append_elements(buf, states[k], elements);
        buf.push_back(',');
        append_number(buf, diags[k].trace_deviation);
        buf.push_back(',');
        append_number(buf, diags[k].min_eigenvalue);
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        worst = std::max({worst, diags[k].trace_deviation, -diags[k].min_eigenvalue});
    }
    os.flush();
    if (worst > kDiagnosticsLimit) {
        log << fmt::format("error: state diagnostics exceed {:g} (worst {:.3e})\n",
                           kDiagnosticsLimit, worst);
        return ExitCode::NumericalFailure;
    }
    return ExitCode::Success;
}

ExitCode run_steady(const RunConfig& c, const std::filesystem::path& out) {
    const ComplexMatrix rho = steady_state(build_liouvillian(c.build_model()));
    const auto elements = selected_elements(c, rho.rows());
    Sink sink(out);
    auto& os = sink.stream();
    os << "m,n,re,im\n";
    for (const auto& e : elements) {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{},{},", e.m, e.n);
        append_number(buf, rho(e.m, e.n).real());
        buf.push_back(',');
        append_number(buf, rho(e.m, e.n).imag());
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    return ExitCode::Success;
}

ExitCode run_spectrum(const RunConfig& c, const std::filesystem::path& out) {
    const auto spec = liouvillian_spectrum(build_liouvillian(c.build_model()));
    const double rate = c.reference_rate();
    std::vector<cplx> values(spec.eigenvalues.begin(), spec.eigenvalues.end());
    std::stable_sort(values.begin(), values.end(), [](cplx x, cplx y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
    Sink sink(out);
    auto& os = sink.stream();
    os << "re_lambda,im_lambda\n";
    for (cplx v : values) {
        fmt::memory_buffer buf;
        append_number(buf, v.real() / rate);
        buf.push_back(',');
        append_number(buf, v.imag() / rate);
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    return ExitCode::Success;
}

ExitCode run_kraus(const RunConfig& c, const std::filesystem::path& out) {
    const Liouvillian l = build_liouvillian(c.build_model());
    const ComplexMatrix propagator = expm(l.matrix * cplx(c.t_max / c.reference_rate(), 0.0));
    const auto channel = kraus_decompose(choi_of_propagator(propagator, l.dim));
    Sink sink(out);
    auto& os = sink.stream();
    os << "op,weight,row";
    for (Eigen::Index col = 0; col < l.dim; ++col) os << fmt::format(",re_{0},im_{0}", col);
    os << "\n";
    for (std::size_t k = 0; k < channel.kraus_ops.size(); ++k) {
        const auto& op = channel.kraus_ops[k];
        for (Eigen::Index r = 0; r < op.rows(); ++r) {
            fmt::memory_buffer buf;
            fmt::format_to(std::back_inserter(buf), "{},", k);
            append_number(buf, channel.weights[k]);
            fmt::format_to(std::back_inserter(buf), ",{}", r);
            for (Eigen::Index col = 0; col < op.cols(); ++col) {
                buf.push_back(',');
                append_number(buf, op(r, col).real());
                buf.push_back(',');
                append_number(buf, op(r, col).imag());
            }
            buf.push_back('\n');
            os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        }
    }
    return ExitCode::Success;
}

void set_parameter(RunConfig& c, const std::string& name, double value) {
    if (name == "n") c.n = value;
    else if (name == "f_gamma") c.f_gamma = value;
    else if (name == "lambda_gamma") c.lambda_gamma = value;
    else if (name == "gamma") c.gamma = value;
    else if (name == "gamma1") c.gamma1 = value;
    else if (name == "gamma2") c.gamma2 = value;
    else if (name == "beta_i") c.beta_i = value;
    else if (name == "J") c.j = value;
    else if (name == "Jz") c.jz = value;
    else throw ConfigError(ConfigError::Kind::Validation, "sweep.param", "cannot sweep '" + name + "'");
}

ExitCode run_sweep(const RunConfig& c, const std::filesystem::path& out) {
    if (!c.sweep) {
        throw ConfigError(ConfigError::Kind::Validation, "sweep", "sweep command needs a sweep block");
    }
    const auto& spec = *c.sweep;
    const auto count = static_cast<std::size_t>(spec.steps) + 1;
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        values[i] = spec.from + (spec.to - spec.from) * static_cast<double>(i) / spec.steps;
    }
    std::vector<ComplexMatrix> results(count);
    detail::parallel_for(count, [&](std::size_t i) {
        RunConfig point = c;
        set_parameter(point, spec.parameter, values[i]);
        LindbladModel model;
        try {
            model = point.build_model();
        } catch (const ModelError& e) {
            throw ConfigError(ConfigError::Kind::Validation, "sweep",
                              fmt::format("{} = {:g}: {}", spec.parameter, values[i], e.what()));
        }
        results[i] = steady_state(build_liouvillian(model));
    });
    const auto elements = selected_elements(c, results.front().rows());
    Sink sink(out);
    auto& os = sink.stream();
    os << spec.parameter << element_header(elements) << "\n";
    for (std::size_t i = 0; i < count; ++i) {
        fmt::memory_buffer buf;
        append_number(buf, values[i]);
        append_elements(buf, results[i], elements);
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    return ExitCode::Success;
}

}  // namespace

unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("KBES_SIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(cap, &end, 10);
        if (end != cap && v >= 1) n = std::min(n, static_cast<unsigned>(v));
    }
    return n;
}

ExitCode run(const RunConfig& config, Command command, const std::filesystem::path& out,
             std::ostream& log) {
    try {
        switch (command) {
            case Command::Evolve: return run_evolve(config, out, log);
            case Command::Steady: return run_steady(config, out);
            case Command::Spectrum: return run_spectrum(config, out);
            case Command::Kraus: return run_kraus(config, out);
            case Command::Sweep: return run_sweep(config, out);
            case Command::Figures: {
                const auto dir = out.empty() || out == "-" ? std::filesystem::path("figures") : out;
                for (const auto& p : emit_figure_data(config.figure, config, dir)) {
                    log << "wrote " << p.string() << "\n";
                }
                return ExitCode::Success;
            }
        }
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return ExitCode::ConfigError;
    } catch (const SteadyStateError& e) {
        log << fmt::format("numerical failure: {} (null space dimension {})\n", e.what(),
                           e.null_basis.size());
        return ExitCode::NumericalFailure;
    } catch (const NumericalError& e) {
        log << "numerical failure: " << e.what() << "\n";
        return ExitCode::NumericalFailure;
    } catch (const ModelError& e) {
        log << "config error: " << e.what() << "\n";
        return ExitCode::ConfigError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return ExitCode::Failure;
    }
    return ExitCode::Failure;
}

}  // namespace kbes::cli
