#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kbes/liouvillian.hpp"
#include "kbes/models.hpp"

namespace kbes::cli {

enum class ExitCode : int { Success = 0, Failure = 1, ConfigError = 2, NumericalFailure = 3 };

/// Raised for malformed input (kind Parse) or physics-invariant violations
/// (kind Validation). `field` names the offending config key.
class ConfigError : public std::runtime_error {
public:
    enum class Kind { Parse, Validation };
    ConfigError(Kind kind, std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message),
          kind(kind),
          field(std::move(field)) {}
    Kind kind;
    std::string field;
};

enum class ModelKind { DrivenQubit, VType, XXZ, Explicit };
enum class SolverKind { Expm, Spectral, Rk4, AnalyticSector };
enum class Command { Evolve, Steady, Spectrum, Kraus, Sweep, Figures };

struct InitialState {
    std::string preset;                 // "plus", "excited", "ground", "chain"
    std::optional<Eigen::Index> basis_index;
    std::optional<ComplexMatrix> matrix;
};

struct SweepSpec {
    std::string parameter;  // any numeric model field, e.g. "lambda_gamma"
    double from = 0.0;
    double to = 0.0;
    int steps = 1;
};

struct RunConfig {
    ModelKind model = ModelKind::DrivenQubit;

    // Driven qubit; physical drive is f = f_gamma·gamma, detuning Λ = lambda_gamma·gamma.
    double n = 0.0;
    double f_gamma = 0.0;
    double lambda_gamma = 0.0;
    double gamma = 1.0;  // also the chain damping rate

    // V-type qutrit.
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double beta_i = 0.0;

    // XXZ chain.
    int n_qubits = 4;
    double j = 2.0;
    double jz = 0.0;
    double a = 0.70710678118654752;
    double b_abs = 0.70710678118654752;
    double b_phase = 0.0;

    std::optional<LindbladModel> explicit_model;

    InitialState initial;
    double t_max = 6.0;  // dimensionless, in units of 1/reference_rate()
    int steps = 200;
    SolverKind solver = SolverKind::Expm;
    std::vector<std::string> outputs;  // "rho_m_n" selections; empty means all
    std::uint64_t seed = 0;
    int site = 0;  // chain site for reduced output, 0 = full state
    std::optional<SweepSpec> sweep;
    int figure = 0;  // 0 = all of 2, 3, 5
    std::optional<int> figure_n;

    /// gamma for the qubit and chain, gamma1 for the qutrit, 1 for explicit models.
    double reference_rate() const;
    LindbladModel build_model() const;
    models::DrivenQubitParams qubit_params() const;
    models::VTypeParams vtype_params() const;
    models::XXZParams xxz_params() const;
    ComplexMatrix initial_matrix() const;
};

/// Parses a JSON document; `overrides` (also JSON, e.g. from command-line
/// flags) is merged on top before validation.
RunConfig parse_config(const std::string& text, const std::string& overrides = "{}");
RunConfig load_config(const std::filesystem::path& path, const std::string& overrides = "{}");

std::string serialize_config(const RunConfig& config);

std::optional<Command> parse_command(const std::string& name);

/// Executes a command. Numerical failures (defective spectral basis, non-CP
/// channel, degenerate steady state, diagnostics above 1e-6) return
/// NumericalFailure with a message on `log`.
ExitCode run(const RunConfig& config, Command command, const std::filesystem::path& out,
             std::ostream& log);

/// Figure grids. Writes into directory `out`; returns the files written.
std::vector<std::filesystem::path> emit_figure_data(int figure, const RunConfig& config,
                                                    const std::filesystem::path& out);

inline constexpr double kDiagnosticsLimit = 1e-6;

/// Largest chain served by the analytic-sector solver (dense output is 4^N entries).
inline constexpr int kMaxSectorQubits = 8;

/// Worker count: hardware concurrency, capped by KBES_SIM_THREADS when set.
unsigned worker_count();

}  // namespace kbes::cli
