#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kbes/cli.hpp"

namespace kbes::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "model", "n",     "f_gamma", "lambda_gamma", "gamma",   "gamma1", "gamma2", "beta_i",
    "N",     "J",     "Jz",      "a",            "b_abs",   "b_phase", "t_max", "steps",
    "solver", "initial", "outputs", "seed",      "site",    "sweep",  "fig",    "fig_N"};

const std::set<std::string> kSweepable = {"n",      "f_gamma", "lambda_gamma", "gamma", "gamma1",
                                          "gamma2", "beta_i",  "J",            "Jz"};

[[noreturn]] void parse_fail(const std::string& field, const std::string& msg) {
    throw ConfigError(ConfigError::Kind::Parse, field, msg);
}

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
    throw ConfigError(ConfigError::Kind::Validation, field, msg);
}

double number_at(const json& doc, const std::string& key, double fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_number()) parse_fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) invalid(key, "must be finite");
    return x;
}

long long integer_at(const json& doc, const std::string& key, long long fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_number_integer()) parse_fail(key, "expected an integer");
    return v.get<long long>();
}

cplx parse_complex(const json& v, const std::string& field) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    parse_fail(field, "complex entries must be numbers or [re, im] pairs");
}

ComplexMatrix parse_matrix(const json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) parse_fail(field, "matrix must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    if (!v[0].is_array() || v[0].empty()) parse_fail(field, "matrix rows must be arrays");
    const auto cols = static_cast<Eigen::Index>(v[0].size());
    ComplexMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            parse_fail(field, "matrix rows must all have " + std::to_string(cols) + " entries");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = parse_complex(row[static_cast<std::size_t>(c)], field);
        }
    }
    if (!m.allFinite()) invalid(field, "matrix entries must be finite");
    return m;
}

json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

LindbladModel parse_explicit_model(const json& v) {
    if (!v.contains("hamiltonian")) parse_fail("model.hamiltonian", "missing");
    ComplexMatrix h = parse_matrix(v.at("hamiltonian"), "model.hamiltonian");
    std::vector<ComplexMatrix> jumps;
    if (v.contains("jump_ops")) {
        const auto& ops = v.at("jump_ops");
        if (!ops.is_array()) parse_fail("model.jump_ops", "expected an array of matrices");
        for (std::size_t i = 0; i < ops.size(); ++i) {
            jumps.push_back(parse_matrix(ops[i], "model.jump_ops[" + std::to_string(i) + "]"));
        }
    }
    ComplexMatrix coupling = ComplexMatrix::Zero(static_cast<Eigen::Index>(jumps.size()),
                                                 static_cast<Eigen::Index>(jumps.size()));
    if (v.contains("coupling")) {
        const auto& c = v.at("coupling");
        if (c.is_array() && !c.empty() && !c[0].is_array()) {
            // A flat list is the diagonal of the coupling matrix.
            if (c.size() != jumps.size()) {
                invalid("model.coupling", "diagonal rates must match the jump operator count");
            }
            for (std::size_t i = 0; i < c.size(); ++i) {
                coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                    parse_complex(c[i], "model.coupling");
            }
        } else {
            coupling = parse_matrix(c, "model.coupling");
        }
    } else if (!jumps.empty()) {
        parse_fail("model.coupling", "missing (required with jump_ops)");
    }
    std::string label = v.value("label", std::string("explicit"));
    try {
        return LindbladModel::make(std::move(h), std::move(jumps), std::move(coupling),
                                   std::move(label));
    } catch (const ModelError& e) {
        invalid("model", e.what());
    }
}

void deep_merge(json& base, const json& overlay) {
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object() &&
            it.key() != "model") {
            deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

bool in_chain_sector(Eigen::Index index) {
    // Vacuum or a single flipped spin.
    return index == 0 || (index & (index - 1)) == 0;
}

Eigen::Index model_dim(const RunConfig& c) {
    switch (c.model) {
        case ModelKind::DrivenQubit: return 2;
        case ModelKind::VType: return 3;
        case ModelKind::XXZ: return Eigen::Index{1} << c.n_qubits;
        case ModelKind::Explicit: return c.explicit_model->dim;
    }
    return 0;
}

RunConfig from_json(const json& doc) {
    if (!doc.is_object()) parse_fail("", "config must be a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!kKnownKeys.contains(it.key())) parse_fail(it.key(), "unknown field");
    }

    RunConfig c;
    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        if (m.is_string()) {
            const auto name = m.get<std::string>();
            if (name == "driven-qubit") c.model = ModelKind::DrivenQubit;
            else if (name == "vtype") c.model = ModelKind::VType;
            else if (name == "xxz") c.model = ModelKind::XXZ;
            else invalid("model", "unknown model '" + name + "' (driven-qubit, vtype, xxz)");
        } else if (m.is_object()) {
            c.model = ModelKind::Explicit;
            c.explicit_model = parse_explicit_model(m);
        } else {
            parse_fail("model", "expected a model name or an object with explicit matrices");
        }
    }
    const bool chain = c.model == ModelKind::XXZ;

    c.n = number_at(doc, "n", 0.0);
    c.f_gamma = number_at(doc, "f_gamma", 0.0);
    c.lambda_gamma = number_at(doc, "lambda_gamma", 0.0);
    c.gamma = number_at(doc, "gamma", chain ? 1.0 / 220.0 : 1.0);
    c.gamma1 = number_at(doc, "gamma1", 1.0);
    c.gamma2 = number_at(doc, "gamma2", 1.0);
    c.beta_i = number_at(doc, "beta_i", 0.0);
    c.n_qubits = static_cast<int>(integer_at(doc, "N", 4));
    c.j = number_at(doc, "J", 2.0);
    c.jz = number_at(doc, "Jz", 0.0);
    c.b_phase = number_at(doc, "b_phase", 0.0);
    const bool has_a = doc.contains("a");
    const bool has_b = doc.contains("b_abs");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    c.a = number_at(doc, "a", inv_sqrt2);
    c.b_abs = number_at(doc, "b_abs", inv_sqrt2);
    if (has_a && !has_b) c.b_abs = std::sqrt(std::max(0.0, 1.0 - c.a * c.a));
    if (has_b && !has_a) c.a = std::sqrt(std::max(0.0, 1.0 - c.b_abs * c.b_abs));

    c.t_max = number_at(doc, "t_max", 6.0);
    c.steps = static_cast<int>(integer_at(doc, "steps", 200));
    c.seed = static_cast<std::uint64_t>(integer_at(doc, "seed", 0));
    c.site = static_cast<int>(integer_at(doc, "site", 0));
    c.figure = static_cast<int>(integer_at(doc, "fig", 0));
    if (doc.contains("fig_N")) c.figure_n = static_cast<int>(integer_at(doc, "fig_N", 4));

    if (doc.contains("solver")) {
        if (!doc.at("solver").is_string()) parse_fail("solver", "expected a string");
        const auto s = doc.at("solver").get<std::string>();
        if (s == "expm") c.solver = SolverKind::Expm;
        else if (s == "spectral") c.solver = SolverKind::Spectral;
        else if (s == "rk4") c.solver = SolverKind::Rk4;
        else if (s == "analytic-sector") c.solver = SolverKind::AnalyticSector;
        else invalid("solver", "unknown solver '" + s + "' (expm, spectral, rk4, analytic-sector)");
    }

    c.initial.preset = chain ? "chain" : "plus";
    if (doc.contains("initial")) {
        const auto& init = doc.at("initial");
        c.initial.preset.clear();
        if (init.is_string()) {
            c.initial.preset = init.get<std::string>();
        } else if (init.is_number_integer()) {
            c.initial.basis_index = init.get<Eigen::Index>();
        } else if (init.is_array()) {
            c.initial.matrix = parse_matrix(init, "initial");
        } else {
            parse_fail("initial", "expected a preset name, basis index, or matrix");
        }
    }

    if (doc.contains("outputs")) {
        const auto& outs = doc.at("outputs");
        if (!outs.is_array()) parse_fail("outputs", "expected an array of strings");
        for (const auto& o : outs) {
            if (!o.is_string()) parse_fail("outputs", "expected an array of strings");
            c.outputs.push_back(o.get<std::string>());
        }
    }

    if (doc.contains("sweep")) {
        const auto& s = doc.at("sweep");
        if (!s.is_object()) parse_fail("sweep", "expected an object");
        SweepSpec spec;
        if (!s.contains("param") || !s.at("param").is_string()) {
            parse_fail("sweep.param", "expected a parameter name");
        }
        spec.parameter = s.at("param").get<std::string>();
        spec.from = number_at(s, "from", 0.0);
        spec.to = number_at(s, "to", 0.0);
        spec.steps = static_cast<int>(integer_at(s, "steps", 1));
        c.sweep = spec;
    }
    return c;
}

void validate(const RunConfig& c) {
    if (!(c.t_max > 0.0)) invalid("t_max", "must be > 0");
    if (c.steps < 1) invalid("steps", "must be >= 1");
    if (c.n < 0.0) invalid("n", "photon number must be >= 0");
    if (!(c.gamma > 0.0)) invalid("gamma", "must be > 0");
    if (!(c.gamma1 > 0.0)) invalid("gamma1", "must be > 0");
    if (!(c.gamma2 > 0.0)) invalid("gamma2", "must be > 0");
    if (c.beta_i < 0.0 || c.beta_i > 1.0) invalid("beta_i", "must lie in [0, 1] (PSD coupling)");
    if (c.a < 0.0) invalid("a", "must be real and non-negative");
    if (c.b_abs < 0.0) invalid("b_abs", "must be non-negative");

    if (c.model == ModelKind::XXZ) {
        if (c.n_qubits < 2) invalid("N", "chain needs at least 2 qubits");
        const int limit = c.solver == SolverKind::AnalyticSector ? kMaxSectorQubits : models::kMaxFullChainQubits;
        if (c.n_qubits > limit) {
            invalid("N", "at most " + std::to_string(limit) + " qubits for this solver");
        }
        if (std::abs(c.a * c.a + c.b_abs * c.b_abs - 1.0) > 1e-12) {
            invalid("a", "initial amplitudes must satisfy a^2 + |b|^2 = 1");
        }
        if (c.site < 0 || c.site > c.n_qubits) invalid("site", "must lie in 1..N (0 = full state)");
    } else {
        if (c.solver == SolverKind::AnalyticSector) {
            invalid("solver", "analytic-sector is only available for the xxz model");
        }
        if (c.site != 0) invalid("site", "only meaningful for the xxz model");
    }

    // Model-level invariants (PSD coupling etc.) surface as validation errors.
    try {
        (void)c.build_model();
    } catch (const ModelError& e) {
        invalid("model", e.what());
    }

    const Eigen::Index dim = model_dim(c);
    const auto& init = c.initial;
    if (init.matrix) {
        if (init.matrix->rows() != dim || init.matrix->cols() != dim) {
            invalid("initial", "matrix must be " + std::to_string(dim) + "x" + std::to_string(dim));
        }
        if (c.solver == SolverKind::AnalyticSector) {
            invalid("initial", "analytic-sector accepts presets or sector basis indices only");
        }
    } else if (init.basis_index) {
        if (*init.basis_index < 0 || *init.basis_index >= dim) {
            invalid("initial", "basis index outside 0.." + std::to_string(dim - 1));
        }
        if (c.solver == SolverKind::AnalyticSector && !in_chain_sector(*init.basis_index)) {
            invalid("initial", "analytic-sector needs the vacuum or a single excitation");
        }
    } else {
        static const std::set<std::string> presets = {"plus", "excited", "ground", "chain"};
        if (!presets.contains(init.preset)) {
            invalid("initial", "unknown preset '" + init.preset + "' (plus, excited, ground, chain)");
        }
        if (init.preset == "chain" && c.model != ModelKind::XXZ) {
            invalid("initial", "preset 'chain' is only defined for the xxz model");
        }
    }

    for (const auto& o : c.outputs) {
        int m = -1, n = -1;
        char tail = 0;
        if (std::sscanf(o.c_str(), "rho_%d_%d%c", &m, &n, &tail) != 2 || m < 0 || n < 0) {
            invalid("outputs", "entries must look like rho_<m>_<n>, got '" + o + "'");
        }
        const Eigen::Index out_dim = c.site > 0 ? 2 : dim;
        if (m >= out_dim || n >= out_dim) invalid("outputs", "element '" + o + "' out of range");
    }

    if (c.sweep) {
        if (!kSweepable.contains(c.sweep->parameter)) {
            invalid("sweep.param", "cannot sweep '" + c.sweep->parameter + "'");
        }
        if (c.sweep->steps < 1) invalid("sweep.steps", "must be >= 1");
    }
    if (c.figure != 0 && c.figure != 2 && c.figure != 3 && c.figure != 5) {
        invalid("fig", "unknown figure id " + std::to_string(c.figure) + " (2, 3, 5)");
    }
    if (c.figure_n && (*c.figure_n < 2 || *c.figure_n > kMaxSectorQubits)) {
        invalid("fig_N", "must lie in 2.." + std::to_string(kMaxSectorQubits));
    }
}

}  // namespace

double RunConfig::reference_rate() const {
    switch (model) {
        case ModelKind::DrivenQubit:
        case ModelKind::XXZ: return gamma;
        case ModelKind::VType: return gamma1;
        case ModelKind::Explicit: return 1.0;
    }
    return 1.0;
}

models::DrivenQubitParams RunConfig::qubit_params() const {
    return models::DrivenQubitParams::from_reduced(n, f_gamma, lambda_gamma, gamma);
}

models::VTypeParams RunConfig::vtype_params() const { return {gamma1, gamma2, beta_i}; }

models::XXZParams RunConfig::xxz_params() const {
    models::XXZParams p;
    p.n_qubits = n_qubits;
    p.j = j;
    p.jz = jz;
    p.gamma = gamma;
    p.a = a;
    p.b = std::polar(b_abs, b_phase);
    return p;
}

LindbladModel RunConfig::build_model() const {
    switch (model) {
        case ModelKind::DrivenQubit: return models::driven_damped_qubit(qubit_params());
        case ModelKind::VType: return models::vtype_qutrit(vtype_params());
        case ModelKind::XXZ:
            if (solver == SolverKind::AnalyticSector && n_qubits > models::kMaxFullChainQubits) {
                // The analytic path never assembles the full model; validate parameters only.
                xxz_params().validate();
                return LindbladModel::make(identity(2) * 0.0, {}, ComplexMatrix(0, 0), "xxz-sector");
            }
            return models::xxz_chain(xxz_params());
        case ModelKind::Explicit: return *explicit_model;
    }
    throw std::logic_error("unhandled model kind");
}

ComplexMatrix RunConfig::initial_matrix() const {
    const Eigen::Index dim = model_dim(*this);
    if (initial.matrix) return *initial.matrix;
    ComplexVector psi = ComplexVector::Zero(dim);
    if (initial.basis_index) {
        psi(*initial.basis_index) = 1.0;
    } else if (model == ModelKind::XXZ) {
        const Eigen::Index first = models::single_excitation_index(n_qubits, 1);
        if (initial.preset == "ground") {
            psi(0) = 1.0;
        } else if (initial.preset == "excited") {
            psi(first) = 1.0;
        } else if (initial.preset == "plus") {
            psi(0) = psi(first) = 1.0 / std::sqrt(2.0);
        } else {
            psi(0) = a;
            psi(first) = std::polar(b_abs, b_phase);
        }
    } else if (model == ModelKind::DrivenQubit) {
        if (initial.preset == "ground") psi(models::kGround) = 1.0;
        else if (initial.preset == "excited") psi(models::kExcited) = 1.0;
        else psi(0) = psi(1) = 1.0 / std::sqrt(2.0);
    } else {
        if (initial.preset == "ground") psi(0) = 1.0;
        else if (initial.preset == "excited") psi(1) = 1.0;
        else psi(0) = psi(1) = 1.0 / std::sqrt(2.0);
    }
    return psi * psi.adjoint();
}

RunConfig parse_config(const std::string& text, const std::string& overrides) {
    json doc, extra;
    try {
        doc = json::parse(text);
        extra = json::parse(overrides);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::Parse, "", std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) parse_fail("", "config must be a JSON object");
    if (!extra.is_object()) parse_fail("", "overrides must be a JSON object");
    deep_merge(doc, extra);
    RunConfig c;
    try {
        c = from_json(doc);
    } catch (const json::exception& e) {
        throw ConfigError(ConfigError::Kind::Parse, "", std::string("malformed config: ") + e.what());
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::string& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigError::Kind::Parse, "", "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

std::string serialize_config(const RunConfig& c) {
    json doc;
    switch (c.model) {
        case ModelKind::DrivenQubit: doc["model"] = "driven-qubit"; break;
        case ModelKind::VType: doc["model"] = "vtype"; break;
        case ModelKind::XXZ: doc["model"] = "xxz"; break;
        case ModelKind::Explicit: {
            const auto& m = *c.explicit_model;
            json model;
            model["hamiltonian"] = matrix_to_json(m.hamiltonian);
            model["jump_ops"] = json::array();
            for (const auto& op : m.jump_ops) model["jump_ops"].push_back(matrix_to_json(op));
            model["coupling"] = matrix_to_json(m.coupling);
            model["label"] = m.label;
            doc["model"] = std::move(model);
            break;
        }
    }
    doc["n"] = c.n;
    doc["f_gamma"] = c.f_gamma;
    doc["lambda_gamma"] = c.lambda_gamma;
    doc["gamma"] = c.gamma;
    doc["gamma1"] = c.gamma1;
    doc["gamma2"] = c.gamma2;
    doc["beta_i"] = c.beta_i;
    doc["N"] = c.n_qubits;
    doc["J"] = c.j;
    doc["Jz"] = c.jz;
    doc["a"] = c.a;
    doc["b_abs"] = c.b_abs;
    doc["b_phase"] = c.b_phase;
    doc["t_max"] = c.t_max;
    doc["steps"] = c.steps;
    static const char* solvers[] = {"expm", "spectral", "rk4", "analytic-sector"};
    doc["solver"] = solvers[static_cast<int>(c.solver)];
    if (c.initial.matrix) doc["initial"] = matrix_to_json(*c.initial.matrix);
    else if (c.initial.basis_index) doc["initial"] = *c.initial.basis_index;
    else doc["initial"] = c.initial.preset;
    doc["outputs"] = c.outputs;
    doc["seed"] = c.seed;
    doc["site"] = c.site;
    if (c.sweep) {
        doc["sweep"] = {{"param", c.sweep->parameter},
                        {"from", c.sweep->from},
                        {"to", c.sweep->to},
                        {"steps", c.sweep->steps}};
    }
    doc["fig"] = c.figure;
    if (c.figure_n) doc["fig_N"] = *c.figure_n;
    return doc.dump(2);
}

std::optional<Command> parse_command(const std::string& name) {
    if (name == "evolve") return Command::Evolve;
    if (name == "steady") return Command::Steady;
    if (name == "spectrum") return Command::Spectrum;
    if (name == "kraus") return Command::Kraus;
    if (name == "sweep") return Command::Sweep;
    if (name == "figures") return Command::Figures;
    return std::nullopt;
}

}  // namespace kbes::cli
