#include "kbes/liouvillian.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace kbes {

namespace {

double scale_of(const ComplexMatrix& m) { return std::max(1.0, max_abs(m)); }

// Largest Liouvillian dimension d² we are willing to assemble densely.
constexpr Eigen::Index kMaxLiouvillianDim = 5000;

}  // namespace

LindbladModel LindbladModel::make(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> jump_ops,
                                  ComplexMatrix coupling, std::string label) {
    LindbladModel model;
    model.dim = hamiltonian.rows();
    model.hamiltonian = std::move(hamiltonian);
    model.jump_ops = std::move(jump_ops);
    model.coupling = std::move(coupling);
    model.label = std::move(label);
    model.validate();
    return model;
}

void LindbladModel::validate() const {
    if (dim < 2) throw ModelError("model: dimension must be at least 2");
    if (hamiltonian.rows() != dim || hamiltonian.cols() != dim) {
        throw ModelError("model: hamiltonian must be " + std::to_string(dim) + "x" +
                         std::to_string(dim));
    }
    if (!hamiltonian.allFinite()) throw ModelError("model: hamiltonian has non-finite entries");
    if (hermiticity_defect(hamiltonian) > kHermitianTol * scale_of(hamiltonian)) {
        throw ModelError("model: hamiltonian is not Hermitian");
    }
    for (std::size_t n = 0; n < jump_ops.size(); ++n) {
        const auto& op = jump_ops[n];
        if (op.rows() != dim || op.cols() != dim) {
            throw ModelError("model: jump operator " + std::to_string(n) + " must be " +
                             std::to_string(dim) + "x" + std::to_string(dim));
        }
        if (!op.allFinite()) {
            throw ModelError("model: jump operator " + std::to_string(n) + " has non-finite entries");
        }
    }
    const auto k = static_cast<Eigen::Index>(jump_ops.size());
    if (coupling.rows() != k || coupling.cols() != k) {
        throw ModelError("model: coupling matrix must be " + std::to_string(k) + "x" +
                         std::to_string(k) + " (one row per jump operator)");
    }
    if (k == 0) return;
    if (!coupling.allFinite()) throw ModelError("model: coupling matrix has non-finite entries");
    if (hermiticity_defect(coupling) > kHermitianTol * scale_of(coupling)) {
        throw ModelError("model: coupling matrix is not Hermitian");
    }
    const Eigen::MatrixXcd herm = 0.5 * (coupling + coupling.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    const double lowest = es.eigenvalues().minCoeff();
    if (lowest < kPsdFloor * scale_of(coupling)) {
        throw ModelError("model: coupling matrix is not positive semidefinite (eigenvalue " +
                         std::to_string(lowest) + ")");
    }
}

VectorizedState vectorize(const ComplexMatrix& rho) {
    require_square(rho, "vectorize");
    VectorizedState v;
    v.dim = rho.rows();
    // Row-major storage already is the m*d + n ordering.
    v.amplitudes = Eigen::Map<const ComplexVector>(rho.data(), rho.size());
    return v;
}

ComplexMatrix devectorize(const ComplexVector& amplitudes) {
    const auto len = amplitudes.size();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(len))));
    if (d * d != len) {
        throw DimensionError("devectorize: length " + std::to_string(len) +
                             " is not a perfect square");
    }
    return Eigen::Map<const ComplexMatrix>(amplitudes.data(), d, d);
}

ComplexMatrix devectorize(const VectorizedState& v) {
    if (v.amplitudes.size() != v.dim * v.dim) {
        throw DimensionError("devectorize: amplitude count does not match dim²");
    }
    return devectorize(v.amplitudes);
}

ComplexVector vectorized_identity(Eigen::Index dim) {
    return vectorize(identity(dim)).amplitudes;
}

ComplexMatrix lift_sandwich(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square(a, "lift_sandwich");
    require_square(b, "lift_sandwich");
    if (a.rows() != b.rows()) throw DimensionError("lift_sandwich: operand dimensions differ");
    return kron(a, b.transpose());
}

Liouvillian build_liouvillian(const LindbladModel& model) {
    model.validate();
    const Eigen::Index d = model.dim;
    if (d * d > kMaxLiouvillianDim) {
        throw DimensionError("build_liouvillian: dimension " + std::to_string(d * d) +
                             " exceeds the dense limit " + std::to_string(kMaxLiouvillianDim));
    }
    const ComplexMatrix id = identity(d);
    ComplexMatrix f = -I_UNIT * (lift_sandwich(model.hamiltonian, id) -
                                 lift_sandwich(id, model.hamiltonian));

    const auto k = model.jump_ops.size();
    for (std::size_t n = 0; n < k; ++n) {
        for (std::size_t m = 0; m < k; ++m) {
            const cplx h = model.coupling(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            if (h == cplx{}) continue;
            const ComplexMatrix lm_dag = model.jump_ops[m].adjoint();
            const ComplexMatrix lm_dag_ln = lm_dag * model.jump_ops[n];
            f += h * lift_sandwich(model.jump_ops[n], lm_dag);
            f -= (0.5 * h) * lift_sandwich(lm_dag_ln, id);
            f -= (0.5 * h) * lift_sandwich(id, lm_dag_ln);
        }
    }

    Liouvillian out;
    out.dim = d;
    out.matrix = std::move(f);
    out.source_model = std::make_shared<const LindbladModel>(model);
    return out;
}

ComplexMatrix apply_rhs_direct(const LindbladModel& model, const ComplexMatrix& rho) {
    if (rho.rows() != model.dim || rho.cols() != model.dim) {
        throw DimensionError("apply_rhs_direct: state is " + std::to_string(rho.rows()) + "x" +
                             std::to_string(rho.cols()) + ", model dimension is " +
                             std::to_string(model.dim));
    }
    ComplexMatrix out = -I_UNIT * (model.hamiltonian * rho - rho * model.hamiltonian);
    const auto k = model.jump_ops.size();
    for (std::size_t n = 0; n < k; ++n) {
        for (std::size_t m = 0; m < k; ++m) {
            const cplx h = model.coupling(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            if (h == cplx{}) continue;
            const ComplexMatrix lm_dag = model.jump_ops[m].adjoint();
            const ComplexMatrix lm_dag_ln = lm_dag * model.jump_ops[n];
            out += h * (model.jump_ops[n] * rho * lm_dag - 0.5 * (rho * lm_dag_ln + lm_dag_ln * rho));
        }
    }
    return out;
}

}  // namespace kbes
