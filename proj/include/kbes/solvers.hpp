#pragma once

#include <cstddef>
#include <vector>

#include "kbes/liouvillian.hpp"
#include "kbes/numkernel.hpp"

namespace kbes {

struct StateDiagnostics {
    double trace_deviation = 0.0;     // |tr ρ - 1|
    double hermiticity_defect = 0.0;  // max |ρ - ρ†|
    double min_eigenvalue = 0.0;      // of the Hermitian part
};

StateDiagnostics diagnose(const ComplexMatrix& rho);

struct Trajectory {
    std::vector<double> times;
    std::vector<ComplexMatrix> states;
    std::vector<StateDiagnostics> diagnostics;
    /// Set when the initial state was not a density matrix. Evolution still
    /// runs; this is how basis matrices get propagated.
    bool non_density_initial_state = false;

    double worst_trace_deviation() const;
    double worst_hermiticity_defect() const;
    double lowest_eigenvalue() const;
};

/// Steady-state extraction failure when the null space of F is not one-dimensional.
class SteadyStateError : public NumericalError {
public:
    SteadyStateError(const std::string& what, std::vector<ComplexMatrix> basis)
        : NumericalError(what), null_basis(std::move(basis)) {}
    std::vector<ComplexMatrix> null_basis;  // devectorized null vectors
};

class NotCompletelyPositiveError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// ρ(t_k) = devec(exp(F t_k) vec ρ₀). Equal time steps share one propagator.
Trajectory propagate_expm(const Liouvillian& l, const ComplexMatrix& rho0,
                          const std::vector<double>& times);

/// Spectral solution Σ C_i e^{λ_i t} φ_i with V C = vec ρ₀. Throws NumericalError
/// (asking for the expm path instead) when the eigenbasis is defective or its
/// condition number exceeds max_condition.
Trajectory propagate_spectral(const Liouvillian& l, const ComplexMatrix& rho0,
                              const std::vector<double>& times,
                              double max_condition = kDefectiveCondition);

/// Fixed-step classical RK4 on the unvectorized equation, recording every
/// record_stride-th step plus the final time. dt <= 0 selects 0.02/|F|₁.
Trajectory integrate_rk4(const LindbladModel& model, const ComplexMatrix& rho0, double t_end,
                         double dt, std::size_t record_stride = 1);

double default_rk4_step(const LindbladModel& model);

inline constexpr double kSteadyStateTol = 1e-10;

/// Unique steady state: null vector of F, Hermitized and trace-normalized.
ComplexMatrix steady_state(const Liouvillian& l, double tol = kSteadyStateTol);

/// Full spectrum of F; throws NumericalError if max Re λ > 1e-10·|F|₁.
SpectralDecomposition liouvillian_spectrum(const Liouvillian& l);

/// Choi[(i,k),(j,l)] = P[(i,j),(k,l)]: output index first, input index second.
ComplexMatrix choi_of_propagator(const ComplexMatrix& propagator, Eigen::Index dim);

struct ChannelDecomposition {
    std::vector<ComplexMatrix> kraus_ops;  // descending weight
    std::vector<double> weights;           // Choi eigenvalues kept
    double completeness_defect = 0.0;      // max |Σ K†K - I|
};

ChannelDecomposition kraus_decompose(const ComplexMatrix& choi, double tol = 1e-12);

/// Applies ρ ↦ Σ K ρ K†.
ComplexMatrix apply_kraus(const ChannelDecomposition& channel, const ComplexMatrix& rho);

/// Trace over the factors not listed in keep; factors follow the order of dims.
ComplexMatrix partial_trace(const ComplexMatrix& rho, const std::vector<Eigen::Index>& dims,
                            const std::vector<std::size_t>& keep);

}  // namespace kbes
