#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "kbes/liouvillian.hpp"
#include "kbes/numkernel.hpp"

namespace kbes::models {

// ---------------------------------------------------------------------------
// Driven, damped two-level atom. Basis order (|e>, |g>).

inline constexpr Eigen::Index kExcited = 0;
inline constexpr Eigen::Index kGround = 1;

struct DrivenQubitParams {
    double n = 0.0;       // thermal photon number
    double f = 0.0;       // drive amplitude
    double lambda = 0.0;  // detuning ω₀ - Ω
    double gamma = 1.0;   // spontaneous emission rate

    /// Physical parameters from the reduced ones, f = f_γ·γ and Λ = Λ_γ·γ.
    /// This is the scaling under which the closed-form steady state below is
    /// the null vector of the generator.
    static DrivenQubitParams from_reduced(double n, double f_gamma, double lambda_gamma,
                                          double gamma);
    double f_gamma() const { return f / gamma; }
    double lambda_gamma() const { return lambda / gamma; }
    void validate() const;
};

/// H = Λσz + f(σ⁺+σ⁻), jumps {σ⁻, σ⁺} with rates diag(γ(n+1), γn).
LindbladModel driven_damped_qubit(const DrivenQubitParams& p);

/// The closed-form 4×4 generator with α = γ(n+1)/2, β = γn/2, rows/cols
/// ordered (ρ_ee, ρ_eg, ρ_ge, ρ_gg).
ComplexMatrix qubit_liouvillian_closed_form(const DrivenQubitParams& p);

/// Closed-form steady state, with M = (n+½)² + 2(f_γ² + 2Λ_γ²).
ComplexMatrix qubit_steady_closed_form(double n, double f_gamma, double lambda_gamma);

struct CoherenceMaximum {
    double max_abs_rho10 = 0.0;
    double lambda_gamma_star = 0.0;  // non-negative optimizer; -Λ* is optimal too
};

/// Maximum over Λ_γ of |ρ₁₀(∞)| for fixed n and f_γ.
CoherenceMaximum qubit_max_coherence(double n, double f_gamma);

// ---------------------------------------------------------------------------
// V-type three-level atom. Basis (|0>, |1>, |2>), ground first.

struct VTypeParams {
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double beta_i = 0.0;  // dipole orientation, cross damping γ₁₂ = β_I √(γ₁γ₂)

    double gamma12() const;
    void validate() const;
};

LindbladModel vtype_qutrit(const VTypeParams& p);

/// Closed-form evolution for γ₁ = γ₂ = γ.
ComplexMatrix vtype_closed_form(const ComplexMatrix& rho0, double gamma, double beta_i, double t);

// ---------------------------------------------------------------------------
// Periodic XXZ chain with per-site amplitude damping.
//
// Tensor order is site 1 ⊗ site 2 ⊗ ... ⊗ site N, so site 1 is the most
// significant bit of a basis index. Per site |0> (down) has index 0 and
// σ⁺ = |1><0|.

inline constexpr int kMaxFullChainQubits = 6;

struct XXZParams {
    int n_qubits = 4;
    double j = 2.0;
    double jz = 0.0;
    double gamma = 1.0 / 220.0;
    double a = 0.70710678118654752;  // real amplitude of |0...0>
    cplx b{0.70710678118654752, 0.0};  // amplitude of σ₁⁺|0...0>

    void validate() const;
};

/// Basis index of σ_site⁺|0...0>, site counted from 1.
Eigen::Index single_excitation_index(int n_qubits, int site);

/// Dense 2^N chain Hamiltonian.
ComplexMatrix xxz_hamiltonian(int n_qubits, double j, double jz);

/// Full model for the Liouvillian path; requires N <= kMaxFullChainQubits.
LindbladModel xxz_chain(const XXZParams& p);

struct OneParticleSector {
    int n_qubits = 0;
    double vacuum_energy = 0.0;
    /// energies[k-1] is the energy of momentum state |k>, k = 1..N.
    std::vector<double> energies;
    /// Column k-1 holds |k> in the site basis σ_n⁺|0...0>, n = 1..N.
    ComplexMatrix momentum_states;
    ComplexMatrix sector_hamiltonian;
    std::vector<double> sector_spectrum;  // ascending, from direct diagonalization
};

OneParticleSector one_particle_sector(int n_qubits, double j, double jz);

/// c such that E_k - (N-4)J_z = c·J·cos(2πk/N) for the diagonalized sector.
double dispersion_convention_factor(const OneParticleSector& sector, double j, double jz);

/// State supported on span{|0...0>} ⊕ one-excitation sector, in site basis.
struct SectorState {
    int n_qubits = 0;
    cplx vacuum_population{};
    ComplexVector vacuum_coherence;  // entry n-1 is <0...0|ρ|σ_n⁺ 0...0>
    ComplexMatrix excitation_block;  // entry (n-1, m-1) is <σ_n⁺ 0|ρ|σ_m⁺ 0>

    ComplexMatrix to_dense() const;  // 2^N × 2^N
    VectorizedState vectorized() const;
    cplx trace() const;
};

/// a|0...0> + b σ₁⁺|0...0> as a density matrix.
SectorState xxz_initial_state(const XXZParams& p);

/// |k><k| for momentum k = 1..N.
SectorState momentum_projector(int n_qubits, int k);

/// Evolves any sector state with the momentum-space propagators.
SectorState xxz_sector_evolve(const OneParticleSector& sector, double gamma,
                              const SectorState& initial, double t);

SectorState xxz_analytic_evolve(const XXZParams& p, double t);

/// Reduced state of one site (1-based) from the two-mode closed form.
ComplexMatrix xxz_reduced_qubit(const XXZParams& p, int site, double t);

/// Excited populations of all sites at time t.
std::vector<double> xxz_site_populations(const XXZParams& p, double t);

struct CrossSearchWindow {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t samples = 0;  // 0 picks about 40 samples per 1/|J|
};

struct CrossPoint {
    double t = 0.0;
    double spread = 0.0;                  // max - min of site populations at t
    std::optional<double> w_fidelity;     // N = 4 only
    int w_sign = 0;                       // which of |φ^±> fits best
};

inline constexpr double kCrossPopulationTol = 1e-9;

std::vector<CrossPoint> xxz_cross_points(const XXZParams& p, const CrossSearchWindow& window);

/// |φ^±> = ½(|1000> ± i|0100> - |0010> ± i|0001>) as site amplitudes.
ComplexVector w_state_amplitudes(int sign);

/// <φ^±| ρ₁ |φ^±> of the trace-normalized one-excitation block.
double w_state_fidelity(const SectorState& state, int sign);

}  // namespace kbes::models
