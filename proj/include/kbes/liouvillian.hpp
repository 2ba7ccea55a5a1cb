#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kbes/numkernel.hpp"

namespace kbes {

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Time-independent Lindblad generator
///
///   dρ/dt = -i[H, ρ] + Σ_{n,m} h_{nm} (L_n ρ L_m† - ½{L_m† L_n, ρ})
///
/// with ħ = 1. All matrices are d×d except the k×k coupling h.
struct LindbladModel {
    Eigen::Index dim = 0;
    ComplexMatrix hamiltonian;
    std::vector<ComplexMatrix> jump_ops;
    ComplexMatrix coupling;
    std::string label;

    /// Builds a model and checks its invariants (Hermitian H, Hermitian PSD
    /// coupling, consistent shapes, finite entries). Throws ModelError.
    static LindbladModel make(ComplexMatrix hamiltonian, std::vector<ComplexMatrix> jump_ops,
                              ComplexMatrix coupling, std::string label = {});

    void validate() const;
};

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdFloor = -1e-12;

/// Density matrix flattened with component index i = m*d + n holding ρ_{mn}.
struct VectorizedState {
    Eigen::Index dim = 0;
    ComplexVector amplitudes;
};

VectorizedState vectorize(const ComplexMatrix& rho);
ComplexMatrix devectorize(const VectorizedState& v);
ComplexMatrix devectorize(const ComplexVector& amplitudes);

/// vec(I): taking the inner product with it gives the trace.
ComplexVector vectorized_identity(Eigen::Index dim);

/// Matrix of the map ρ ↦ AρB on vectorized states, equal to kron(A, Bᵀ).
ComplexMatrix lift_sandwich(const ComplexMatrix& a, const ComplexMatrix& b);

struct Liouvillian {
    Eigen::Index dim = 0;
    ComplexMatrix matrix;  // dim² × dim²
    std::shared_ptr<const LindbladModel> source_model;
};

Liouvillian build_liouvillian(const LindbladModel& model);

/// Master-equation right-hand side by direct matrix products, no vectorization.
ComplexMatrix apply_rhs_direct(const LindbladModel& model, const ComplexMatrix& rho);

}  // namespace kbes
