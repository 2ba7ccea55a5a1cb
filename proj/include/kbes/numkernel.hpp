#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kbes {

using cplx = std::complex<double>;

/// Dense complex matrix. Entries are stored row-major; every vectorization
/// convention in the library relies on this layout.
using ComplexMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;

inline constexpr cplx I_UNIT{0.0, 1.0};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigen-decomposition of a general (non-Hermitian) square matrix.
struct SpectralDecomposition {
    ComplexVector eigenvalues;
    ComplexMatrix right_eigenvectors;  // column i pairs with eigenvalues[i], unit 2-norm
    double condition_estimate = 0.0;   // 2-norm condition number of the eigenvector matrix
    bool diagonalizable = false;
};

/// Eigenvector matrices with a larger condition number are reported as defective.
inline constexpr double kDefectiveCondition = 1e12;

void require_square(const ComplexMatrix& m, const char* what);
void require_finite(const ComplexMatrix& m, const char* what);

ComplexMatrix identity(Eigen::Index n);

/// Standard Kronecker product; block (i,j) of the result is a(i,j)*b.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant (degree and scaling picked from the 1-norm).
ComplexMatrix expm(const ComplexMatrix& m);

SpectralDecomposition eig_general(const ComplexMatrix& m);

/// Orthonormal basis of {v : |Mv| <= tol * sigma_max(M)}, one column vector per
/// entry. Empty when M has full numerical rank.
std::vector<ComplexVector> nullspace(const ComplexMatrix& m, double tol);

double norm1(const ComplexMatrix& m);
double max_abs(const ComplexMatrix& m);
double spectral_norm(const ComplexMatrix& m);
double hermiticity_defect(const ComplexMatrix& m);

}  // namespace kbes
