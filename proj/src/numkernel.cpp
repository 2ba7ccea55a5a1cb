#include "kbes/numkernel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace kbes {

void require_square(const ComplexMatrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

void require_finite(const ComplexMatrix& m, const char* what) {
    if (!m.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": matrix has non-finite entries");
    }
}

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const Eigen::Index rb = b.rows();
    const Eigen::Index cb = b.cols();
    ComplexMatrix out(a.rows() * rb, a.cols() * cb);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
        }
    }
    return out;
}

double norm1(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

double max_abs(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

double spectral_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

double hermiticity_defect(const ComplexMatrix& m) {
    require_square(m, "hermiticity_defect");
    return max_abs(m - m.adjoint());
}

namespace {

// Padé coefficients and 1-norm thresholds, Higham (2005).
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

ComplexMatrix solve_pade(const ComplexMatrix& u, const ComplexMatrix& v) {
    const ComplexMatrix p = v + u;
    const ComplexMatrix q = v - u;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(q);
    return lu.solve(p);
}

template <std::size_t N>
ComplexMatrix pade_low(const ComplexMatrix& a, const std::array<double, N>& b) {
    const Eigen::Index n = a.rows();
    const ComplexMatrix id = identity(n);
    const ComplexMatrix a2 = a * a;
    ComplexMatrix u_inner = b[1] * id;
    ComplexMatrix v = b[0] * id;
    ComplexMatrix power = id;
    for (std::size_t k = 2; k < N; k += 2) {
        power = power * a2;
        v.noalias() += b[k] * power;
        if (k + 1 < N) u_inner.noalias() += b[k + 1] * power;
    }
    const ComplexMatrix u = a * u_inner;
    return solve_pade(u, v);
}

ComplexMatrix pade13(const ComplexMatrix& a) {
    const auto& b = kPade13;
    const Eigen::Index n = a.rows();
    const ComplexMatrix id = identity(n);
    const ComplexMatrix a2 = a * a;
    const ComplexMatrix a4 = a2 * a2;
    const ComplexMatrix a6 = a4 * a2;
    ComplexMatrix tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
    ComplexMatrix u_inner = a6 * tmp;
    u_inner += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const ComplexMatrix u = a * u_inner;
    tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
    ComplexMatrix v = a6 * tmp;
    v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    return solve_pade(u, v);
}

}  // namespace

ComplexMatrix expm(const ComplexMatrix& m) {
    require_square(m, "expm");
    require_finite(m, "expm");
    const Eigen::Index n = m.rows();
    if (n == 0) return m;

    const double norm = norm1(m);
    if (norm == 0.0) return identity(n);
    if (norm <= kTheta3) return pade_low(m, kPade3);
    if (norm <= kTheta5) return pade_low(m, kPade5);
    if (norm <= kTheta7) return pade_low(m, kPade7);
    if (norm <= kTheta9) return pade_low(m, kPade9);

    int squarings = 0;
    if (norm > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
    }
    const ComplexMatrix scaled = m / std::ldexp(1.0, squarings);
    ComplexMatrix r = pade13(scaled);
    for (int i = 0; i < squarings; ++i) {
        r = r * r;
    }
    return r;
}

SpectralDecomposition eig_general(const ComplexMatrix& m) {
    require_square(m, "eig_general");
    require_finite(m, "eig_general");
    SpectralDecomposition out;
    const Eigen::Index n = m.rows();
    if (n == 0) {
        out.diagonalizable = true;
        return out;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eig_general: Schur decomposition did not converge");
    }
    out.eigenvalues = solver.eigenvalues();
    out.right_eigenvectors = solver.eigenvectors();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double nrm = out.right_eigenvectors.col(j).norm();
        if (nrm > 0.0) out.right_eigenvectors.col(j) /= nrm;
    }

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(out.right_eigenvectors);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(n - 1);
    out.condition_estimate =
        smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    out.diagonalizable = std::isfinite(out.condition_estimate) &&
                         out.condition_estimate <= kDefectiveCondition;
    return out;
}

std::vector<ComplexVector> nullspace(const ComplexMatrix& m, double tol) {
    require_square(m, "nullspace");
    if (!(tol > 0.0)) throw std::invalid_argument("nullspace: tol must be positive");
    std::vector<ComplexVector> basis;
    const Eigen::Index n = m.rows();
    if (n == 0) return basis;

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double threshold = tol * sv(0);
    const Eigen::MatrixXcd& v = svd.matrixV();
    for (Eigen::Index j = 0; j < n; ++j) {
        // A zero matrix has everything in its null space.
        if (sv(j) <= threshold) basis.emplace_back(v.col(j));
    }
    return basis;
}

}  // namespace kbes
