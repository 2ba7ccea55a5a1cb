#include <cmath>
#include <stdexcept>

#include "kbes/models.hpp"

namespace kbes::models {

namespace {

ComplexMatrix sigma_plus() {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(kExcited, kGround) = 1.0;
    return s;
}

ComplexMatrix sigma_minus() {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(kGround, kExcited) = 1.0;
    return s;
}

ComplexMatrix sigma_z() {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(kExcited, kExcited) = 1.0;
    s(kGround, kGround) = -1.0;
    return s;
}

}  // namespace

DrivenQubitParams DrivenQubitParams::from_reduced(double n, double f_gamma, double lambda_gamma,
                                                  double gamma) {
    return DrivenQubitParams{n, f_gamma * gamma, lambda_gamma * gamma, gamma};
}

void DrivenQubitParams::validate() const {
    if (!std::isfinite(n) || !std::isfinite(f) || !std::isfinite(lambda) || !std::isfinite(gamma)) {
        throw ModelError("driven qubit: parameters must be finite");
    }
    if (n < 0.0) throw ModelError("driven qubit: photon number n must be >= 0");
    if (!(gamma > 0.0)) throw ModelError("driven qubit: gamma must be > 0");
}

LindbladModel driven_damped_qubit(const DrivenQubitParams& p) {
    p.validate();
    const ComplexMatrix h = p.lambda * sigma_z() + p.f * (sigma_plus() + sigma_minus());
    ComplexMatrix coupling = ComplexMatrix::Zero(2, 2);
    coupling(0, 0) = p.gamma * (p.n + 1.0);
    coupling(1, 1) = p.gamma * p.n;
    return LindbladModel::make(h, {sigma_minus(), sigma_plus()}, coupling, "driven-qubit");
}

ComplexMatrix qubit_liouvillian_closed_form(const DrivenQubitParams& p) {
    const double alpha = p.gamma * (p.n + 1.0) / 2.0;
    const double beta = p.gamma * p.n / 2.0;
    const cplx i_f = I_UNIT * p.f;
    const cplx two_i_lambda = 2.0 * I_UNIT * p.lambda;
    ComplexMatrix f(4, 4);
    // clang-format off
    f << -2.0 * alpha, i_f,                          -i_f,                         2.0 * beta,
         i_f,          -alpha - beta - two_i_lambda,  0.0,                         -i_f,
         -i_f,         0.0,                          -alpha - beta + two_i_lambda,  i_f,
         2.0 * alpha,  -i_f,                          i_f,                         -2.0 * beta;
    // clang-format on
    return f;
}

ComplexMatrix qubit_steady_closed_form(double n, double f_gamma, double lambda_gamma) {
    if (n < 0.0) throw std::invalid_argument("qubit_steady_closed_form: n must be >= 0");
    const double half = n + 0.5;
    const double m = half * half + 2.0 * (f_gamma * f_gamma + 2.0 * lambda_gamma * lambda_gamma);
    const double norm = 1.0 / (2.0 * n + 1.0);
    ComplexMatrix rho(2, 2);
    rho(0, 0) = norm * (n + f_gamma * f_gamma / m);
    rho(0, 1) = norm * (-I_UNIT * f_gamma * (half - 2.0 * I_UNIT * lambda_gamma) / m);
    rho(1, 0) = norm * (I_UNIT * f_gamma * (half + 2.0 * I_UNIT * lambda_gamma) / m);
    rho(1, 1) = norm * (((n + 1.0) * m - f_gamma * f_gamma) / m);
    return rho;
}

CoherenceMaximum qubit_max_coherence(double n, double f_gamma) {
    if (n < 0.0) throw std::invalid_argument("qubit_max_coherence: n must be >= 0");
    // |ρ₁₀|² = f²u / ((u + 2f²)² (2n+1)²) with u = (n+½)² + 4Λ_γ², maximal at u = 2f².
    const double half_sq = (n + 0.5) * (n + 0.5);
    const double f_sq = f_gamma * f_gamma;
    const double scale = 2.0 * n + 1.0;
    CoherenceMaximum out;
    if (2.0 * f_sq > half_sq) {
        out.lambda_gamma_star = std::sqrt((2.0 * f_sq - half_sq) / 4.0);
        out.max_abs_rho10 = 1.0 / (2.0 * std::sqrt(2.0) * scale);
    } else {
        out.lambda_gamma_star = 0.0;
        out.max_abs_rho10 = std::abs(f_gamma) * std::sqrt(half_sq) / ((half_sq + 2.0 * f_sq) * scale);
    }
    return out;
}

}  // namespace kbes::models
