#include <cmath>
#include <stdexcept>

#include "kbes/models.hpp"

namespace kbes::models {

namespace {

ComplexMatrix transition(Eigen::Index m, Eigen::Index n) {
    ComplexMatrix s = ComplexMatrix::Zero(3, 3);
    s(m, n) = 1.0;
    return s;
}

}  // namespace

double VTypeParams::gamma12() const { return beta_i * std::sqrt(gamma1 * gamma2); }

void VTypeParams::validate() const {
    if (!std::isfinite(gamma1) || !std::isfinite(gamma2) || !std::isfinite(beta_i)) {
        throw ModelError("vtype: parameters must be finite");
    }
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw ModelError("vtype: gamma1, gamma2 must be > 0");
    if (beta_i < 0.0 || beta_i > 1.0) throw ModelError("vtype: beta_i must lie in [0, 1]");
}

LindbladModel vtype_qutrit(const VTypeParams& p) {
    p.validate();
    ComplexMatrix coupling(2, 2);
    coupling << p.gamma1, p.gamma12(), p.gamma12(), p.gamma2;
    return LindbladModel::make(ComplexMatrix::Zero(3, 3), {transition(0, 1), transition(0, 2)},
                               coupling, "vtype");
}

ComplexMatrix vtype_closed_form(const ComplexMatrix& rho0, double gamma, double beta_i, double t) {
    if (rho0.rows() != 3 || rho0.cols() != 3) {
        throw DimensionError("vtype_closed_form: initial state must be 3x3");
    }
    const cplx r10 = rho0(1, 0), r20 = rho0(2, 0);
    const cplx r11 = rho0(1, 1), r22 = rho0(2, 2);
    const cplx r12 = rho0(1, 2), r21 = rho0(2, 1);
    const double bt = beta_i * gamma * t;
    const double ch = std::cosh(bt);
    const double sh = std::sinh(bt);
    const double coh_decay = 0.5 * std::exp(-0.5 * (1.0 + beta_i) * gamma * t);
    const double pop_decay = 0.5 * std::exp(-gamma * t);

    ComplexMatrix rho(3, 3);
    rho(1, 0) = coh_decay * (r10 + r20 + std::exp(bt) * (r10 - r20));
    rho(2, 0) = coh_decay * (r10 + r20 + std::exp(bt) * (r20 - r10));
    // The symmetric part r12 + r21 goes with cosh, as obtained by solving the
    // master equation directly.
    rho(2, 1) = pop_decay * (r21 - r12 + (r12 + r21) * ch - (r11 + r22) * sh);
    rho(1, 1) = pop_decay * (r11 - r22 + (r11 + r22) * ch - (r12 + r21) * sh);
    rho(2, 2) = pop_decay * (r22 - r11 + (r11 + r22) * ch - (r12 + r21) * sh);

    rho(0, 1) = std::conj(rho(1, 0));
    rho(0, 2) = std::conj(rho(2, 0));
    rho(1, 2) = std::conj(rho(2, 1));
    rho(0, 0) = rho0.trace() - rho(1, 1) - rho(2, 2);
    return rho;
}

}  // namespace kbes::models
