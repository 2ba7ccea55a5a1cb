#include "kbes/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace kbes {

namespace {

constexpr double kDensityTol = 1e-10;

void check_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("time grid is empty");
    if (!(times.front() >= 0.0)) throw std::invalid_argument("time grid must start at t >= 0");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw std::invalid_argument("time grid must be strictly increasing");
        }
    }
}

bool is_density(const ComplexMatrix& rho) {
    return hermiticity_defect(rho) <= kDensityTol && std::abs(rho.trace() - 1.0) <= kDensityTol;
}

void check_initial(const ComplexMatrix& rho0, Eigen::Index dim, const char* what) {
    if (rho0.rows() != dim || rho0.cols() != dim) {
        throw DimensionError(std::string(what) + ": initial state is " +
                             std::to_string(rho0.rows()) + "x" + std::to_string(rho0.cols()) +
                             ", expected " + std::to_string(dim) + "x" + std::to_string(dim));
    }
    require_finite(rho0, what);
}

void push_state(Trajectory& traj, double t, ComplexMatrix rho) {
    traj.times.push_back(t);
    traj.diagnostics.push_back(diagnose(rho));
    traj.states.push_back(std::move(rho));
}

void check_liouvillian(const Liouvillian& l, const char* what) {
    if (l.matrix.rows() != l.dim * l.dim || l.matrix.cols() != l.dim * l.dim) {
        throw DimensionError(std::string(what) + ": Liouvillian matrix is not dim² x dim²");
    }
}

}  // namespace

StateDiagnostics diagnose(const ComplexMatrix& rho) {
    StateDiagnostics d;
    d.trace_deviation = std::abs(rho.trace() - 1.0);
    d.hermiticity_defect = hermiticity_defect(rho);
    const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

double Trajectory::worst_trace_deviation() const {
    double worst = 0.0;
    for (const auto& d : diagnostics) worst = std::max(worst, d.trace_deviation);
    return worst;
}

double Trajectory::worst_hermiticity_defect() const {
    double worst = 0.0;
    for (const auto& d : diagnostics) worst = std::max(worst, d.hermiticity_defect);
    return worst;
}

double Trajectory::lowest_eigenvalue() const {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& d : diagnostics) lowest = std::min(lowest, d.min_eigenvalue);
    return lowest;
}

Trajectory propagate_expm(const Liouvillian& l, const ComplexMatrix& rho0,
                          const std::vector<double>& times) {
    check_liouvillian(l, "propagate_expm");
    check_initial(rho0, l.dim, "propagate_expm");
    check_times(times);

    Trajectory traj;
    traj.non_density_initial_state = !is_density(rho0);
    traj.times.reserve(times.size());
    traj.states.reserve(times.size());

    ComplexVector state = vectorize(rho0).amplitudes;
    double t_prev = 0.0;
    double cached_step = -1.0;
    ComplexMatrix step_propagator;
    const double step_tol = 1e-12 * std::max(1.0, times.back());
    for (double t : times) {
        const double step = t - t_prev;
        if (step > 0.0) {
            if (cached_step < 0.0 || std::abs(step - cached_step) > step_tol) {
                step_propagator = expm(l.matrix * step);
                cached_step = step;
            }
            state = step_propagator * state;
        }
        push_state(traj, t, devectorize(state));
        t_prev = t;
    }
    return traj;
}

Trajectory propagate_spectral(const Liouvillian& l, const ComplexMatrix& rho0,
                              const std::vector<double>& times, double max_condition) {
    check_liouvillian(l, "propagate_spectral");
    check_initial(rho0, l.dim, "propagate_spectral");
    check_times(times);

    const SpectralDecomposition spec = eig_general(l.matrix);
    if (!spec.diagonalizable || !(spec.condition_estimate <= max_condition)) {
        throw NumericalError("propagate_spectral: eigenbasis is defective or ill-conditioned "
                             "(condition " + std::to_string(spec.condition_estimate) +
                             "); use the expm solver instead");
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(spec.right_eigenvectors);
    const ComplexVector coeffs = lu.solve(vectorize(rho0).amplitudes);

    Trajectory traj;
    traj.non_density_initial_state = !is_density(rho0);
    for (double t : times) {
        const ComplexVector weighted =
            coeffs.cwiseProduct((spec.eigenvalues * t).array().exp().matrix());
        push_state(traj, t, devectorize(ComplexVector(spec.right_eigenvectors * weighted)));
    }
    return traj;
}

double default_rk4_step(const LindbladModel& model) {
    const double norm = norm1(build_liouvillian(model).matrix);
    return norm > 0.0 ? 2e-2 / norm : 2e-2;
}

Trajectory integrate_rk4(const LindbladModel& model, const ComplexMatrix& rho0, double t_end,
                         double dt, std::size_t record_stride) {
    check_initial(rho0, model.dim, "integrate_rk4");
    if (!(t_end >= 0.0)) throw std::invalid_argument("integrate_rk4: t_end must be >= 0");
    if (dt <= 0.0) dt = default_rk4_step(model);
    if (record_stride == 0) record_stride = 1;

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;

    Trajectory traj;
    traj.non_density_initial_state = !is_density(rho0);
    ComplexMatrix rho = rho0;
    push_state(traj, 0.0, rho);
    for (std::size_t s = 1; s <= steps; ++s) {
        const ComplexMatrix k1 = apply_rhs_direct(model, rho);
        const ComplexMatrix k2 = apply_rhs_direct(model, rho + (0.5 * h) * k1);
        const ComplexMatrix k3 = apply_rhs_direct(model, rho + (0.5 * h) * k2);
        const ComplexMatrix k4 = apply_rhs_direct(model, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (s % record_stride == 0 || s == steps) {
            push_state(traj, static_cast<double>(s) * h, rho);
        }
    }
    return traj;
}

ComplexMatrix steady_state(const Liouvillian& l, double tol) {
    check_liouvillian(l, "steady_state");
    const auto null = nullspace(l.matrix, tol);
    if (null.empty()) {
        throw SteadyStateError("steady_state: no null vector within tolerance", {});
    }
    if (null.size() > 1) {
        std::vector<ComplexMatrix> basis;
        basis.reserve(null.size());
        for (const auto& v : null) basis.push_back(devectorize(v));
        throw SteadyStateError("steady_state: degenerate steady manifold of dimension " +
                                   std::to_string(null.size()),
                               std::move(basis));
    }
    ComplexMatrix rho = devectorize(null.front());
    const cplx tr = rho.trace();
    if (std::abs(tr) < 1e-12) {
        throw SteadyStateError("steady_state: null vector is traceless", {rho});
    }
    rho /= tr;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return rho;
}

SpectralDecomposition liouvillian_spectrum(const Liouvillian& l) {
    check_liouvillian(l, "liouvillian_spectrum");
    SpectralDecomposition spec = eig_general(l.matrix);
    const double bound = 1e-10 * norm1(l.matrix);
    if (spec.eigenvalues.size() > 0) {
        const double max_re = spec.eigenvalues.real().maxCoeff();
        if (max_re > bound) {
            throw NumericalError("liouvillian_spectrum: eigenvalue with positive real part " +
                                 std::to_string(max_re));
        }
    }
    return spec;
}

ComplexMatrix choi_of_propagator(const ComplexMatrix& propagator, Eigen::Index dim) {
    if (dim < 1 || propagator.rows() != dim * dim || propagator.cols() != dim * dim) {
        throw DimensionError("choi_of_propagator: propagator must be dim² x dim²");
    }
    ComplexMatrix choi(dim * dim, dim * dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            for (Eigen::Index k = 0; k < dim; ++k) {
                for (Eigen::Index l = 0; l < dim; ++l) {
                    choi(i * dim + k, j * dim + l) = propagator(i * dim + j, k * dim + l);
                }
            }
        }
    }
    return choi;
}

ChannelDecomposition kraus_decompose(const ComplexMatrix& choi, double tol) {
    require_square(choi, "kraus_decompose");
    const auto d2 = choi.rows();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d2))));
    if (d * d != d2) throw DimensionError("kraus_decompose: Choi dimension is not a square");
    if (!(tol > 0.0)) throw std::invalid_argument("kraus_decompose: tol must be positive");

    const double scale = std::max(1.0, max_abs(choi));
    if (hermiticity_defect(choi) > tol * scale) {
        throw NotCompletelyPositiveError("kraus_decompose: Choi matrix is not Hermitian");
    }
    const Eigen::MatrixXcd herm = 0.5 * (choi + choi.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
    const auto& evals = es.eigenvalues();  // ascending
    const double cutoff = tol * std::max(1.0, evals(d2 - 1));
    if (evals(0) < -cutoff) {
        throw NotCompletelyPositiveError("kraus_decompose: Choi eigenvalue " +
                                         std::to_string(evals(0)) +
                                         " is negative; map is not completely positive");
    }

    ChannelDecomposition out;
    for (Eigen::Index idx = d2 - 1; idx >= 0; --idx) {
        const double w = evals(idx);
        if (w <= cutoff) break;
        ComplexVector v = es.eigenvectors().col(idx);
        Eigen::Index arg = 0;
        const double peak = v.cwiseAbs().maxCoeff();
        while (std::abs(v(arg)) < peak * (1.0 - 1e-12)) ++arg;
        v *= std::conj(v(arg)) / std::abs(v(arg));
        ComplexMatrix k = Eigen::Map<const ComplexMatrix>(v.data(), d, d) * std::sqrt(w);
        out.kraus_ops.push_back(std::move(k));
        out.weights.push_back(w);
    }

    ComplexMatrix completeness = ComplexMatrix::Zero(d, d);
    for (const auto& k : out.kraus_ops) completeness += k.adjoint() * k;
    out.completeness_defect = max_abs(completeness - identity(d));
    return out;
}

ComplexMatrix apply_kraus(const ChannelDecomposition& channel, const ComplexMatrix& rho) {
    if (channel.kraus_ops.empty()) return ComplexMatrix::Zero(rho.rows(), rho.cols());
    const auto d = channel.kraus_ops.front().rows();
    if (rho.rows() != d || rho.cols() != d) throw DimensionError("apply_kraus: dimension mismatch");
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (const auto& k : channel.kraus_ops) out += k * rho * k.adjoint();
    return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, const std::vector<Eigen::Index>& dims,
                            const std::vector<std::size_t>& keep) {
    require_square(rho, "partial_trace");
    if (dims.empty()) throw DimensionError("partial_trace: no subsystem dimensions given");
    Eigen::Index total = 1;
    for (auto d : dims) {
        if (d < 1) throw DimensionError("partial_trace: subsystem dimension must be positive");
        total *= d;
    }
    if (total != rho.rows()) {
        throw DimensionError("partial_trace: product of subsystem dimensions " +
                             std::to_string(total) + " != state dimension " +
                             std::to_string(rho.rows()));
    }
    if (keep.empty()) throw DimensionError("partial_trace: keep set is empty");
    std::vector<bool> kept(dims.size(), false);
    for (auto k : keep) {
        if (k >= dims.size()) throw DimensionError("partial_trace: keep index out of range");
        kept[k] = true;
    }

    // Strides of each factor in the full index and in the reduced index.
    const std::size_t nf = dims.size();
    std::vector<Eigen::Index> stride(nf, 1);
    for (std::size_t f = nf - 1; f > 0; --f) stride[f - 1] = stride[f] * dims[f];
    std::vector<Eigen::Index> kept_stride(nf, 0);
    Eigen::Index reduced = 1;
    for (std::size_t f = nf; f-- > 0;) {
        if (kept[f]) {
            kept_stride[f] = reduced;
            reduced *= dims[f];
        }
    }

    // Split a full index into (kept part, traced part) codes.
    std::vector<Eigen::Index> kept_code(total), traced_code(total);
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        Eigen::Index kc = 0, tc = 0;
        for (std::size_t f = 0; f < nf; ++f) {
            const Eigen::Index digit = (idx / stride[f]) % dims[f];
            if (kept[f]) {
                kc += digit * kept_stride[f];
            } else {
                tc = tc * dims[f] + digit;
            }
        }
        kept_code[idx] = kc;
        traced_code[idx] = tc;
    }

    ComplexMatrix out = ComplexMatrix::Zero(reduced, reduced);
    for (Eigen::Index i = 0; i < total; ++i) {
        for (Eigen::Index j = 0; j < total; ++j) {
            if (traced_code[i] == traced_code[j]) out(kept_code[i], kept_code[j]) += rho(i, j);
        }
    }
    return out;
}

}  // namespace kbes
