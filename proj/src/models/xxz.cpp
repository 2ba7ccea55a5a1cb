#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "kbes/models.hpp"

namespace kbes::models {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool site_up(Eigen::Index index, int n_qubits, int site) {
    return ((index >> (n_qubits - site)) & 1) != 0;
}

Eigen::Index site_mask(int n_qubits, int site) { return Eigen::Index{1} << (n_qubits - site); }

// Nonzero entries of column `index` of the chain Hamiltonian: pairs (row, value).
std::vector<std::pair<Eigen::Index, double>> hamiltonian_column(int n_qubits, double j, double jz,
                                                                Eigen::Index index) {
    std::vector<std::pair<Eigen::Index, double>> out;
    double diagonal = 0.0;
    for (int i = 1; i <= n_qubits; ++i) {
        const int next = i % n_qubits + 1;
        const bool up_i = site_up(index, n_qubits, i);
        const bool up_next = site_up(index, n_qubits, next);
        diagonal += jz * (up_i == up_next ? 1.0 : -1.0);
        // σ⁺σ⁻ + σ⁻σ⁺ swaps antiparallel neighbours with amplitude 1.
        if (up_i != up_next && j != 0.0) {
            out.emplace_back(index ^ (site_mask(n_qubits, i) | site_mask(n_qubits, next)), j);
        }
    }
    out.emplace_back(index, diagonal);
    return out;
}

cplx momentum_phase(double numerator, int n_qubits) {
    return std::polar(1.0, kTwoPi * numerator / static_cast<double>(n_qubits));
}

// (e^{h t} - 1) / h, continuous at h = 0.
cplx relaxation_integral(cplx h, double t) {
    if (std::abs(h * t) < 1e-8) return t * (1.0 + 0.5 * h * t);
    return (std::exp(h * t) - 1.0) / h;
}

void check_chain_size(int n_qubits) {
    if (n_qubits < 2) throw ModelError("xxz: at least 2 qubits required");
    if (n_qubits > 30) throw ModelError("xxz: at most 30 qubits supported");
}

}  // namespace

void XXZParams::validate() const {
    check_chain_size(n_qubits);
    if (!std::isfinite(j) || !std::isfinite(jz) || !std::isfinite(gamma) || !std::isfinite(a) ||
        !std::isfinite(b.real()) || !std::isfinite(b.imag())) {
        throw ModelError("xxz: parameters must be finite");
    }
    if (!(gamma > 0.0)) throw ModelError("xxz: gamma must be > 0");
    if (std::abs(a * a + std::norm(b) - 1.0) > 1e-12) {
        throw ModelError("xxz: initial amplitudes must satisfy a^2 + |b|^2 = 1");
    }
}

Eigen::Index single_excitation_index(int n_qubits, int site) {
    if (site < 1 || site > n_qubits) {
        throw std::out_of_range("site " + std::to_string(site) + " outside 1.." +
                                std::to_string(n_qubits));
    }
    return site_mask(n_qubits, site);
}

ComplexMatrix xxz_hamiltonian(int n_qubits, double j, double jz) {
    check_chain_size(n_qubits);
    if (n_qubits > 14) throw ModelError("xxz_hamiltonian: dense Hamiltonian limited to 14 qubits");
    const Eigen::Index dim = Eigen::Index{1} << n_qubits;
    ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        for (const auto& [row, value] : hamiltonian_column(n_qubits, j, jz, col)) {
            h(row, col) += value;
        }
    }
    return h;
}

LindbladModel xxz_chain(const XXZParams& p) {
    p.validate();
    if (p.n_qubits > kMaxFullChainQubits) {
        throw ModelError("xxz_chain: the full Liouvillian path supports N <= " +
                         std::to_string(kMaxFullChainQubits) + "; use the analytic sector path");
    }
    const int n = p.n_qubits;
    const Eigen::Index dim = Eigen::Index{1} << n;
    std::vector<ComplexMatrix> jumps;
    jumps.reserve(static_cast<std::size_t>(n));
    for (int site = 1; site <= n; ++site) {
        ComplexMatrix lower = ComplexMatrix::Zero(dim, dim);
        const Eigen::Index mask = site_mask(n, site);
        for (Eigen::Index idx = 0; idx < dim; ++idx) {
            if (idx & mask) lower(idx ^ mask, idx) = 1.0;
        }
        jumps.push_back(std::move(lower));
    }
    const ComplexMatrix coupling = 2.0 * p.gamma * identity(n);
    return LindbladModel::make(xxz_hamiltonian(n, p.j, p.jz), std::move(jumps), coupling,
                               "xxz-N" + std::to_string(n));
}

OneParticleSector one_particle_sector(int n_qubits, double j, double jz) {
    check_chain_size(n_qubits);
    const int n = n_qubits;
    OneParticleSector sector;
    sector.n_qubits = n;

    for (const auto& [row, value] : hamiltonian_column(n, j, jz, 0)) {
        if (row == 0) sector.vacuum_energy = value;
    }

    // Site n occupies sector row n-1.
    sector.sector_hamiltonian = ComplexMatrix::Zero(n, n);
    for (int site = 1; site <= n; ++site) {
        for (const auto& [row, value] :
             hamiltonian_column(n, j, jz, single_excitation_index(n, site))) {
            const int target = n - static_cast<int>(std::llround(std::log2(static_cast<double>(row))));
            sector.sector_hamiltonian(target - 1, site - 1) += value;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        Eigen::MatrixXcd(sector.sector_hamiltonian), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& evals = es.eigenvalues();
    sector.sector_spectrum.assign(evals.data(), evals.data() + evals.size());

    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    sector.momentum_states = ComplexMatrix(n, n);
    for (int site = 1; site <= n; ++site) {
        for (int k = 1; k <= n; ++k) {
            sector.momentum_states(site - 1, k - 1) = inv_sqrt_n * momentum_phase(site * k, n);
        }
    }

    // Each momentum state takes the diagonalized eigenvalue closest to its
    // Rayleigh quotient.
    sector.energies.resize(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const ComplexVector v = sector.momentum_states.col(k - 1);
        const double rayleigh = (v.adjoint() * sector.sector_hamiltonian * v)(0).real();
        const auto nearest = std::min_element(
            sector.sector_spectrum.begin(), sector.sector_spectrum.end(),
            [rayleigh](double x, double y) { return std::abs(x - rayleigh) < std::abs(y - rayleigh); });
        sector.energies[static_cast<std::size_t>(k - 1)] = *nearest;
    }
    return sector;
}

double dispersion_convention_factor(const OneParticleSector& sector, double j, double jz) {
    const int n = sector.n_qubits;
    if (j == 0.0) return std::numeric_limits<double>::quiet_NaN();
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double c = std::cos(kTwoPi * k / n);
        const double shifted = sector.energies[static_cast<std::size_t>(k - 1)] - (n - 4) * jz;
        num += shifted * c;
        den += j * c * c;
    }
    return num / den;
}

ComplexMatrix SectorState::to_dense() const {
    if (n_qubits > 14) throw ModelError("SectorState::to_dense: limited to 14 qubits");
    const Eigen::Index dim = Eigen::Index{1} << n_qubits;
    ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
    rho(0, 0) = vacuum_population;
    for (int n = 1; n <= n_qubits; ++n) {
        const Eigen::Index in = single_excitation_index(n_qubits, n);
        // Hermitian by construction: the excitation-to-vacuum row mirrors the coherence.
        rho(0, in) = vacuum_coherence(n - 1);
        rho(in, 0) = std::conj(vacuum_coherence(n - 1));
        for (int m = 1; m <= n_qubits; ++m) {
            rho(in, single_excitation_index(n_qubits, m)) = excitation_block(n - 1, m - 1);
        }
    }
    return rho;
}

VectorizedState SectorState::vectorized() const { return vectorize(to_dense()); }

cplx SectorState::trace() const { return vacuum_population + excitation_block.trace(); }

SectorState xxz_initial_state(const XXZParams& p) {
    p.validate();
    const int n = p.n_qubits;
    SectorState s;
    s.n_qubits = n;
    s.vacuum_population = p.a * p.a;
    s.vacuum_coherence = ComplexVector::Zero(n);
    s.vacuum_coherence(0) = p.a * std::conj(p.b);
    s.excitation_block = ComplexMatrix::Zero(n, n);
    s.excitation_block(0, 0) = std::norm(p.b);
    return s;
}

SectorState momentum_projector(int n_qubits, int k) {
    check_chain_size(n_qubits);
    if (k < 1 || k > n_qubits) throw std::out_of_range("momentum index outside 1..N");
    SectorState s;
    s.n_qubits = n_qubits;
    s.vacuum_population = 0.0;
    s.vacuum_coherence = ComplexVector::Zero(n_qubits);
    ComplexVector v(n_qubits);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_qubits));
    for (int site = 1; site <= n_qubits; ++site) {
        v(site - 1) = inv_sqrt_n * momentum_phase(site * k, n_qubits);
    }
    s.excitation_block = v * v.adjoint();
    return s;
}

SectorState xxz_sector_evolve(const OneParticleSector& sector, double gamma,
                              const SectorState& initial, double t) {
    const int n = sector.n_qubits;
    if (initial.n_qubits != n || initial.vacuum_coherence.size() != n ||
        initial.excitation_block.rows() != n || initial.excitation_block.cols() != n) {
        throw DimensionError("xxz_sector_evolve: state does not match the sector size");
    }
    const ComplexMatrix& u = sector.momentum_states;
    const auto energy = [&](int k) { return sector.energies[static_cast<std::size_t>(k)]; };

    ComplexMatrix block = u.adjoint() * initial.excitation_block * u;
    ComplexVector coherence = u.transpose() * initial.vacuum_coherence;

    cplx vacuum = initial.vacuum_population;
    for (int k = 0; k < n; ++k) {
        const cplx h_kk = -2.0 * gamma;
        vacuum += 2.0 * gamma * relaxation_integral(h_kk, t) * block(k, k);
    }
    for (int k = 0; k < n; ++k) {
        const cplx h_0k = I_UNIT * (energy(k) - sector.vacuum_energy) - gamma;
        coherence(k) *= std::exp(h_0k * t);
        for (int kp = 0; kp < n; ++kp) {
            const cplx h_kkp = I_UNIT * (energy(kp) - energy(k)) - 2.0 * gamma;
            block(k, kp) *= std::exp(h_kkp * t);
        }
    }

    SectorState out;
    out.n_qubits = n;
    out.vacuum_population = vacuum;
    out.vacuum_coherence = u.conjugate() * coherence;
    out.excitation_block = u * block * u.adjoint();
    return out;
}

SectorState xxz_analytic_evolve(const XXZParams& p, double t) {
    p.validate();
    const int n = p.n_qubits;
    const OneParticleSector sector = one_particle_sector(n, p.j, p.jz);
    const auto energy = [&](int k) { return sector.energies[static_cast<std::size_t>(k - 1)]; };
    const double e0 = sector.vacuum_energy;
    const double nd = static_cast<double>(n);
    const double b_sq = std::norm(p.b);

    SectorState s;
    s.n_qubits = n;
    s.vacuum_population = 1.0 - b_sq * std::exp(-2.0 * p.gamma * t);
    s.vacuum_coherence = ComplexVector::Zero(n);
    s.excitation_block = ComplexMatrix::Zero(n, n);

    std::vector<cplx> h0(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        h0[static_cast<std::size_t>(k - 1)] = I_UNIT * (energy(k) - e0) - p.gamma;
    }
    for (int site = 1; site <= n; ++site) {
        cplx sum = 0.0;
        for (int k = 1; k <= n; ++k) {
            sum += momentum_phase(-(site - 1) * k, n) * std::exp(h0[static_cast<std::size_t>(k - 1)] * t);
        }
        s.vacuum_coherence(site - 1) = p.a * std::conj(p.b) / nd * sum;
    }

    ComplexMatrix propagators(n, n);
    for (int k = 1; k <= n; ++k) {
        for (int kp = 1; kp <= n; ++kp) {
            const cplx h = I_UNIT * (energy(kp) - energy(k)) - 2.0 * p.gamma;
            propagators(k - 1, kp - 1) = std::exp(h * t);
        }
    }
    for (int row = 1; row <= n; ++row) {
        for (int col = 1; col <= n; ++col) {
            cplx sum = 0.0;
            for (int k = 1; k <= n; ++k) {
                for (int kp = 1; kp <= n; ++kp) {
                    sum += momentum_phase((row - 1) * k - (col - 1) * kp, n) *
                           propagators(k - 1, kp - 1);
                }
            }
            s.excitation_block(row - 1, col - 1) = b_sq / (nd * nd) * sum;
        }
    }
    return s;
}

ComplexMatrix xxz_reduced_qubit(const XXZParams& p, int site, double t) {
    p.validate();
    const int n = p.n_qubits;
    if (site < 1 || site > n) {
        throw std::out_of_range("xxz_reduced_qubit: site " + std::to_string(site) +
                                " outside 1.." + std::to_string(n));
    }
    const OneParticleSector sector = one_particle_sector(n, p.j, p.jz);
    const auto energy = [&](int k) { return sector.energies[static_cast<std::size_t>(k - 1)]; };
    const double nd = static_cast<double>(n);

    cplx rho01 = 0.0;
    for (int k = 1; k <= n; ++k) {
        const cplx h0k = I_UNIT * (energy(k) - sector.vacuum_energy) - p.gamma;
        rho01 += momentum_phase(-(site - 1) * k, n) * std::exp(h0k * t);
    }
    rho01 *= p.a * std::conj(p.b) / nd;

    cplx rho11 = 0.0;
    for (int k = 1; k <= n; ++k) {
        for (int kp = 1; kp <= n; ++kp) {
            const cplx h = I_UNIT * (energy(kp) - energy(k)) - 2.0 * p.gamma;
            rho11 += momentum_phase((site - 1) * (k - kp), n) * std::exp(h * t);
        }
    }
    rho11 *= std::norm(p.b) / (nd * nd);

    ComplexMatrix rho(2, 2);
    rho << 1.0 - rho11, rho01, std::conj(rho01), rho11;
    return rho;
}

std::vector<double> xxz_site_populations(const XXZParams& p, double t) {
    std::vector<double> pops(static_cast<std::size_t>(p.n_qubits));
    for (int site = 1; site <= p.n_qubits; ++site) {
        pops[static_cast<std::size_t>(site - 1)] = xxz_reduced_qubit(p, site, t)(1, 1).real();
    }
    return pops;
}

ComplexVector w_state_amplitudes(int sign) {
    const double s = sign >= 0 ? 1.0 : -1.0;
    ComplexVector phi(4);
    phi << 0.5, 0.5 * s * I_UNIT, -0.5, 0.5 * s * I_UNIT;
    return phi;
}

double w_state_fidelity(const SectorState& state, int sign) {
    if (state.n_qubits != 4) throw DimensionError("w_state_fidelity: defined for 4 qubits");
    const cplx tr = state.excitation_block.trace();
    if (std::abs(tr) == 0.0) return 0.0;
    const ComplexVector phi = w_state_amplitudes(sign);
    return ((phi.adjoint() * state.excitation_block * phi)(0) / tr).real();
}

std::vector<CrossPoint> xxz_cross_points(const XXZParams& p, const CrossSearchWindow& window) {
    p.validate();
    if (!(window.t_end > window.t_begin) || window.t_begin < 0.0) {
        throw std::invalid_argument("xxz_cross_points: window must satisfy 0 <= t_begin < t_end");
    }
    std::vector<CrossPoint> out;
    if (std::norm(p.b) == 0.0 || p.j == 0.0) return out;

    // Populations from the closed form, with the sector diagonalized once.
    const int n = p.n_qubits;
    const OneParticleSector sector = one_particle_sector(n, p.j, p.jz);
    const double nd = static_cast<double>(n);
    std::vector<cplx> phases(static_cast<std::size_t>(n * n * n));
    for (int site = 1; site <= n; ++site) {
        for (int k = 1; k <= n; ++k) {
            for (int kp = 1; kp <= n; ++kp) {
                phases[static_cast<std::size_t>(((site - 1) * n + k - 1) * n + kp - 1)] =
                    momentum_phase((site - 1) * (k - kp), n);
            }
        }
    }
    std::vector<cplx> propagators(static_cast<std::size_t>(n * n));
    const auto spread = [&](double t) {
        for (int k = 0; k < n; ++k) {
            for (int kp = 0; kp < n; ++kp) {
                const cplx h = I_UNIT * (sector.energies[static_cast<std::size_t>(kp)] -
                                         sector.energies[static_cast<std::size_t>(k)]) -
                               2.0 * p.gamma;
                propagators[static_cast<std::size_t>(k * n + kp)] = std::exp(h * t);
            }
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int site = 0; site < n; ++site) {
            cplx sum = 0.0;
            for (int kk = 0; kk < n * n; ++kk) {
                sum += phases[static_cast<std::size_t>(site * n * n + kk)] *
                       propagators[static_cast<std::size_t>(kk)];
            }
            const double pop = (std::norm(p.b) / (nd * nd) * sum).real();
            lo = std::min(lo, pop);
            hi = std::max(hi, pop);
        }
        return hi - lo;
    };

    const double width = window.t_end - window.t_begin;
    std::size_t samples = window.samples;
    if (samples == 0) {
        samples = static_cast<std::size_t>(std::ceil(width * std::abs(p.j) * 40.0)) + 1;
    }
    samples = std::max<std::size_t>(samples, 3);
    const double dt = width / static_cast<double>(samples - 1);
    std::vector<double> grid(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        grid[i] = spread(window.t_begin + dt * static_cast<double>(i));
    }

    const double time_tol = std::min(1e-10 / p.gamma, 1e-12 * std::max(1.0, width));
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double last_accepted = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < samples; ++i) {
        if (!(grid[i] <= grid[i - 1] && grid[i] < grid[i + 1])) continue;
        // Golden-section search for the kink of the spread inside the bracket.
        double lo = window.t_begin + dt * static_cast<double>(i - 1);
        double hi = window.t_begin + dt * static_cast<double>(i + 1);
        double x1 = hi - golden * (hi - lo);
        double x2 = lo + golden * (hi - lo);
        double f1 = spread(x1), f2 = spread(x2);
        for (int iter = 0; iter < 200; ++iter) {
            const double floor = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi);
            if (hi - lo <= std::max(time_tol, floor)) break;
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - golden * (hi - lo);
                f1 = spread(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + golden * (hi - lo);
                f2 = spread(x2);
            }
        }
        const double t_star = f1 <= f2 ? x1 : x2;
        const double s_star = std::min(f1, f2);
        if (s_star >= kCrossPopulationTol) continue;
        if (t_star - last_accepted < 2.0 * dt) continue;
        last_accepted = t_star;

        CrossPoint cp;
        cp.t = t_star;
        cp.spread = s_star;
        if (n == 4) {
            const SectorState state = xxz_analytic_evolve(p, t_star);
            const double plus = w_state_fidelity(state, +1);
            const double minus = w_state_fidelity(state, -1);
            cp.w_fidelity = std::max(plus, minus);
            cp.w_sign = plus >= minus ? +1 : -1;
        }
        out.push_back(cp);
    }
    return out;
}

}  // namespace kbes::models
