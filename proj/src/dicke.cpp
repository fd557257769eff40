#include "cavens/dicke.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cavens::dicke {

namespace {

SpMatrix identity(long n) {
    SpMatrix I(n, n);
    I.setIdentity();
    return I;
}

SpMatrix kron(const SpMatrix& A, const SpMatrix& B) {
    SpMatrix out = Eigen::kroneckerProduct(A, B).eval();
    out.makeCompressed();
    return out;
}

SpMatrix from_triplets(long n, const std::vector<Eigen::Triplet<cplx>>& t) {
    SpMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMatrix annihilation(int n_max) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (int n = 1; n <= n_max; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    return from_triplets(n_max + 1, t);
}

SpMatrix adjoint(const SpMatrix& m) { return SpMatrix(m.adjoint()); }

double max_abs(const SpMatrix& m) {
    double r = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

double inf_norm(const SpMatrix& m) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMatrix::InnerIterator it(m, k); it; ++it) rows[it.row()] += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
}

// D[C] rho = C rho C^dag - (C^dag C rho + rho C^dag C)/2 in vectorized form.
SpMatrix dissipator(const SpMatrix& C) {
    const long d = C.rows();
    const SpMatrix I = identity(d);
    const SpMatrix CdC = C.adjoint() * C;
    SpMatrix Cconj = C.conjugate();
    return kron(Cconj, C) - 0.5 * kron(I, CdC) - 0.5 * kron(SpMatrix(CdC.transpose()), I);
}

}  // namespace

std::string to_string(BasisMode mode) {
    return mode == BasisMode::dicke_symmetric ? "dicke_symmetric" : "tensor_product";
}

BasisMode parse_basis_mode(const std::string& text) {
    if (text == "dicke_symmetric" || text == "dicke") return BasisMode::dicke_symmetric;
    if (text == "tensor_product" || text == "tensor") return BasisMode::tensor_product;
    throw ConfigError("basis_mode: unknown value '" + text + "'");
}

long HilbertConfig::atom_dimension() const {
    if (basis_mode == BasisMode::dicke_symmetric) return n_atoms + 1;
    if (n_atoms > 30) return -1;  // overflow guard, rejected by check()
    return 1L << n_atoms;
}

long HilbertConfig::dimension() const {
    const long ad = atom_dimension();
    if (ad < 0) return -1;
    return static_cast<long>(fock_cutoff + 1) * ad;
}

void HilbertConfig::check() const {
    if (n_atoms < 1) throw ConfigError("n_atoms: must be >= 1");
    if (fock_cutoff < 1) throw ConfigError("fock_cutoff: must be >= 1 once resolved");
    if (basis_mode == BasisMode::tensor_product && n_atoms > 4)
        throw ConfigError("n_atoms: tensor_product basis supports at most 4 atoms");
    const long dim = dimension();
    if (dim < 0 || dim > dimension_cap) {
        std::ostringstream os;
        os << "dimension: Hilbert space dimension " << dim << " exceeds the cap " << dimension_cap;
        throw ConfigError(os.str());
    }
}

HilbertConfig HilbertConfig::resolved(const SystemParams& params) const {
    HilbertConfig c = *this;
    if (c.fock_cutoff <= 0) c.fock_cutoff = choose_fock_cutoff(params);
    return c;
}

int choose_fock_cutoff(const SystemParams& p) {
    const double nbar = p.nbar();
    int n_thermal = 0;
    if (nbar > 0.0) {
        const double q = nbar / (1.0 + nbar);
        // q^n / (1 + nbar) < 1e-8
        n_thermal = static_cast<int>(std::ceil(std::log(1e-8 * (1.0 + nbar)) / std::log(q)));
        // The discarded tail also biases <n>: q^n (n + nbar) < 1e-9 nbar.
        while (std::pow(q, n_thermal) * (n_thermal + nbar) >= 1e-9 * nbar) ++n_thermal;
    }
    double n_drive = nbar;
    if (p.driven() && p.kappa > 0.0) n_drive += std::norm(p.eta) / (p.kappa * p.kappa);
    const int n_coherent = static_cast<int>(std::ceil(n_drive + 5.0 * std::sqrt(n_drive))) + 1;
    return std::max({3, n_thermal, n_coherent});
}

CollectiveOps build_collective_ops(double J) {
    const double twoJ = 2.0 * J;
    if (!(J >= 0.0) || std::abs(twoJ - std::round(twoJ)) > 1e-12)
        throw ConfigError("J: must be a non-negative multiple of 1/2");
    const long dim = std::lround(twoJ) + 1;
    std::vector<Eigen::Triplet<cplx>> tp, tz;
    for (long k = 0; k < dim; ++k) {
        const double M = static_cast<double>(k) - J;
        tz.emplace_back(k, k, M);
        if (k + 1 < dim) tp.emplace_back(k + 1, k, std::sqrt((J + M + 1.0) * (J - M)));
    }
    CollectiveOps ops;
    ops.s_plus = from_triplets(dim, tp);
    ops.s_minus = adjoint(ops.s_plus);
    ops.s_z = from_triplets(dim, tz);
    return ops;
}

SystemOperators build_operators(const HilbertConfig& config) {
    config.check();
    SystemOperators ops;
    ops.config = config;
    const long ad = config.atom_dimension();
    const SpMatrix a1 = annihilation(config.fock_cutoff);
    const SpMatrix Ia = identity(ad);
    const SpMatrix Ic = identity(config.fock_cutoff + 1);
    ops.a = kron(a1, Ia);
    ops.a_dag = adjoint(ops.a);
    ops.number = ops.a_dag * ops.a;

    if (config.basis_mode == BasisMode::dicke_symmetric) {
        const auto col = build_collective_ops(0.5 * config.n_atoms);
        ops.s_plus = kron(Ic, col.s_plus);
        ops.s_minus = kron(Ic, col.s_minus);
        ops.s_z = kron(Ic, col.s_z);
        return ops;
    }

    std::vector<Eigen::Triplet<cplx>> tm{{0, 1, 1.0}}, tz{{0, 0, -1.0}, {1, 1, 1.0}};
    const SpMatrix sm = from_triplets(2, tm);
    const SpMatrix sz = from_triplets(2, tz);
    const int N = config.n_atoms;
    ops.s_plus = SpMatrix(ops.a.rows(), ops.a.cols());
    ops.s_minus = ops.s_plus;
    ops.s_z = ops.s_plus;
    for (int j = 0; j < N; ++j) {
        const SpMatrix lo = identity(1L << j), hi = identity(1L << (N - 1 - j));
        const SpMatrix m = kron(Ic, kron(hi, kron(sm, lo)));
        const SpMatrix z = kron(Ic, kron(hi, kron(sz, lo)));
        ops.sigma_minus.push_back(m);
        ops.sigma_plus.push_back(adjoint(m));
        ops.sigma_z.push_back(z);
        ops.s_minus += m;
        ops.s_plus += ops.sigma_plus.back();
        ops.s_z += 0.5 * z;
    }
    return ops;
}

namespace {

struct FrameFreqs {
    double cavity, atoms;
};

FrameFreqs frame_frequencies(const SystemParams& p, Frame frame) {
    if (frame == Frame::lab) {
        if (p.driven()) throw ConfigError("frame: a coherent drive requires the rotating frame");
        return {p.omega_m, p.omega_a};
    }
    if (p.driven() && !p.omega_l) throw ConfigError("omega_l: rotating frame of a driven system needs omega_l");
    const double ref = p.omega_l ? *p.omega_l : p.omega_m;
    return {p.omega_m - ref, p.omega_a - ref};
}

SpMatrix hamiltonian_matrix(const SystemParams& p, const SystemOperators& ops, Frame frame) {
    const auto f = frame_frequencies(p, frame);
    SpMatrix H = f.cavity * ops.number + f.atoms * ops.s_z;
    H += p.g * (ops.a_dag * ops.s_minus + ops.a * ops.s_plus);
    if (p.driven()) {
        const cplx i(0.0, 1.0);
        H += i * (p.eta * ops.a_dag - std::conj(p.eta) * ops.a);
    }
    H.prune(cplx(0.0, 0.0));
    return H;
}

}  // namespace

OperatorMatrix build_hamiltonian(const SystemParams& params, const HilbertConfig& config, Frame frame) {
    const auto p = validated(params);
    const auto ops = build_operators(config);
    OperatorMatrix H;
    H.m = hamiltonian_matrix(p, ops, frame);
    H.basis = config.basis_mode;
    const SpMatrix diff = H.m - adjoint(H.m);
    H.hermitian = max_abs(diff) <= 1e-12 * std::max(1.0, max_abs(H.m));
    if (!H.hermitian) throw NumericalError("build_hamiltonian: result is not Hermitian");
    return H;
}

Liouvillian build_liouvillian(const SystemParams& params, const HilbertConfig& config) {
    const auto p = validated(params);
    const auto ops = build_operators(config);
    const long d = config.dimension();
    const SpMatrix I = identity(d);
    const SpMatrix H = hamiltonian_matrix(p, ops, Frame::rotating);
    const cplx i(0.0, 1.0);

    Liouvillian out;
    out.hilbert_dim = d;
    out.basis = config.basis_mode;
    out.L = -i * (kron(I, H) - kron(SpMatrix(H.transpose()), I));

    const double nbar = p.nbar();
    if (p.kappa > 0.0) {
        out.L += dissipator(std::sqrt(2.0 * p.kappa * (nbar + 1.0)) * ops.a);
        if (nbar > 0.0) out.L += dissipator(std::sqrt(2.0 * p.kappa * nbar) * ops.a_dag);
    }
    if (config.basis_mode == BasisMode::tensor_product) {
        for (int j = 0; j < config.n_atoms; ++j) {
            if (p.gamma_a > 0.0) {
                out.L += dissipator(std::sqrt(p.gamma_a) * ops.sigma_minus[j]);
                ++out.decay_channels;
            }
            if (p.w > 0.0) {
                out.L += dissipator(std::sqrt(p.w) * ops.sigma_plus[j]);
                ++out.pump_channels;
            }
        }
    } else {
        const double N = config.n_atoms;
        if (p.gamma_a > 0.0) {
            out.L += dissipator(std::sqrt(p.gamma_a / N) * ops.s_minus);
            ++out.decay_channels;
        }
        if (p.w > 0.0) {
            out.L += dissipator(std::sqrt(p.w / N) * ops.s_plus);
            ++out.pump_channels;
        }
    }
    out.L.prune(cplx(0.0, 0.0));
    out.L.makeCompressed();
    return out;
}

double DensityMatrix::trace_error() const { return std::abs(rho.trace() - cplx(1.0, 0.0)); }

double DensityMatrix::hermiticity_error() const {
    if (rho.size() == 0) return 0.0;
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    const CMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool DensityMatrix::valid(double tol, double pos_tol) const {
    return trace_error() <= tol && hermiticity_error() <= tol && min_eigenvalue() >= -pos_tol;
}

cplx DensityMatrix::expect(const SpMatrix& op) const {
    // tr(op rho)
    cplx s(0.0, 0.0);
    for (int k = 0; k < op.outerSize(); ++k)
        for (SpMatrix::InnerIterator it(op, k); it; ++it) s += it.value() * rho(it.col(), it.row());
    return s;
}

CVector vectorize(const CMatrix& rho) { return Eigen::Map<const CVector>(rho.data(), rho.size()); }

CMatrix unvectorize(const CVector& v, long dim) {
    if (v.size() != dim * dim) throw ConfigError("unvectorize: size mismatch");
    return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

DensityMatrix steady_state(const Liouvillian& lv, const SteadyStateOptions& opts) {
    const long d = lv.hilbert_dim;
    const long n = d * d;
    const SpMatrix& L = lv.L;

    if (n <= opts.svd_check_limit) {
        const CMatrix dense_L(L);
        Eigen::BDCSVD<CMatrix> svd(dense_L);
        const auto& sv = svd.singularValues();
        if (sv.size() >= 2 && sv[sv.size() - 2] < opts.degeneracy_threshold * sv[0]) {
            std::ostringstream os;
            os << "steady_state: degenerate null space (second-smallest singular value " << sv[sv.size() - 2]
               << ", largest " << sv[0] << ")";
            throw NumericalError(os.str());
        }
    }

    // Replace the first row by the trace functional.
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(L.nonZeros() + d));
    for (int k = 0; k < L.outerSize(); ++k)
        for (SpMatrix::InnerIterator it(L, k); it; ++it)
            if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
    for (long j = 0; j < d; ++j) t.emplace_back(0, j * d + j, 1.0);
    SpMatrix A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();

    Eigen::SparseLU<SpMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
        throw NumericalError("steady_state: singular trace-constrained system (degenerate steady state?) " +
                             lu.lastErrorMessage());
    CVector b = CVector::Zero(n);
    b[0] = 1.0;
    const CVector x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalError("steady_state: solve failed");

    DensityMatrix out;
    out.basis = lv.basis;
    out.rho = unvectorize(x, d);
    out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
    out.rho /= out.rho.trace();

    const double residual = (L * vectorize(out.rho)).cwiseAbs().maxCoeff();
    const double scale = inf_norm(L);
    if (residual > opts.residual_factor * scale) {
        std::ostringstream os;
        os << "steady_state: residual " << residual << " exceeds " << opts.residual_factor << " * ||L|| = "
           << opts.residual_factor * scale;
        throw NumericalError(os.str());
    }
    return out;
}

DensityTrajectory propagate(const DensityMatrix& rho0, const Liouvillian& lv, const std::vector<double>& t_grid,
                            const ode::Options& opts) {
    const long d = lv.hilbert_dim;
    if (rho0.rho.rows() != d || rho0.rho.cols() != d) throw ConfigError("propagate: rho0 dimension mismatch");
    if (!rho0.valid()) throw ConfigError("propagate: rho0 is not a valid density matrix");
    const long n = d * d;
    const SpMatrix& L = lv.L;

    ode::State y0(2 * n);
    const CVector v0 = vectorize(rho0.rho);
    y0.head(n) = v0.real();
    y0.tail(n) = v0.imag();

    ode::Rhs rhs = [&L, n](double, const ode::State& y, ode::State& dy) {
        CVector v(n);
        v.real() = y.head(n);
        v.imag() = y.tail(n);
        const CVector dv = L * v;
        dy.resize(2 * n);
        dy.head(n) = dv.real();
        dy.tail(n) = dv.imag();
    };

    DensityTrajectory out;
    out.t = t_grid;
    if (t_grid.size() == 1) {
        out.rho.push_back(rho0);
        return out;
    }
    const auto traj = ode::integrate(rhs, y0, t_grid, opts);
    out.stats = traj.stats;
    for (std::size_t k = 0; k < traj.y.size(); ++k) {
        CVector v(n);
        v.real() = traj.y[k].head(n);
        v.imag() = traj.y[k].tail(n);
        DensityMatrix r{unvectorize(v, d), lv.basis};
        if (r.trace_error() > 1e-8 || r.hermiticity_error() > 1e-8) {
            std::ostringstream os;
            os << "propagate: trace/Hermiticity drift beyond 1e-8 at t=" << t_grid[k];
            throw NumericalError(os.str());
        }
        out.rho.push_back(std::move(r));
    }
    return out;
}

TransmissionPoint exact_steady_point(const SystemParams& params, const HilbertConfig& config,
                                     const SteadyStateOptions& opts) {
    const auto p = validated(params);
    HilbertConfig cfg = config.resolved(p);
    cfg.n_atoms = static_cast<int>(p.n_atoms);
    const auto lv = build_liouvillian(p, cfg);
    const auto rho = steady_state(lv, opts);
    const auto ops = build_operators(cfg);
    TransmissionPoint pt;
    pt.delta_m = p.omega_l ? p.omega_m - *p.omega_l : 0.0;
    pt.photons = rho.expect(ops.number).real();
    const cplx a = rho.expect(ops.a);
    pt.re_a = a.real();
    pt.im_a = a.imag();
    pt.sz = 2.0 * rho.expect(ops.s_z).real() / static_cast<double>(cfg.n_atoms);
    return pt;
}

std::vector<TransmissionPoint> transmission_scan(const SystemParams& params, const HilbertConfig& config,
                                                 const std::vector<double>& delta_m_grid,
                                                 const SteadyStateOptions& opts) {
    if (!params.driven()) throw ConfigError("eta: transmission_scan needs a coherent drive");
    std::vector<TransmissionPoint> out;
    out.reserve(delta_m_grid.size());
    SteadyStateOptions point_opts = opts;
    for (double dm : delta_m_grid) {
        SystemParams p = params;
        p.set_cavity_detuning(dm);
        try {
            auto pt = exact_steady_point(p, config, point_opts);
            point_opts.svd_check_limit = 0;
            pt.delta_m = dm;
            out.push_back(pt);
        } catch (const NumericalError& e) {
            TransmissionPoint pt;
            pt.delta_m = dm;
            pt.photons = pt.re_a = pt.im_a = pt.sz = std::nan("");
            pt.status = std::string("failed: ") + e.what();
            out.push_back(pt);
        }
    }
    return out;
}

}  // namespace cavens::dicke
