#pragma once

// Exact Lindblad solver for a cavity mode coupled to a small atom ensemble.
//
// Two bases are supported:
//   * tensor_product   - every atom is an explicit two-level system; per-atom
//                        decay and pump channels are exact.
//   * dicke_symmetric  - only the fully symmetric manifold J = N/2 is kept.
//                        Per-atom decay cannot be expressed there, so it is
//                        approximated by a collective S- channel of rate
//                        gamma_a/N (pump: S+ at rate w/N), which reproduces the
//                        single-excitation decay rate.
//
// Basis ordering is cavity-major: index = n * atom_dim + atomic_index. In the
// tensor basis bit j of the atomic index is 1 when atom j is excited; in the
// Dicke basis the atomic index is M + J.
//
// Frequencies in the Hamiltonian are in rad/s (the Hamiltonian is H/hbar).
// The "rotating" frame rotates at omega_l when a drive is present and at
// omega_m otherwise, so undriven problems never carry the bare 10^10 rad/s
// frequencies.
//
// Operators and the Liouvillian are sparse; the vectorization of rho is
// column-stacking, vec(A rho B) = (B^T (x) A) vec(rho).

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "cavens/ode.hpp"
#include "cavens/params.hpp"

namespace cavens::dicke {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using SpMatrix = Eigen::SparseMatrix<cplx>;

enum class BasisMode { dicke_symmetric, tensor_product };
enum class Frame { lab, rotating };

std::string to_string(BasisMode mode);
BasisMode parse_basis_mode(const std::string& text);

struct HilbertConfig {
    BasisMode basis_mode = BasisMode::tensor_product;
    int fock_cutoff = 0;      // n_max, photon states 0..n_max; <= 0 selects choose_fock_cutoff()
    int n_atoms = 1;
    long dimension_cap = 4096;

    long atom_dimension() const;
    long dimension() const;
    /// Throws ConfigError when the configuration violates a basis invariant
    /// (an automatic cutoff must be resolved first, see resolved()).
    void check() const;
    /// Copy with an automatic cutoff replaced by choose_fock_cutoff(params).
    HilbertConfig resolved(const SystemParams& params) const;
};

/// Smallest cutoff for which the thermal tail nbar^n/(1+nbar)^(n+1) drops
/// below 1e-8, the photon number lost with the tail stays below 1e-9 nbar,
/// and the coherent occupation (bounded by |eta|^2/kappa^2 + nbar)
/// plus five standard deviations fits. Never below 3.
int choose_fock_cutoff(const SystemParams& p);

struct OperatorMatrix {
    SpMatrix m;
    BasisMode basis = BasisMode::tensor_product;
    bool hermitian = false;  // claimed property, verified on construction

    long dimension() const { return m.rows(); }
};

struct CollectiveOps {
    SpMatrix s_plus, s_minus, s_z;  // on the 2J+1 dimensional spin space
};

/// Spin-J ladder operators. J must be a non-negative multiple of 1/2.
CollectiveOps build_collective_ops(double J);

/// Full-space operators for the configured basis.
struct SystemOperators {
    HilbertConfig config;
    SpMatrix a, a_dag, number;
    SpMatrix s_plus, s_minus, s_z;                    // collective, S_z = sum sigma_z / 2
    std::vector<SpMatrix> sigma_minus, sigma_plus, sigma_z;  // per atom, tensor basis only
};

SystemOperators build_operators(const HilbertConfig& config);

/// H/hbar. The lab frame is only available without a coherent drive.
OperatorMatrix build_hamiltonian(const SystemParams& params, const HilbertConfig& config,
                                 Frame frame = Frame::rotating);

struct Liouvillian {
    SpMatrix L;          // acts on column-stacked vec(rho)
    long hilbert_dim = 0;
    BasisMode basis = BasisMode::tensor_product;
    int decay_channels = 0;  // number of atomic lowering channels
    int pump_channels = 0;
};

Liouvillian build_liouvillian(const SystemParams& params, const HilbertConfig& config);

struct DensityMatrix {
    CMatrix rho;
    BasisMode basis = BasisMode::tensor_product;

    double trace_error() const;        // |tr(rho) - 1|
    double hermiticity_error() const;  // max |rho - rho^dagger|
    double min_eigenvalue() const;
    /// Checks trace and Hermiticity within `tol` and eigenvalues >= -`pos_tol`.
    bool valid(double tol = 1e-9, double pos_tol = 1e-8) const;
    cplx expect(const SpMatrix& op) const;
};

CVector vectorize(const CMatrix& rho);
CMatrix unvectorize(const CVector& v, long dim);

struct SteadyStateOptions {
    // Liouville dimensions up to this size get a dense SVD null-space check.
    long svd_check_limit = 1600;
    double degeneracy_threshold = 1e-8;  // second-smallest / largest singular value
    double residual_factor = 1e-10;      // ||L rho||_inf < factor * ||L||_inf
};

/// Steady state with tr(rho) = 1. Throws NumericalError on a degenerate null
/// space or when the residual check fails.
DensityMatrix steady_state(const Liouvillian& liouvillian, const SteadyStateOptions& opts = {});

struct DensityTrajectory {
    std::vector<double> t;
    std::vector<DensityMatrix> rho;
    ode::Stats stats;
};

/// Time evolution of rho under the Liouvillian, sampled on `t_grid`.
DensityTrajectory propagate(const DensityMatrix& rho0, const Liouvillian& liouvillian,
                            const std::vector<double>& t_grid, const ode::Options& opts = {});

struct TransmissionPoint {
    double delta_m = 0.0;
    double photons = 0.0;
    double re_a = 0.0;
    double im_a = 0.0;
    double sz = 0.0;           // <sigma_z> per atom
    std::string status = "ok";
};

/// Steady states across a scan of the drive frequency (omega_a - omega_m fixed).
/// Failing points are marked in `status` instead of aborting the scan. The
/// dense null-space check runs on the first grid point only: sweeping omega_l
/// leaves the channel structure that decides degeneracy unchanged.
std::vector<TransmissionPoint> transmission_scan(const SystemParams& params, const HilbertConfig& config,
                                                 const std::vector<double>& delta_m_grid,
                                                 const SteadyStateOptions& opts = {});

/// Single steady-state point of the exact solver (used by the scan and CLI).
TransmissionPoint exact_steady_point(const SystemParams& params, const HilbertConfig& config,
                                     const SteadyStateOptions& opts = {});

}  // namespace cavens::dicke
