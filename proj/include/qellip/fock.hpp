#pragma once

// Truncated two-mode Fock space |m>_p (x) |n>_s with a per-mode cutoff M.
// Amplitudes are stored flat at index m * (M + 1) + n.

#include <qellip/errors.hpp>
#include <qellip/phase_space.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace qellip::fock {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct TwoModeFockState {
    int cutoff = 0;
    CVector amplitudes;
    double tail_mass = 0.0;  // norm lost to truncation, before renormalization

    int dimension() const { return (cutoff + 1) * (cutoff + 1); }
    Eigen::Index index(int m, int n) const { return static_cast<Eigen::Index>(m) * (cutoff + 1) + n; }
    cplx amplitude(int m, int n) const { return amplitudes(index(m, n)); }
    double norm_squared() const { return amplitudes.squaredNorm(); }
};

/// Restriction of an operator to the N-photon layer, basis |n, N-n>, n = 0..N.
struct LayerOperator {
    int photon_number = 0;
    CMatrix matrix;
};

namespace detail {

inline void require_cutoff(int M) {
    if (M < 1) throw Error(ErrorKind::invalid_parameter, "cutoff must be at least 1");
}

inline Eigen::Index flat(int M, int m, int n) { return static_cast<Eigen::Index>(m) * (M + 1) + n; }

template <class F>
SparseOperator diagonal_operator(int M, F&& entry) {
    require_cutoff(M);
    const Eigen::Index dim = static_cast<Eigen::Index>(M + 1) * (M + 1);
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(dim));
    for (int m = 0; m <= M; ++m) {
        for (int n = 0; n <= M; ++n) {
            const Eigen::Index i = flat(M, m, n);
            t.emplace_back(i, i, cplx{entry(m, n), 0.0});
        }
    }
    SparseOperator op(dim, dim);
    op.setFromTriplets(t.begin(), t.end());
    return op;
}

inline void check_dimension(const TwoModeFockState& state, const SparseOperator& op) {
    if (op.rows() != state.dimension() || op.cols() != state.dimension()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "operator is " + std::to_string(op.rows()) + "x" + std::to_string(op.cols()) +
                        ", state dimension " + std::to_string(state.dimension()));
    }
}

/// |<n|alpha>|^2 summed over n > M.
inline double poisson_tail(double mean, int M) {
    if (mean == 0.0) return 0.0;
    const double log_mean = std::log(mean);
    double tail = 0.0;
    for (int n = M + 1;; ++n) {
        const double term = std::exp(-mean + n * log_mean - std::lgamma(n + 1.0));
        tail += term;
        if (n > mean && term < 1e-18 * std::max(tail, 1e-300)) break;
        if (n > mean && term == 0.0) break;
    }
    return tail;
}

inline std::vector<cplx> coherent_amplitudes(cplx alpha, int M) {
    std::vector<cplx> c(static_cast<std::size_t>(M + 1), cplx{0.0, 0.0});
    const double r = std::abs(alpha);
    if (r == 0.0) {
        c[0] = 1.0;
        return c;
    }
    const double x = r * r;
    const double phase = std::arg(alpha);
    for (int n = 0; n <= M; ++n) {
        const double mag = std::exp(-0.5 * x + n * std::log(r) - 0.5 * std::lgamma(n + 1.0));
        c[static_cast<std::size_t>(n)] = std::polar(mag, n * phase);
    }
    return c;
}

inline double tail_tolerance_or_default(double tol) { return tol > 0.0 ? tol : default_tail_tolerance(); }

}  // namespace detail

/// E^(N): sum_n |n, N-n><n+1, N-n-1| + |N, 0><0, N|.
inline LayerOperator phase_operator_layer(int N) {
    if (N < 1) throw Error(ErrorKind::invalid_parameter, "layer photon number must be at least 1");
    LayerOperator op;
    op.photon_number = N;
    op.matrix = CMatrix::Zero(N + 1, N + 1);
    for (int n = 0; n < N; ++n) op.matrix(n, n + 1) = 1.0;
    op.matrix(N, 0) = 1.0;
    return op;
}

/// L = (N_p - N_s) / 2.
inline SparseOperator build_L_operator(int M) {
    return detail::diagonal_operator(M, [](int m, int n) { return 0.5 * (m - n); });
}

/// N = N_p + N_s.
inline SparseOperator build_N_operator(int M) {
    return detail::diagonal_operator(M, [](int m, int n) { return static_cast<double>(m + n); });
}

/// P = sqrt(N_p / (N_s + 1)).
inline SparseOperator modulus_operator(int M) {
    return detail::diagonal_operator(M, [](int m, int n) { return std::sqrt(static_cast<double>(m) / (n + 1.0)); });
}

/// Sum of E^(N) over all layers, one nonzero per column. In layers N > M the
/// shift out of |m, M> leaves the truncated space and is dropped; the vacuum
/// wrap |0, N> -> |N, 0> always stays inside.
inline SparseOperator phase_operator(int M) {
    detail::require_cutoff(M);
    const Eigen::Index dim = static_cast<Eigen::Index>(M + 1) * (M + 1);
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(dim));
    for (int m = 0; m <= M; ++m) {
        for (int n = 0; n <= M; ++n) {
            const Eigen::Index col = detail::flat(M, m, n);
            if (m == 0) {
                t.emplace_back(detail::flat(M, n, 0), col, cplx{1.0, 0.0});
            } else if (n + 1 <= M) {
                t.emplace_back(detail::flat(M, m - 1, n + 1), col, cplx{1.0, 0.0});
            }
        }
    }
    SparseOperator op(dim, dim);
    op.setFromTriplets(t.begin(), t.end());
    return op;
}

/// Operators shared by the moment computations at one cutoff.
struct OperatorSet {
    int cutoff = 0;
    SparseOperator number;
    SparseOperator difference;  // L
    SparseOperator modulus;     // P
    SparseOperator phase;       // E

    explicit OperatorSet(int M)
        : cutoff(M),
          number(build_N_operator(M)),
          difference(build_L_operator(M)),
          modulus(modulus_operator(M)),
          phase(phase_operator(M)) {}
};

inline cplx expectation(const TwoModeFockState& state, const SparseOperator& op) {
    detail::check_dimension(state, op);
    const CVector applied = op * state.amplitudes;
    return state.amplitudes.dot(applied);
}

/// ||(A - <A>) psi||^2 for Hermitian A.
inline double variance_hermitian(const TwoModeFockState& state, const SparseOperator& op) {
    detail::check_dimension(state, op);
    const CVector applied = op * state.amplitudes;
    const cplx mean = state.amplitudes.dot(applied);
    return (applied - mean.real() * state.amplitudes).squaredNorm();
}

/// 1 - |<U>|^2.
inline double circular_variance_unitary(const TwoModeFockState& state, const SparseOperator& op) {
    return 1.0 - std::norm(expectation(state, op));
}

/// Matrix elements <m|D(alpha)|n>, m, n < dim. Each diagonal offset k = m - n
/// follows the Laguerre three-term recurrence in normalized form
///   sqrt((n+1)(n+1+k)) h_{n+1} = (2n+1+k-x) h_n - sqrt(n(n+k)) h_{n-1},
/// x = |alpha|^2, and the upper triangle uses
/// <m|D|n> = (-1)^{n-m} conj(<n|D|m>).
inline CMatrix displacement_matrix(cplx alpha, int dim) {
    if (dim < 1) throw Error(ErrorKind::invalid_parameter, "displacement matrix dimension must be positive");
    CMatrix D = CMatrix::Zero(dim, dim);
    const double r = std::abs(alpha);
    if (r == 0.0) {
        D.setIdentity();
        return D;
    }
    const double x = r * r;
    const double phase = std::arg(alpha);
    for (int k = 0; k < dim; ++k) {
        const int count = dim - k;  // n = 0..count-1, m = n + k
        double prev = 0.0;
        double cur = std::exp(k * std::log(r) - 0.5 * x - 0.5 * std::lgamma(k + 1.0));
        const cplx rot = std::polar(1.0, k * phase);
        for (int n = 0; n < count; ++n) {
            const cplx lower = cur * rot;
            D(n + k, n) = lower;
            if (k > 0) D(n, n + k) = ((k % 2 == 0) ? 1.0 : -1.0) * std::conj(lower);
            const double next = ((2.0 * n + 1.0 + k - x) * cur - std::sqrt(static_cast<double>(n) * (n + k)) * prev) /
                                std::sqrt((n + 1.0) * (n + 1.0 + k));
            prev = cur;
            cur = next;
        }
    }
    return D;
}

/// Product of Poissonian amplitude vectors |alpha_p> (x) |alpha_s>.
inline TwoModeFockState coherent_state(cplx alpha_p, cplx alpha_s, int M, double tolerance = 0.0) {
    detail::require_cutoff(M);
    const double tol = detail::tail_tolerance_or_default(tolerance);
    const double tail_p = detail::poisson_tail(std::norm(alpha_p), M);
    const double tail_s = detail::poisson_tail(std::norm(alpha_s), M);
    const double tail = tail_p + tail_s - tail_p * tail_s;
    if (tail > tol) {
        throw Error(ErrorKind::cutoff_too_small,
                    "coherent state tail " + std::to_string(tail) + " exceeds tolerance at cutoff " + std::to_string(M));
    }
    const auto cp = detail::coherent_amplitudes(alpha_p, M);
    const auto cs = detail::coherent_amplitudes(alpha_s, M);

    TwoModeFockState state;
    state.cutoff = M;
    state.tail_mass = tail;
    state.amplitudes.resize(state.dimension());
    for (int m = 0; m <= M; ++m) {
        for (int n = 0; n <= M; ++n) state.amplitudes(state.index(m, n)) = cp[static_cast<std::size_t>(m)] * cs[static_cast<std::size_t>(n)];
    }
    state.amplitudes.normalize();
    return state;
}

/// Two-mode squeezed vacuum sum_n (e^{i theta} tanh s)^n |n, n> / cosh s,
/// zeta = s e^{i theta}, followed by D_p(alpha_p) D_s(alpha_s).
inline TwoModeFockState displaced_squeezed_state(cplx alpha_p, cplx alpha_s, cplx zeta, int M, double tolerance = 0.0) {
    detail::require_cutoff(M);
    const double tol = detail::tail_tolerance_or_default(tolerance);
    const double s = std::abs(zeta);
    const double theta = std::arg(zeta);
    const int dim = M + 1;

    CMatrix table = CMatrix::Zero(dim, dim);  // rows m (p), columns n (s)
    const double t = std::tanh(s);
    const double c = std::cosh(s);
    for (int n = 0; n <= M; ++n) {
        const double mag = (n == 0) ? 1.0 / c : std::exp(n * std::log(t) - std::log(c));
        table(n, n) = std::polar(mag, n * theta);
        if (mag == 0.0) break;
    }
    if (alpha_p != cplx{0.0, 0.0}) table = displacement_matrix(alpha_p, dim) * table;
    if (alpha_s != cplx{0.0, 0.0}) table = table * displacement_matrix(alpha_s, dim).transpose();

    TwoModeFockState state;
    state.cutoff = M;
    state.amplitudes.resize(state.dimension());
    for (int m = 0; m <= M; ++m) {
        for (int n = 0; n <= M; ++n) state.amplitudes(state.index(m, n)) = table(m, n);
    }
    state.tail_mass = std::max(0.0, 1.0 - state.amplitudes.squaredNorm());
    if (state.tail_mass > tol) {
        throw Error(ErrorKind::cutoff_too_small, "squeezed state tail " + std::to_string(state.tail_mass) +
                                                     " exceeds tolerance at cutoff " + std::to_string(M));
    }
    state.amplitudes.normalize();
    return state;
}

/// Places Psi_l on |N/2 + l, N/2 - l> of a single even layer N.
inline TwoModeFockState embed_phase_state(const phase_space::PhaseWaveFunction& psi, int N, double tolerance = 0.0) {
    if (N < 2 || N % 2 != 0) throw Error(ErrorKind::invalid_parameter, "embedding layer must be a positive even photon number");
    const double tol = detail::tail_tolerance_or_default(tolerance);
    const int half = N / 2;

    TwoModeFockState state;
    state.cutoff = N;
    state.amplitudes = CVector::Zero(state.dimension());
    double clipped = 0.0;
    for (int l = psi.first_index; l <= psi.last_index(); ++l) {
        const cplx v = psi[l];
        if (l < -half || l > half) {
            clipped += std::norm(v);
            continue;
        }
        state.amplitudes(state.index(half + l, half - l)) = v;
    }
    const double total = psi.norm_squared();
    state.tail_mass = clipped / total + psi.tail_mass;
    if (state.tail_mass > tol) {
        throw Error(ErrorKind::layer_too_small, "phase state support clipped by " + std::to_string(state.tail_mass) +
                                                    " in layer N = " + std::to_string(N));
    }
    state.amplitudes.normalize();
    return state;
}

/// Smallest per-mode cutoff whose two-mode Poisson tail is below `tol`.
inline int coherent_cutoff(double mean_p, double mean_s, double tolerance = 0.0) {
    const double tol = detail::tail_tolerance_or_default(tolerance);
    const double mean = std::max(mean_p, mean_s);
    int M = std::max(1, static_cast<int>(std::floor(mean)));
    while (detail::poisson_tail(mean_p, M) + detail::poisson_tail(mean_s, M) > tol) ++M;
    return M;
}

/// Coherent state with |alpha_p| = |alpha_s| = sqrt(nbar / 2) and relative
/// phase arg(alpha_p) - arg(alpha_s) = relative_phase, at the smallest
/// admissible cutoff.
inline TwoModeFockState optimal_coherent_state(double nbar, double relative_phase = 0.0, double tolerance = 0.0) {
    if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw Error(ErrorKind::invalid_parameter, "mean photon number must be non-negative");
    const double amp = std::sqrt(0.5 * nbar);
    const int M = coherent_cutoff(0.5 * nbar, 0.5 * nbar, tolerance);
    return coherent_state(std::polar(amp, 0.5 * relative_phase), std::polar(amp, -0.5 * relative_phase), M, tolerance);
}

/// Displaced squeezed state in the balanced setting |alpha_p| = |alpha_s| =
/// sqrt(nbar/2 - sinh^2 s), theta = 0, phi_p = phi_s = dphi / 2, so that
/// dphi = phi_p + phi_s - theta. The cutoff grows until the tail is admissible.
inline TwoModeFockState optimal_squeezed_state(double nbar, double s, double dphi, double tolerance = 0.0) {
    if (!std::isfinite(nbar) || !std::isfinite(s) || !std::isfinite(dphi)) {
        throw Error(ErrorKind::invalid_parameter, "squeezed-state parameters must be finite");
    }
    if (s < 0.0) throw Error(ErrorKind::invalid_parameter, "squeezing magnitude must be non-negative");
    const double sh = std::sinh(s);
    const double coherent_part = 0.5 * nbar - sh * sh;
    if (coherent_part < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "nbar / 2 must be at least sinh^2 s");
    }
    const double tol = detail::tail_tolerance_or_default(tolerance);
    const double amp = std::sqrt(coherent_part);
    const cplx alpha = std::polar(amp, 0.5 * dphi);

    const double t = std::tanh(s);
    const int pairs = (t > 0.0) ? static_cast<int>(std::ceil(std::log(tol) / (2.0 * std::log(t)))) : 0;
    int M = std::max(16, pairs + static_cast<int>(std::ceil(coherent_part + 8.0 * amp + 10.0)));
    for (;;) {
        try {
            return displaced_squeezed_state(alpha, alpha, cplx{s, 0.0}, M, tol);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::cutoff_too_small || M > 1500) throw;
            M = static_cast<int>(M * 1.25) + 1;
        }
    }
}

/// Extracts the N-photon layer amplitudes, indexed by n_p = 0..N.
inline CVector layer_amplitudes(const TwoModeFockState& state, int N) {
    CVector v = CVector::Zero(N + 1);
    for (int m = 0; m <= N; ++m) {
        const int n = N - m;
        if (m <= state.cutoff && n <= state.cutoff) v(m) = state.amplitude(m, n);
    }
    return v;
}

}  // namespace qellip::fock
