#pragma once

// Even angular Mathieu functions ce_2k(eta, q) of period pi.
//
// The coefficients A_2j of ce_2k = sum_j A_2j cos(2 j eta) satisfy
//
//   a A_0             = q A_2
//   (a - 4) A_2       = q (2 A_0 + A_4)
//   (a - 4 j^2) A_2j  = q (A_2j-2 + A_2j+2),   j >= 2
//
// Scaling the first unknown by sqrt(2) makes this a symmetric tridiagonal
// eigenproblem whose unit eigenvectors carry the normalization
// 2 A_0^2 + sum_{j>=1} A_2j^2 = 1 (integral of ce^2 over [0, 2pi) equal to pi).

#include <qellip/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qellip::mathieu {

struct MathieuSolution {
    int order_index = 0;   // k, for ce_2k
    double q = 0.0;
    double eigenvalue = 0.0;  // a_2k(q)
    std::vector<double> coefficients;  // A_2j, j = 0..J-1

    int truncation_dim() const { return static_cast<int>(coefficients.size()); }

    double coefficient(int j) const {
        return (j >= 0 && j < truncation_dim()) ? coefficients[static_cast<std::size_t>(j)] : 0.0;
    }

    /// Magnitude of the last retained coefficient.
    double tail_magnitude() const { return coefficients.empty() ? 0.0 : std::abs(coefficients.back()); }

    /// 2 A_0^2 + sum A_2j^2; one for a properly normalized solution.
    double norm() const {
        double s = 0.0;
        for (std::size_t j = 0; j < coefficients.size(); ++j) {
            s += (j == 0 ? 2.0 : 1.0) * coefficients[j] * coefficients[j];
        }
        return s;
    }

    /// Largest recurrence residual over the interior rows j = 0..J-2.
    double max_recurrence_residual() const {
        const int J = truncation_dim();
        double worst = 0.0;
        for (int j = 0; j + 1 < J; ++j) {
            double r = 0.0;
            if (j == 0) {
                r = eigenvalue * coefficient(0) - q * coefficient(1);
            } else if (j == 1) {
                r = (eigenvalue - 4.0) * coefficient(1) - q * (2.0 * coefficient(0) + coefficient(2));
            } else {
                r = (eigenvalue - 4.0 * j * j) * coefficient(j) - q * (coefficient(j - 1) + coefficient(j + 1));
            }
            worst = std::max(worst, std::abs(r));
        }
        return worst;
    }
};

/// J = max(32, ceil(2 sqrt(q)) + 24).
inline int auto_truncation(double q) {
    return std::max(32, static_cast<int>(std::ceil(2.0 * std::sqrt(std::max(q, 0.0)))) + 24);
}

namespace detail {

inline void validate_q(double q) {
    if (!std::isfinite(q)) throw Error(ErrorKind::invalid_parameter, "Mathieu parameter q must be finite");
    if (q < 0.0) throw Error(ErrorKind::invalid_parameter, "Mathieu parameter q must be non-negative");
}

inline int resolve_truncation(int k, std::optional<int> truncation, double q) {
    if (k < 0) throw Error(ErrorKind::invalid_parameter, "order index k must be non-negative");
    const int J = truncation ? *truncation : auto_truncation(q);
    if (J <= 0) throw Error(ErrorKind::invalid_parameter, "truncation must be positive");
    if (k >= J) {
        throw Error(ErrorKind::truncation_too_small,
                    "order " + std::to_string(k) + " needs truncation > " + std::to_string(k));
    }
    return J;
}

}  // namespace detail

/// k-th even, pi-periodic solution ce_2k(eta, q). `truncation` defaults to
/// auto_truncation(q).
///
/// Sign convention: A_0 > 0. When A_0 vanishes to working precision
/// (q = 0 with k > 0, or extremely small q), A_2k > 0 is used instead.
inline MathieuSolution solve_even_mathieu(double q, int k, std::optional<int> truncation = std::nullopt) {
    detail::validate_q(q);
    const int J = detail::resolve_truncation(k, truncation, q);

    MathieuSolution sol;
    sol.order_index = k;
    sol.q = q;
    sol.coefficients.assign(static_cast<std::size_t>(J), 0.0);

    if (q == 0.0) {
        sol.eigenvalue = 4.0 * k * k;
        sol.coefficients[static_cast<std::size_t>(k)] = (k == 0) ? 1.0 / std::sqrt(2.0) : 1.0;
        return sol;
    }

    Eigen::VectorXd diag(J);
    Eigen::VectorXd sub(std::max(J - 1, 0));
    for (int j = 0; j < J; ++j) diag(j) = 4.0 * j * j;
    for (int j = 0; j + 1 < J; ++j) sub(j) = (j == 0) ? std::sqrt(2.0) * q : q;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::inconsistent_solution, "tridiagonal eigensolver did not converge");
    }

    sol.eigenvalue = solver.eigenvalues()(k);
    Eigen::VectorXd x = solver.eigenvectors().col(k);
    x.normalize();

    const double pivot = std::abs(x(0)) >= 1e-12 ? x(0) : x(k);
    if (pivot < 0.0) x = -x;

    sol.coefficients[0] = x(0) / std::sqrt(2.0);
    for (int j = 1; j < J; ++j) sol.coefficients[static_cast<std::size_t>(j)] = x(j);
    return sol;
}

/// Eigenvalue b_2k+2(q) of the odd, pi-periodic solution se_2k+2. Only the
/// eigenvalue is provided for this branch.
inline double odd_mathieu_eigenvalue(double q, int k, std::optional<int> truncation = std::nullopt) {
    detail::validate_q(q);
    const int J = detail::resolve_truncation(k, truncation, q);
    if (q == 0.0) return 4.0 * (k + 1) * (k + 1);

    // Unknowns B_2j, j = 1..J.
    Eigen::VectorXd diag(J);
    Eigen::VectorXd sub(std::max(J - 1, 0));
    for (int i = 0; i < J; ++i) diag(i) = 4.0 * (i + 1) * (i + 1);
    for (int i = 0; i + 1 < J; ++i) sub(i) = q;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::inconsistent_solution, "tridiagonal eigensolver did not converge");
    }
    return solver.eigenvalues()(k);
}

/// ce_2k(eta, q) = sum_j A_2j cos(2 j eta).
inline double eval_ce(const MathieuSolution& sol, double eta) {
    double s = 0.0;
    // Sum from the small tail first.
    for (int j = sol.truncation_dim() - 1; j >= 0; --j) {
        s += sol.coefficients[static_cast<std::size_t>(j)] * std::cos(2.0 * j * eta);
    }
    return s;
}

/// Theta = A_0 A_2 + sum_{j>=0} A_2j A_2j+2, the first circular moment
/// <e^{i phi}> of the phase state built from `sol`.
inline double theta_series(const MathieuSolution& sol) {
    const int J = sol.truncation_dim();
    double s = 0.0;
    for (int j = J - 2; j >= 0; --j) s += sol.coefficient(j) * sol.coefficient(j + 1);
    return s + sol.coefficient(0) * sol.coefficient(1);
}

struct MathieuVariances {
    double l_var = 0.0;  // variance of L
    double e_var = 0.0;  // circular variance of E
};

/// Delta^2 L = (a - 2 q Re Theta) / 4,  Delta^2 E = 1 - |Theta|^2.
inline MathieuVariances mathieu_variances(const MathieuSolution& sol, double tolerance = 1e-10) {
    const double theta = theta_series(sol);
    double l_var = 0.25 * (sol.eigenvalue - 2.0 * sol.q * theta);
    if (l_var < 0.0) {
        if (l_var < -tolerance) {
            throw Error(ErrorKind::inconsistent_solution,
                        "negative L variance " + std::to_string(l_var) + "; truncation too small?");
        }
        l_var = 0.0;
    }
    return {l_var, 1.0 - theta * theta};
}

}  // namespace qellip::mathieu
