#pragma once

// Uncertainty-relation analysis for the (E, L) pair and its propagation to
// the ellipsometric parameters.

#include <qellip/errors.hpp>
#include <qellip/fock.hpp>
#include <qellip/mathieu.hpp>
#include <qellip/phase_space.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <future>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace qellip::noise {

using cplx = std::complex<double>;

struct MomentReport {
    double n_mean = 0.0;
    cplx e_mean{0.0, 0.0};
    double e_var = 1.0;
    double l_mean = 0.0;
    double l_var = 0.0;
    double product = 0.0;           // e_var * l_var
    double bound = 0.0;             // |<E>|^2 / 4
    double saturation_ratio = 0.0;  // product / bound
    bool pol_squeezed = false;      // l_var < nbar |<E>|^2 / 4
    double p_var = 0.0;             // variance of P
};

/// Fills the derived fields from n_mean, e_mean, e_var, l_var.
inline MomentReport& finalize(MomentReport& r) {
    r.product = r.e_var * r.l_var;
    r.bound = 0.25 * std::norm(r.e_mean);
    if (r.bound > 0.0) {
        r.saturation_ratio = r.product / r.bound;
    } else {
        r.saturation_ratio = r.product > 0.0 ? std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::quiet_NaN();
    }
    r.pol_squeezed = r.l_var < 0.25 * r.n_mean * std::norm(r.e_mean);
    return r;
}

/// Exact moments of a truncated Fock state.
inline MomentReport analyze(const fock::TwoModeFockState& state, const fock::OperatorSet& ops) {
    MomentReport r;
    r.n_mean = fock::expectation(state, ops.number).real();
    r.e_mean = fock::expectation(state, ops.phase);
    r.e_var = std::clamp(1.0 - std::norm(r.e_mean), 0.0, 1.0);
    r.l_mean = fock::expectation(state, ops.difference).real();
    r.l_var = fock::variance_hermitian(state, ops.difference);
    r.p_var = fock::variance_hermitian(state, ops.modulus);
    return finalize(r);
}

inline MomentReport analyze(const fock::TwoModeFockState& state) {
    return analyze(state, fock::OperatorSet(state.cutoff));
}

/// Phase-space fast path: circular moments of psi with nbar supplied
/// externally. p_var uses the linearization P ~ 1 + 2 L / nbar.
inline MomentReport analyze(const phase_space::PhaseWaveFunction& psi, double nbar) {
    if (!(nbar > 0.0) || !std::isfinite(nbar)) throw Error(ErrorKind::invalid_parameter, "nbar must be positive");
    const auto m = phase_space::circular_moments(psi);
    MomentReport r;
    r.n_mean = nbar;
    r.e_mean = m.e_mean;
    r.e_var = m.e_var;
    r.l_mean = m.l_mean;
    r.l_var = m.l_var;
    r.p_var = 4.0 * m.l_var / (nbar * nbar);
    return finalize(r);
}

enum class Family { coherent, squeezed, mathieu, von_mises };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::coherent: return "coherent";
        case Family::squeezed: return "squeezed";
        case Family::mathieu: return "mathieu";
        case Family::von_mises: return "von_mises";
    }
    return "unknown";
}

inline Family family_from_string(const std::string& s) {
    if (s == "coherent") return Family::coherent;
    if (s == "squeezed") return Family::squeezed;
    if (s == "mathieu") return Family::mathieu;
    if (s == "von_mises" || s == "vonmises" || s == "von-mises") return Family::von_mises;
    throw Error(ErrorKind::invalid_parameter, "unknown state family '" + s + "'");
}

/// A state family with its fixed parameters; nbar is supplied per point.
struct FamilySpec {
    Family family = Family::coherent;
    double relative_phase = 0.0;  // coherent: arg(alpha_p) - arg(alpha_s)
    double squeeze = 0.0;         // squeezed: s = |zeta|
    double dphi = 0.0;            // squeezed: phi_p + phi_s - theta
    double q = 0.0;               // mathieu
    int order = 0;                // mathieu: k of ce_2k
    double kappa = 0.0;           // von_mises
    double phi0 = 0.0;            // von_mises
    int mean_l = 0;               // phase families
};

/// Phase-family wave function (mathieu / von_mises only).
inline phase_space::PhaseWaveFunction phase_state(const FamilySpec& spec) {
    switch (spec.family) {
        case Family::mathieu:
            return phase_space::from_mathieu(mathieu::solve_even_mathieu(spec.q, spec.order), spec.mean_l);
        case Family::von_mises:
            return phase_space::from_von_mises(spec.kappa, spec.phi0, spec.mean_l);
        default:
            throw Error(ErrorKind::invalid_parameter, std::string(to_string(spec.family)) + " is not a phase-state family");
    }
}

/// Exact Fock state for one point of a family. Phase families are embedded
/// in the single layer N = nbar, which must be an even integer.
inline fock::TwoModeFockState build_state(const FamilySpec& spec, double nbar) {
    switch (spec.family) {
        case Family::coherent:
            return fock::optimal_coherent_state(nbar, spec.relative_phase);
        case Family::squeezed:
            return fock::optimal_squeezed_state(nbar, spec.squeeze, spec.dphi);
        case Family::mathieu:
        case Family::von_mises: {
            const double rounded = std::round(nbar);
            if (rounded != nbar || static_cast<long>(rounded) % 2 != 0 || rounded < 2) {
                throw Error(ErrorKind::invalid_parameter, "phase states embed in an even layer; nbar must be an even integer");
            }
            return fock::embed_phase_state(phase_state(spec), static_cast<int>(rounded));
        }
    }
    throw Error(ErrorKind::invalid_parameter, "unknown family");
}

inline MomentReport report_for(const FamilySpec& spec, double nbar) { return analyze(build_state(spec, nbar)); }

struct OperatingPoint {
    double psi_angle = std::atan(1.0);  // radians
    double delta = 0.0;                 // radians
};

struct RhoUncertainty {
    double sigma_delta = 0.0;       // radians, circular standard deviation of the phase
    double sigma_tanpsi_rel = 0.0;  // relative error of tan psi
    double sigma_rho_rel = 0.0;     // relative error of rho
    double sigma_tanpsi = 0.0;      // absolute error of tan psi at the operating point
    bool large_noise = false;       // outside the small-noise regime; values are indicative only
};

/// Delta-method propagation: phase noise from <E>, modulus noise from Var P.
inline RhoUncertainty rho_uncertainty(const MomentReport& report, const OperatingPoint& point = {}) {
    RhoUncertainty u;
    const double e_abs = std::abs(report.e_mean);
    u.sigma_delta = (e_abs > 0.0) ? std::sqrt(std::max(0.0, -2.0 * std::log(std::min(e_abs, 1.0))))
                                  : std::numeric_limits<double>::infinity();
    u.sigma_tanpsi_rel = std::sqrt(std::max(0.0, report.p_var));
    u.sigma_rho_rel = std::hypot(u.sigma_delta, u.sigma_tanpsi_rel);
    u.sigma_tanpsi = std::tan(point.psi_angle) * u.sigma_tanpsi_rel;
    u.large_noise = !(report.bound > 0.0) || report.e_var >= 0.5;
    return u;
}

enum class Target { e_var, l_var, p_var, rho_var };

inline const char* to_string(Target t) {
    switch (t) {
        case Target::e_var: return "e_var";
        case Target::l_var: return "l_var";
        case Target::p_var: return "p_var";
        case Target::rho_var: return "rho_var";
    }
    return "unknown";
}

inline Target target_from_string(const std::string& s) {
    if (s == "e_var") return Target::e_var;
    if (s == "l_var") return Target::l_var;
    if (s == "p_var") return Target::p_var;
    if (s == "rho_var") return Target::rho_var;
    throw Error(ErrorKind::invalid_parameter, "unknown sweep target '" + s + "'");
}

inline double target_value(const MomentReport& r, Target t) {
    switch (t) {
        case Target::e_var: return r.e_var;
        case Target::l_var: return r.l_var;
        case Target::p_var: return r.p_var;
        case Target::rho_var: {
            const double s = rho_uncertainty(r).sigma_rho_rel;
            return s * s;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

struct ScalingFit {
    std::vector<std::pair<double, double>> points;  // (nbar, variance) used in the fit
    std::vector<double> excluded_nbar;              // dropped: non-positive or non-finite variance
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;

    /// r^2 below 0.98 marks a failed scaling claim.
    bool credible() const { return r_squared >= 0.98; }
};

/// Unweighted least squares of log10(variance) against log10(nbar).
inline ScalingFit fit_power_law(const std::vector<std::pair<double, double>>& samples) {
    ScalingFit fit;
    for (const auto& [n, v] : samples) {
        if (n > 0.0 && v > 0.0 && std::isfinite(n) && std::isfinite(v)) {
            fit.points.emplace_back(n, v);
        } else {
            fit.excluded_nbar.push_back(n);
        }
    }
    if (fit.points.size() < 2) throw Error(ErrorKind::invalid_parameter, "power-law fit needs two usable points");

    const double count = static_cast<double>(fit.points.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [n, v] : fit.points) {
        mx += std::log10(n);
        my += std::log10(v);
    }
    mx /= count;
    my /= count;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& [n, v] : fit.points) {
        const double dx = std::log10(n) - mx;
        const double dy = std::log10(v) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw Error(ErrorKind::invalid_parameter, "power-law fit needs distinct nbar values");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (const auto& [n, v] : fit.points) {
        const double e = std::log10(v) - (fit.intercept + fit.slope * std::log10(n));
        ss_res += e * e;
    }
    // A flat series (syy at rounding level) is fitted exactly by slope 0.
    fit.r_squared = (syy <= 1e-20) ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return fit;
}

inline void validate_n_list(const std::vector<double>& n_list, std::size_t min_points) {
    if (n_list.size() < min_points) {
        throw Error(ErrorKind::invalid_parameter, "sweep needs at least " + std::to_string(min_points) + " nbar values");
    }
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (!(n_list[i] > 0.0) || !std::isfinite(n_list[i])) throw Error(ErrorKind::invalid_parameter, "nbar values must be positive");
        if (i > 0 && !(n_list[i] > n_list[i - 1])) throw Error(ErrorKind::invalid_parameter, "nbar values must be strictly increasing");
    }
}

/// Reports for every nbar, evaluated concurrently; output order follows n_list.
inline std::vector<MomentReport> sweep_reports(const FamilySpec& spec, const std::vector<double>& n_list) {
    std::vector<std::future<MomentReport>> jobs;
    jobs.reserve(n_list.size());
    for (double n : n_list) jobs.push_back(std::async(std::launch::async, [spec, n] { return report_for(spec, n); }));
    std::vector<MomentReport> out;
    out.reserve(n_list.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

inline ScalingFit fit_target(const std::vector<double>& n_list, const std::vector<MomentReport>& reports, Target target) {
    std::vector<std::pair<double, double>> samples;
    samples.reserve(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) samples.emplace_back(n_list[i], target_value(reports[i], target));
    return fit_power_law(samples);
}

/// Log-log fit of one variance across a strictly increasing list of >= 4 nbar.
inline ScalingFit scaling_sweep(const FamilySpec& spec, const std::vector<double>& n_list, Target target) {
    validate_n_list(n_list, 4);
    return fit_target(n_list, sweep_reports(spec, n_list), target);
}

}  // namespace qellip::noise
