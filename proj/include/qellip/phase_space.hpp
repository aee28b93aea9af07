#pragma once

// Wave functions on the relative-phase circle, stored by their Fourier
// components Psi_l in the photon-difference basis |l>:
//
//   Psi(phi) = (2 pi)^{-1/2} sum_l exp(-i l phi) Psi_l
//
// With this pairing E|l> = |l-1>, so <E> = sum_l conj(Psi_l) Psi_{l+1} is the
// circular moment <exp(i phi)>.

#include <qellip/errors.hpp>
#include <qellip/mathieu.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace qellip::phase_space {

using cplx = std::complex<double>;

struct PhaseWaveFunction {
    int first_index = 0;              // l of components[0]
    std::vector<cplx> components;     // contiguous window of Psi_l
    int mean_l_offset = 0;            // index translation applied at construction
    double tail_mass = 0.0;           // norm dropped outside the window

    int last_index() const { return first_index + static_cast<int>(components.size()) - 1; }

    cplx operator[](int l) const {
        const int i = l - first_index;
        if (i < 0 || i >= static_cast<int>(components.size())) return {0.0, 0.0};
        return components[static_cast<std::size_t>(i)];
    }

    double norm_squared() const {
        double s = 0.0;
        for (const auto& c : components) s += std::norm(c);
        return s;
    }

    /// Translate every index by m; l_mean moves by m.
    PhaseWaveFunction shifted(int m) const {
        PhaseWaveFunction out = *this;
        out.first_index += m;
        out.mean_l_offset += m;
        return out;
    }

    /// Psi_l -> exp(i l theta) Psi_l; rotates <E> by exp(i theta).
    PhaseWaveFunction rotated(double theta) const {
        PhaseWaveFunction out = *this;
        for (std::size_t i = 0; i < out.components.size(); ++i) {
            const double l = static_cast<double>(first_index + static_cast<int>(i));
            out.components[i] *= std::polar(1.0, l * theta);
        }
        return out;
    }

    /// Psi(phi) from the Fourier components.
    cplx value(double phi) const {
        cplx s{0.0, 0.0};
        for (std::size_t i = 0; i < components.size(); ++i) {
            const double l = static_cast<double>(first_index + static_cast<int>(i));
            s += std::polar(1.0, -l * phi) * components[i];
        }
        return s / std::sqrt(2.0 * std::numbers::pi);
    }
};

struct CircularMoments {
    cplx e_mean{0.0, 0.0};
    double e_var = 1.0;
    double l_mean = 0.0;
    double l_var = 0.0;
};

namespace detail {

inline void renormalize(PhaseWaveFunction& psi) {
    const double n = std::sqrt(psi.norm_squared());
    for (auto& c : psi.components) c /= n;
}

}  // namespace detail

/// Phase state whose relative-phase wave function is
/// exp(-i mean_l phi) ce_2k(phi/2, q) / sqrt(pi).
inline PhaseWaveFunction from_mathieu(const mathieu::MathieuSolution& sol, int mean_l = 0) {
    const int J = sol.truncation_dim();
    PhaseWaveFunction psi;
    psi.first_index = -(J - 1);
    psi.components.assign(static_cast<std::size_t>(2 * J - 1), cplx{0.0, 0.0});
    const auto at = [&](int l) -> cplx& { return psi.components[static_cast<std::size_t>(l + J - 1)]; };
    at(0) = std::sqrt(2.0) * sol.coefficient(0);
    for (int j = 1; j < J; ++j) {
        at(j) = sol.coefficient(j) / std::sqrt(2.0);
        at(-j) = sol.coefficient(j) / std::sqrt(2.0);
    }
    psi.tail_mass = 0.0;
    detail::renormalize(psi);
    return psi.shifted(mean_l);
}

/// Phase state with density proportional to exp[-kappa cos(phi - phi0)], which
/// peaks at phi0 + pi. Components are (-1)^l I_l(kappa/2) exp(i l phi0),
/// normalized; the ratios come from Miller's downward recurrence.
inline PhaseWaveFunction from_von_mises(double kappa, double phi0 = 0.0, int mean_l = 0) {
    if (!std::isfinite(kappa) || kappa < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "von Mises concentration must be finite and non-negative");
    }
    if (!std::isfinite(phi0)) throw Error(ErrorKind::invalid_parameter, "von Mises mean phase must be finite");

    PhaseWaveFunction psi;
    if (kappa == 0.0) {
        psi.components = {cplx{1.0, 0.0}};
        return psi.shifted(mean_l);
    }

    const double x = 0.5 * kappa;
    // Start well above the point where I_l(x) has decayed past double range
    // relative to I_0.
    const int start = static_cast<int>(std::ceil(x + 12.0 * std::sqrt(x) + 40.0));
    std::vector<double> ratio(static_cast<std::size_t>(start + 2), 0.0);
    double next = 0.0;
    double cur = 1.0;
    for (int l = start; l >= 1; --l) {
        const double prev = (2.0 * l / x) * cur + next;
        ratio[static_cast<std::size_t>(l)] = cur;
        next = cur;
        cur = prev;
        if (cur > 1e100) {  // rescale so that squares stay finite
            for (int i = l; i <= start; ++i) ratio[static_cast<std::size_t>(i)] /= cur;
            next /= cur;
            cur = 1.0;
        }
    }
    ratio[0] = cur;

    // Sum of squares over both sides of the (symmetric) spectrum.
    double total = ratio[0] * ratio[0];
    for (int l = 1; l <= start; ++l) total += 2.0 * ratio[static_cast<std::size_t>(l)] * ratio[static_cast<std::size_t>(l)];

    // Trim the window while the discarded two-sided mass stays below 1e-16.
    int keep = start;
    double dropped = 0.0;
    while (keep > 0) {
        const double w = 2.0 * ratio[static_cast<std::size_t>(keep)] * ratio[static_cast<std::size_t>(keep)] / total;
        if (dropped + w >= 1e-16) break;
        dropped += w;
        --keep;
    }

    psi.first_index = -keep;
    psi.components.resize(static_cast<std::size_t>(2 * keep + 1));
    for (int l = -keep; l <= keep; ++l) {
        const double mag = ratio[static_cast<std::size_t>(std::abs(l))] / std::sqrt(total);
        const double sign = (std::abs(l) % 2 == 0) ? 1.0 : -1.0;
        psi.components[static_cast<std::size_t>(l + keep)] = sign * mag * std::polar(1.0, l * phi0);
    }
    psi.tail_mass = dropped;
    detail::renormalize(psi);
    return psi.shifted(mean_l);
}

/// <E>, circular variance, and the first two moments of L.
inline CircularMoments circular_moments(const PhaseWaveFunction& psi) {
    const double norm = psi.norm_squared();
    if (!(std::abs(norm - 1.0) <= 1e-9)) {
        throw Error(ErrorKind::invalid_state, "phase wave function is not normalized (norm " + std::to_string(norm) + ")");
    }

    CircularMoments m;
    const auto& c = psi.components;
    cplx e{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < c.size(); ++i) e += std::conj(c[i]) * c[i + 1];

    // Moments of L relative to the window centre, then shifted back.
    const double centre = psi.first_index + 0.5 * static_cast<double>(c.size() - 1);
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d = psi.first_index + static_cast<double>(i) - centre;
        const double w = std::norm(c[i]);
        m1 += d * w;
        m2 += d * d * w;
    }
    m.e_mean = e;
    m.e_var = std::clamp(1.0 - std::norm(e), 0.0, 1.0);
    m.l_mean = centre + m1;
    m.l_var = std::max(0.0, m2 - m1 * m1);
    return m;
}

struct DensitySample {
    double phi = 0.0;
    double p = 0.0;
};

/// p(phi) = |Psi(phi)|^2 on the uniform grid phi_i = 2 pi i / grid_points.
inline std::vector<DensitySample> density_profile(const PhaseWaveFunction& psi, int grid_points) {
    if (grid_points < 2) throw Error(ErrorKind::invalid_parameter, "density grid needs at least 2 points");
    std::vector<DensitySample> out(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / grid_points;
        out[static_cast<std::size_t>(i)] = {phi, std::norm(psi.value(phi))};
    }
    return out;
}

/// Normalized von Mises density exp[-kappa cos(phi - phi0)] / (2 pi I_0(kappa)).
inline double von_mises_density(double kappa, double phi0, double phi) {
    if (kappa == 0.0) return 1.0 / (2.0 * std::numbers::pi);
    // exp(-kappa) I_0(kappa), asymptotic past the overflow point of cyl_bessel_i.
    double scaled_i0 = 0.0;
    if (kappa < 600.0) {
        scaled_i0 = std::exp(-kappa) * std::cyl_bessel_i(0.0, kappa);
    } else {
        const double t = 1.0 / (8.0 * kappa);
        scaled_i0 = (1.0 + t + 4.5 * t * t) / std::sqrt(2.0 * std::numbers::pi * kappa);
    }
    return std::exp(-kappa * (std::cos(phi - phi0) + 1.0)) / (2.0 * std::numbers::pi * scaled_i0);
}

}  // namespace qellip::phase_space
