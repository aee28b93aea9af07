#pragma once

// Classical multilayer ellipsometry.
//
// Conventions: time dependence exp(-i omega t), absorbing indices n + i k with
// k >= 0, and the p-reflection sign chosen so that r_p = +r at normal
// incidence on an external interface, where r_s = -r (rho = -1 there).
// Delta is reported in [0, 2 pi).

#include <qellip/errors.hpp>
#include <qellip/noise.hpp>

#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace qellip::optics {

using cplx = std::complex<double>;

struct Layer {
    cplx index{1.0, 0.0};
    double thickness_nm = 0.0;
};

struct LayerStack {
    cplx ambient_index{1.0, 0.0};
    std::vector<Layer> layers;  // top (ambient side) to bottom
    cplx substrate_index{1.0, 0.0};
    double wavelength_nm = 632.8;
    double angle_of_incidence = 0.0;  // radians

    void validate() const {
        const auto check_index = [](cplx n, const char* what) {
            if (!std::isfinite(n.real()) || !std::isfinite(n.imag())) {
                throw Error(ErrorKind::invalid_parameter, std::string(what) + " index must be finite");
            }
            if (n.imag() < 0.0) throw Error(ErrorKind::invalid_parameter, std::string(what) + " index must have Im >= 0");
            if (n == cplx{0.0, 0.0}) throw Error(ErrorKind::invalid_parameter, std::string(what) + " index must be nonzero");
        };
        check_index(ambient_index, "ambient");
        check_index(substrate_index, "substrate");
        for (const auto& l : layers) {
            check_index(l.index, "layer");
            if (!(l.thickness_nm >= 0.0) || !std::isfinite(l.thickness_nm)) {
                throw Error(ErrorKind::invalid_parameter, "layer thickness must be finite and non-negative");
            }
        }
        if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
            throw Error(ErrorKind::invalid_parameter, "wavelength must be positive");
        }
        if (!(angle_of_incidence >= 0.0 && angle_of_incidence < 0.5 * std::numbers::pi)) {
            throw Error(ErrorKind::invalid_parameter, "angle of incidence must lie in [0, pi/2)");
        }
    }
};

struct FresnelPair {
    cplx r_p;
    cplx r_s;
};

struct EllipsometricResult {
    cplx r_p;
    cplx r_s;
    cplx rho;
    double psi_angle = 0.0;  // [0, pi/2]
    double delta = 0.0;      // [0, 2 pi)
};

/// n cos(theta) in a medium of index n, for the conserved tangential
/// component n_0 sin(theta_0); branch with Im >= 0 (decaying forward wave).
inline cplx normal_component(cplx n, cplx tangential) {
    cplx k = std::sqrt(n * n - tangential * tangential);
    if (k.imag() < 0.0 || (k.imag() == 0.0 && k.real() < 0.0)) k = -k;
    return k;
}

inline FresnelPair fresnel_interface(cplx n_i, cplx n_t, double theta_i) {
    if (n_i == cplx{0.0, 0.0} || n_t == cplx{0.0, 0.0}) throw Error(ErrorKind::invalid_parameter, "refractive index must be nonzero");
    const cplx tangential = n_i * std::sin(theta_i);
    const double cos_i = std::cos(theta_i);
    const cplx nc_i = n_i * cos_i;
    const cplx nc_t = (n_t == n_i) ? nc_i : normal_component(n_t, tangential);
    const cplx cos_t = nc_t / n_t;
    FresnelPair r;
    r.r_s = (nc_i - nc_t) / (nc_i + nc_t);
    r.r_p = (n_t * cos_i - n_i * cos_t) / (n_t * cos_i + n_i * cos_t);
    return r;
}

inline EllipsometricResult make_result(cplx r_p, cplx r_s) {
    EllipsometricResult out;
    out.r_p = r_p;
    out.r_s = r_s;
    out.rho = r_p / r_s;
    out.psi_angle = std::atan(std::abs(out.rho));
    double d = std::arg(out.rho);
    if (d < 0.0) d += 2.0 * std::numbers::pi;
    if (d >= 2.0 * std::numbers::pi) d -= 2.0 * std::numbers::pi;
    out.delta = d;
    return out;
}

namespace detail {

/// Characteristic-matrix reflection for one polarization given the tilted
/// admittances of ambient, layers, and substrate and the layer phase
/// thicknesses. Returns (eta_0 - Y) / (eta_0 + Y).
inline cplx admittance_reflection(cplx eta_ambient, const std::vector<cplx>& eta_layers,
                                  const std::vector<cplx>& beta, cplx eta_substrate) {
    // [B; C] = prod_j M_j [1; eta_sub], M_j = [[cos b, -i sin b / eta], [-i eta sin b, cos b]].
    const cplx I{0.0, 1.0};
    cplx B{1.0, 0.0};
    cplx C = eta_substrate;
    for (std::size_t j = eta_layers.size(); j-- > 0;) {
        const cplx cb = std::cos(beta[j]);
        const cplx sb = std::sin(beta[j]);
        const cplx nB = cb * B - I * sb / eta_layers[j] * C;
        const cplx nC = -I * eta_layers[j] * sb * B + cb * C;
        B = nB;
        C = nC;
    }
    const cplx Y = C / B;
    return (eta_ambient - Y) / (eta_ambient + Y);
}

}  // namespace detail

/// Reflection of a layer stack by the characteristic (transfer) matrix method,
/// phase thickness beta = 2 pi d n cos(theta) / lambda per layer.
inline EllipsometricResult stack_reflection(const LayerStack& stack) {
    stack.validate();
    const cplx tangential = stack.ambient_index * std::sin(stack.angle_of_incidence);

    const auto nc = [&](cplx n) {
        const cplx k = normal_component(n, tangential);
        // Near grazing the p admittance n^2 / (n cos theta) loses all precision.
        if (std::abs(k) < 1e-6 * std::abs(n)) {
            throw Error(ErrorKind::numerical_domain, "grazing propagation (n cos theta = 0) in the stack");
        }
        return k;
    };

    const cplx nc0 = stack.ambient_index * std::cos(stack.angle_of_incidence);
    const cplx ncs = nc(stack.substrate_index);

    std::vector<cplx> eta_s;
    std::vector<cplx> eta_p;
    std::vector<cplx> beta;
    for (const auto& layer : stack.layers) {
        const cplx k = nc(layer.index);
        eta_s.push_back(k);
        eta_p.push_back(layer.index * layer.index / k);
        beta.push_back(2.0 * std::numbers::pi * layer.thickness_nm * k / stack.wavelength_nm);
    }

    const cplx eta0_p = stack.ambient_index * stack.ambient_index / nc0;
    const cplx etas_p = stack.substrate_index * stack.substrate_index / ncs;

    const cplx r_s = detail::admittance_reflection(nc0, eta_s, beta, ncs);
    // The admittance form gives the opposite sign to the r_p convention above.
    const cplx r_p = -detail::admittance_reflection(eta0_p, eta_p, beta, etas_p);
    return make_result(r_p, r_s);
}

struct NoisyEllipsometry {
    EllipsometricResult result;
    noise::RhoUncertainty noise;
};

/// Classical operating point of the stack annotated with the quantum noise
/// bars of the probe state.
inline NoisyEllipsometry rho_with_noise(const LayerStack& stack, const noise::MomentReport& report) {
    NoisyEllipsometry out;
    out.result = stack_reflection(stack);
    out.noise = noise::rho_uncertainty(report, {out.result.psi_angle, out.result.delta});
    return out;
}

/// Stack description, one directive per line:
///   ambient <n_re> [n_im]
///   layer <n_re> <n_im> <d_nm>      (repeatable, top to bottom)
///   substrate <n_re> <n_im>
///   wavelength <nm>
///   angle <deg>
/// Blank lines and '#' comments are ignored.
inline LayerStack parse_stack(std::istream& in) {
    LayerStack stack;
    bool have_ambient = false;
    bool have_substrate = false;
    bool have_wavelength = false;
    bool have_angle = false;
    std::string line;
    int line_no = 0;
    const auto fail = [&](const std::string& msg) {
        throw Error(ErrorKind::parse_error, "line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::vector<double> v;
        double x = 0.0;
        while (ls >> x) v.push_back(x);
        if (!ls.eof()) fail("unparsable number after '" + key + "'");

        if (key == "ambient") {
            if (have_ambient) fail("duplicate 'ambient'");
            if (v.size() != 1 && v.size() != 2) fail("'ambient' takes 1 or 2 numbers");
            stack.ambient_index = {v[0], v.size() == 2 ? v[1] : 0.0};
            have_ambient = true;
        } else if (key == "layer") {
            if (v.size() != 3) fail("'layer' takes <n_re> <n_im> <d_nm>");
            stack.layers.push_back({{v[0], v[1]}, v[2]});
        } else if (key == "substrate") {
            if (have_substrate) fail("duplicate 'substrate'");
            if (v.size() != 2) fail("'substrate' takes <n_re> <n_im>");
            stack.substrate_index = {v[0], v[1]};
            have_substrate = true;
        } else if (key == "wavelength") {
            if (have_wavelength) fail("duplicate 'wavelength'");
            if (v.size() != 1) fail("'wavelength' takes one number");
            stack.wavelength_nm = v[0];
            have_wavelength = true;
        } else if (key == "angle") {
            if (have_angle) fail("duplicate 'angle'");
            if (v.size() != 1) fail("'angle' takes one number (degrees)");
            stack.angle_of_incidence = v[0] * std::numbers::pi / 180.0;
            have_angle = true;
        } else {
            fail("unknown directive '" + key + "'");
        }
    }
    line_no = 0;
    if (!have_ambient) fail("missing 'ambient'");
    if (!have_substrate) fail("missing 'substrate'");
    if (!have_wavelength) fail("missing 'wavelength'");
    if (!have_angle) fail("missing 'angle'");
    try {
        stack.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::parse_error, e.what());
    }
    return stack;
}

}  // namespace qellip::optics
