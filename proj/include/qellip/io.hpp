#pragma once

// Serialization shared by the command-line tool: JSON reports, fixed-column
// CSV tables, sweep configuration files, and atomic file output.

#include <qellip/errors.hpp>
#include <qellip/noise.hpp>
#include <qellip/optics.hpp>
#include <qellip/phase_space.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace qellip::io {

using json = nlohmann::json;

/// 12 significant digits, the fixed CSV float format.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);  // no "-0"
    return buf;
}

/// JSON has no NaN/Inf; they travel as strings and come back on parse.
inline json number_to_json(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    return v;
}

inline double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorKind::parse_error, "expected a number, got " + j.dump());
}

inline json complex_to_json(std::complex<double> z) { return {{"re", number_to_json(z.real())}, {"im", number_to_json(z.imag())}}; }

inline std::complex<double> complex_from_json(const json& j) {
    return {number_from_json(j.at("re")), number_from_json(j.at("im"))};
}

inline json report_to_json(const noise::MomentReport& r) {
    return {
        {"n_mean", number_to_json(r.n_mean)},
        {"e_mean", complex_to_json(r.e_mean)},
        {"e_var", number_to_json(r.e_var)},
        {"l_mean", number_to_json(r.l_mean)},
        {"l_var", number_to_json(r.l_var)},
        {"product", number_to_json(r.product)},
        {"bound", number_to_json(r.bound)},
        {"saturation_ratio", number_to_json(r.saturation_ratio)},
        {"pol_squeezed", r.pol_squeezed},
        {"p_var", number_to_json(r.p_var)},
    };
}

inline noise::MomentReport report_from_json(const json& j) {
    try {
        noise::MomentReport r;
        r.n_mean = number_from_json(j.at("n_mean"));
        r.e_mean = complex_from_json(j.at("e_mean"));
        r.e_var = number_from_json(j.at("e_var"));
        r.l_mean = number_from_json(j.at("l_mean"));
        r.l_var = number_from_json(j.at("l_var"));
        r.product = number_from_json(j.at("product"));
        r.bound = number_from_json(j.at("bound"));
        r.saturation_ratio = number_from_json(j.at("saturation_ratio"));
        r.pol_squeezed = j.at("pol_squeezed").get<bool>();
        r.p_var = number_from_json(j.at("p_var"));
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse_error, std::string("malformed report: ") + e.what());
    }
}

inline json fit_to_json(const noise::ScalingFit& fit, noise::Target target) {
    json excluded = json::array();
    for (double n : fit.excluded_nbar) excluded.push_back(number_to_json(n));
    return {
        {"target", noise::to_string(target)},
        {"slope", number_to_json(fit.slope)},
        {"intercept", number_to_json(fit.intercept)},
        {"r_squared", number_to_json(fit.r_squared)},
        {"excluded_nbar", excluded},
    };
}

inline const char* sweep_csv_header() {
    return "nbar,e_var,l_var,p_var,product,bound,saturation_ratio,pol_squeezed";
}

inline std::string sweep_csv(const std::vector<double>& n_list, const std::vector<noise::MomentReport>& reports) {
    std::ostringstream out;
    out << sweep_csv_header() << '\n';
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        out << format_number(n_list[i]) << ',' << format_number(r.e_var) << ',' << format_number(r.l_var) << ','
            << format_number(r.p_var) << ',' << format_number(r.product) << ',' << format_number(r.bound) << ','
            << format_number(r.saturation_ratio) << ',' << (r.pol_squeezed ? "true" : "false") << '\n';
    }
    return out.str();
}

inline json sweep_table_json(const std::vector<double>& n_list, const std::vector<noise::MomentReport>& reports) {
    json rows = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        json row = report_to_json(reports[i]);
        row["nbar"] = number_to_json(n_list[i]);
        rows.push_back(row);
    }
    return rows;
}

/// Writes `content` next to `path` and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::invalid_parameter, "cannot open '" + tmp.string() + "' for writing");
        f << content;
        f.flush();
        if (!f) throw Error(ErrorKind::invalid_parameter, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::invalid_parameter, "cannot move output into '" + path.string() + "'");
    }
}

struct SweepConfig {
    noise::FamilySpec family;
    std::vector<double> n_list;
    std::vector<noise::Target> targets{noise::Target::e_var};
    std::string output_path;      // per-point table; stdout when empty
    std::string output_format = "csv";
    std::string fit_output_path;  // fit summary; stdout when empty
};

/// Reads a declarative sweep configuration. Keys mirror the `sweep` flags:
/// family, relative_phase, s, dphi, q, k, kappa, phi0, mean_l, n_list,
/// targets, output, format, fit_output. Unknown keys are rejected.
inline SweepConfig sweep_config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::parse_error, "sweep config must be a JSON object");
    SweepConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "family") c.family.family = noise::family_from_string(value.get<std::string>());
            else if (key == "relative_phase") c.family.relative_phase = value.get<double>();
            else if (key == "s") c.family.squeeze = value.get<double>();
            else if (key == "dphi") c.family.dphi = value.get<double>();
            else if (key == "q") c.family.q = value.get<double>();
            else if (key == "k") c.family.order = value.get<int>();
            else if (key == "kappa") c.family.kappa = value.get<double>();
            else if (key == "phi0") c.family.phi0 = value.get<double>();
            else if (key == "mean_l") c.family.mean_l = value.get<int>();
            else if (key == "n_list") c.n_list = value.get<std::vector<double>>();
            else if (key == "targets") {
                c.targets.clear();
                for (const auto& t : value) c.targets.push_back(noise::target_from_string(t.get<std::string>()));
            } else if (key == "output") c.output_path = value.get<std::string>();
            else if (key == "format") c.output_format = value.get<std::string>();
            else if (key == "fit_output") c.fit_output_path = value.get<std::string>();
            else throw Error(ErrorKind::parse_error, "unknown sweep config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse_error, std::string("sweep config: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse_error) throw;
        throw Error(ErrorKind::parse_error, e.what());
    }
    return c;
}

inline json ellipsometry_to_json(const optics::EllipsometricResult& r) {
    constexpr double deg = 180.0 / std::numbers::pi;
    return {
        {"r_p", complex_to_json(r.r_p)},
        {"r_s", complex_to_json(r.r_s)},
        {"rho", complex_to_json(r.rho)},
        {"psi_deg", number_to_json(r.psi_angle * deg)},
        {"delta_deg", number_to_json(r.delta * deg)},
    };
}

inline json noise_to_json(const noise::RhoUncertainty& u) {
    return {
        {"sigma_delta", number_to_json(u.sigma_delta)},
        {"sigma_tanpsi_rel", number_to_json(u.sigma_tanpsi_rel)},
        {"sigma_tanpsi", number_to_json(u.sigma_tanpsi)},
        {"sigma_rho_rel", number_to_json(u.sigma_rho_rel)},
        {"large_noise", u.large_noise},
    };
}

}  // namespace qellip::io
