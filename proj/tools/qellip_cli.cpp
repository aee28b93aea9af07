// qellip: quantum-noise analysis of ellipsometric measurements.
//
// Exit codes: 0 success, 2 user error, 3 internal tolerance failure.

#include <qellip/qellip.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using qellip::Error;
using qellip::ErrorKind;
using qellip::io::json;
namespace noise = qellip::noise;

constexpr int kExitUser = 2;
constexpr int kExitTolerance = 3;

/// Uncertainty relation check applied to every emitted report.
constexpr double kRelationSlack = 1e-9;

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
    } else {
        qellip::io::write_file_atomic(path, content);
    }
}

void check_relation(const noise::MomentReport& r) {
    if (r.bound > 0.0 && r.saturation_ratio < 1.0 - kRelationSlack) {
        throw Error(ErrorKind::inconsistent_solution,
                    "uncertainty relation violated (ratio " + qellip::io::format_number(r.saturation_ratio) + ")");
    }
}

int to_int_exact(double v, const char* what) {
    if (std::round(v) != v || std::abs(v) > 1e9) {
        throw Error(ErrorKind::invalid_parameter, std::string(what) + " must be an integer");
    }
    return static_cast<int>(v);
}

/// State-family flags shared by `state`, `sweep`, and `ellipsometry`.
struct FamilyFlags {
    std::string family;
    double relative_phase = 0.0;
    double s = 0.0;
    double dphi = 0.0;
    double q = 0.0;
    int k = 0;
    double kappa = 0.0;
    double phi0 = 0.0;
    double mean_l = 0.0;

    std::vector<CLI::Option*> options;

    void attach(CLI::App* app, bool family_required) {
        auto* f = app->add_option("--family", family, "coherent | squeezed | mathieu | von_mises");
        if (family_required) f->required();
        options = {
            f,
            app->add_option("--relative-phase", relative_phase, "coherent: arg(alpha_p) - arg(alpha_s) [rad]"),
            app->add_option("--s", s, "squeezed: squeezing magnitude |zeta|"),
            app->add_option("--dphi", dphi, "squeezed: phi_p + phi_s - theta [rad]"),
            app->add_option("--q", q, "mathieu: phase-dispersion parameter q >= 0"),
            app->add_option("--k", k, "mathieu: order index of ce_2k"),
            app->add_option("--kappa", kappa, "von_mises: concentration >= 0"),
            app->add_option("--phi0", phi0, "von_mises: mean-phase parameter [rad]"),
            app->add_option("--mean-l", mean_l, "phase families: integer mean of L"),
        };
    }

    bool given(std::size_t i) const { return options[i]->count() > 0; }

    /// Overlays explicitly given flags on `spec`.
    void apply(noise::FamilySpec& spec) const {
        if (given(0)) spec.family = noise::family_from_string(family);
        if (given(1)) spec.relative_phase = relative_phase;
        if (given(2)) spec.squeeze = s;
        if (given(3)) spec.dphi = dphi;
        if (given(4)) spec.q = q;
        if (given(5)) spec.order = k;
        if (given(6)) spec.kappa = kappa;
        if (given(7)) spec.phi0 = phi0;
        if (given(8)) spec.mean_l = to_int_exact(mean_l, "--mean-l");
    }
};

noise::MomentReport report_for_flags(const noise::FamilySpec& spec, double nbar, bool embed) {
    const bool phase_family = spec.family == noise::Family::mathieu || spec.family == noise::Family::von_mises;
    if (phase_family && !embed) return noise::analyze(noise::phase_state(spec), nbar);
    return noise::report_for(spec, nbar);
}

// ---------------------------------------------------------------- state

struct StateArgs {
    FamilyFlags family;
    double nbar = 100.0;
    bool embed = false;
    std::string output;
};

int run_state(const StateArgs& a) {
    noise::FamilySpec spec;
    a.family.apply(spec);
    const auto report = report_for_flags(spec, a.nbar, a.embed);
    check_relation(report);
    json j = qellip::io::report_to_json(report);
    j["family"] = noise::to_string(spec.family);
    emit(a.output, j.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    FamilyFlags family;
    std::string config_path;
    std::vector<double> n_list;
    std::vector<std::string> targets;
    std::string output;
    std::string format;
    std::string fit_output;
    CLI::Option* n_list_opt = nullptr;
    CLI::Option* targets_opt = nullptr;
    CLI::Option* output_opt = nullptr;
    CLI::Option* format_opt = nullptr;
    CLI::Option* fit_output_opt = nullptr;
};

int run_sweep(const SweepArgs& a) {
    qellip::io::SweepConfig cfg;
    if (!a.config_path.empty()) {
        std::ifstream f(a.config_path);
        if (!f) throw Error(ErrorKind::parse_error, "cannot read config '" + a.config_path + "'");
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::parse_error, std::string("config: ") + e.what());
        }
        cfg = qellip::io::sweep_config_from_json(j);
    }
    a.family.apply(cfg.family);
    if (a.n_list_opt->count() > 0) cfg.n_list = a.n_list;
    if (a.targets_opt->count() > 0) {
        cfg.targets.clear();
        for (const auto& t : a.targets) cfg.targets.push_back(noise::target_from_string(t));
    }
    if (a.output_opt->count() > 0) cfg.output_path = a.output;
    if (a.format_opt->count() > 0) cfg.output_format = a.format;
    if (a.fit_output_opt->count() > 0) cfg.fit_output_path = a.fit_output;

    if (cfg.output_format != "csv" && cfg.output_format != "json") {
        throw Error(ErrorKind::invalid_parameter, "format must be csv or json");
    }
    if (cfg.targets.empty()) throw Error(ErrorKind::invalid_parameter, "no sweep targets");
    noise::validate_n_list(cfg.n_list, 4);

    const auto reports = noise::sweep_reports(cfg.family, cfg.n_list);
    for (const auto& r : reports) check_relation(r);

    json fits = json::array();
    for (auto t : cfg.targets) fits.push_back(qellip::io::fit_to_json(noise::fit_target(cfg.n_list, reports, t), t));
    json summary = {{"family", noise::to_string(cfg.family.family)}, {"fits", fits}};

    if (cfg.output_format == "csv") {
        emit(cfg.output_path, qellip::io::sweep_csv(cfg.n_list, reports));
    } else {
        emit(cfg.output_path, qellip::io::sweep_table_json(cfg.n_list, reports).dump(2) + "\n");
    }
    emit(cfg.fit_output_path, summary.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- density

struct DensityArgs {
    std::optional<double> q;
    std::optional<double> kappa;
    double phi0 = 0.0;
    int grid = 512;
    std::string output;
    std::string spectrum_output;
};

int run_density(const DensityArgs& a) {
    namespace ps = qellip::phase_space;
    if (a.grid < 64) throw Error(ErrorKind::invalid_parameter, "--grid must be at least 64");
    if (a.q.has_value() == a.kappa.has_value()) throw Error(ErrorKind::invalid_parameter, "give exactly one of --q or --kappa");

    ps::PhaseWaveFunction psi;
    std::ostringstream density;
    if (a.q) {
        const double q = *a.q;
        psi = ps::from_mathieu(qellip::mathieu::solve_even_mathieu(q, 0));
        const auto profile = ps::density_profile(psi, a.grid);
        density << "phi,p_mathieu,p_vonmises_smallq,p_vonmises_largeq\n";
        for (const auto& s : profile) {
            density << qellip::io::format_number(s.phi) << ',' << qellip::io::format_number(s.p) << ','
                    << qellip::io::format_number(ps::von_mises_density(q, 0.0, s.phi)) << ','
                    << qellip::io::format_number(ps::von_mises_density(std::sqrt(q), 0.0, s.phi)) << '\n';
        }
    } else {
        psi = ps::from_von_mises(*a.kappa, a.phi0);
        const auto profile = ps::density_profile(psi, a.grid);
        density << "phi,p_vonmises\n";
        for (const auto& s : profile) {
            density << qellip::io::format_number(s.phi) << ',' << qellip::io::format_number(s.p) << '\n';
        }
    }

    std::ostringstream spectrum;
    spectrum << "l,psi_sq\n";
    for (int l = psi.first_index; l <= psi.last_index(); ++l) {
        spectrum << l << ',' << qellip::io::format_number(std::norm(psi[l])) << '\n';
    }

    emit(a.output, density.str());
    if (!a.spectrum_output.empty()) emit(a.spectrum_output, spectrum.str());
    return 0;
}

// ---------------------------------------------------------------- ellipsometry

struct EllipsometryArgs {
    std::string stack_file;
    FamilyFlags family;
    double nbar = 100.0;
    bool embed = false;
    std::string output;
};

int run_ellipsometry(const EllipsometryArgs& a) {
    std::ifstream f(a.stack_file);
    if (!f) throw Error(ErrorKind::parse_error, "cannot read stack file '" + a.stack_file + "'");
    const auto stack = qellip::optics::parse_stack(f);

    json j;
    if (a.family.given(0)) {
        noise::FamilySpec spec;
        a.family.apply(spec);
        const auto report = report_for_flags(spec, a.nbar, a.embed);
        check_relation(report);
        const auto noisy = qellip::optics::rho_with_noise(stack, report);
        j = qellip::io::ellipsometry_to_json(noisy.result);
        j["noise"] = qellip::io::noise_to_json(noisy.noise);
        j["state"] = qellip::io::report_to_json(report);
        j["state"]["family"] = noise::to_string(spec.family);
    } else {
        j = qellip::io::ellipsometry_to_json(qellip::optics::stack_reflection(stack));
    }
    emit(a.output, j.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- mathieu-table

struct TableArgs {
    double q = 0.0;
    int k_max = 3;
    std::optional<int> truncation;
    std::string format = "json";
    std::string output;
};

int run_mathieu_table(const TableArgs& a) {
    namespace mt = qellip::mathieu;
    if (a.k_max < 0) throw Error(ErrorKind::invalid_parameter, "--k-max must be non-negative");
    if (a.format != "json" && a.format != "csv") throw Error(ErrorKind::invalid_parameter, "format must be csv or json");

    json even = json::array();
    json odd = json::array();
    std::ostringstream csv;
    csv << "k,eigenvalue,theta,l_var,e_var,product,odd_eigenvalue\n";
    int used_truncation = 0;
    for (int k = 0; k <= a.k_max; ++k) {
        const int J = a.truncation ? *a.truncation : std::max(mt::auto_truncation(a.q), k + 24);
        used_truncation = std::max(used_truncation, J);
        const auto sol = mt::solve_even_mathieu(a.q, k, J);
        const auto var = mt::mathieu_variances(sol);
        const double theta = mt::theta_series(sol);
        const double b = mt::odd_mathieu_eigenvalue(a.q, k, J);
        json coeffs = json::array();
        for (double c : sol.coefficients) coeffs.push_back(c);
        even.push_back({{"k", k},
                        {"eigenvalue", sol.eigenvalue},
                        {"theta", theta},
                        {"l_var", var.l_var},
                        {"e_var", var.e_var},
                        {"product", var.l_var * var.e_var},
                        {"truncation", J},
                        {"coefficients", coeffs}});
        odd.push_back({{"k", k}, {"order", 2 * k + 2}, {"eigenvalue", b}});
        csv << k << ',' << qellip::io::format_number(sol.eigenvalue) << ',' << qellip::io::format_number(theta) << ','
            << qellip::io::format_number(var.l_var) << ',' << qellip::io::format_number(var.e_var) << ','
            << qellip::io::format_number(var.l_var * var.e_var) << ',' << qellip::io::format_number(b) << '\n';
    }
    if (a.format == "csv") {
        emit(a.output, csv.str());
    } else {
        json j = {{"q", a.q}, {"even", even}, {"odd", odd}};
        emit(a.output, j.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum noise limits of ellipsometry"};
    app.require_subcommand(1);

    StateArgs state_args;
    auto* state = app.add_subcommand("state", "Moment report for one input state");
    state_args.family.attach(state, true);
    state->add_option("--nbar", state_args.nbar, "mean photon number (embedding layer for phase states)");
    state->add_flag("--embed", state_args.embed, "phase states: embed in the Fock layer N = nbar instead of the phase-space fast path");
    state->add_option("-o,--output", state_args.output, "output JSON path (stdout if omitted)");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Scaling sweep over nbar with log-log fits");
    sweep_args.family.attach(sweep, false);
    sweep->add_option("--config", sweep_args.config_path, "JSON sweep configuration; flags override it");
    sweep_args.n_list_opt = sweep->add_option("--n-list", sweep_args.n_list, "comma-separated nbar values")->delimiter(',');
    sweep_args.targets_opt = sweep->add_option("--targets", sweep_args.targets, "e_var,l_var,p_var,rho_var")->delimiter(',');
    sweep_args.output_opt = sweep->add_option("-o,--output", sweep_args.output, "per-point table path");
    sweep_args.format_opt = sweep->add_option("--format", sweep_args.format, "csv | json");
    sweep_args.fit_output_opt = sweep->add_option("--fit-output", sweep_args.fit_output, "fit summary JSON path");

    DensityArgs density_args;
    auto* density = app.add_subcommand("density", "Relative-phase density and Fourier spectrum");
    density->add_option("--q", density_args.q, "Mathieu parameter q");
    density->add_option("--kappa", density_args.kappa, "von Mises concentration");
    density->add_option("--phi0", density_args.phi0, "von Mises mean-phase parameter");
    density->add_option("--grid", density_args.grid, "grid points over [0, 2 pi) (>= 64)");
    density->add_option("-o,--output", density_args.output, "density CSV path");
    density->add_option("--spectrum-output", density_args.spectrum_output, "spectrum CSV path (l,psi_sq)");

    EllipsometryArgs ell_args;
    auto* ell = app.add_subcommand("ellipsometry", "rho, psi, Delta of a layer stack, with optional noise bars");
    ell->add_option("stack", ell_args.stack_file, "stack description file")->required();
    ell_args.family.attach(ell, false);
    ell->add_option("--nbar", ell_args.nbar, "mean photon number of the probe state");
    ell->add_flag("--embed", ell_args.embed, "phase states: exact Fock-layer embedding");
    ell->add_option("-o,--output", ell_args.output, "output JSON path");

    TableArgs table_args;
    auto* table = app.add_subcommand("mathieu-table", "Mathieu eigenvalues, coefficients and variances");
    table->add_option("--q", table_args.q, "Mathieu parameter q")->required();
    table->add_option("--k-max", table_args.k_max, "largest order index k");
    table->add_option("--J", table_args.truncation, "truncation dimension");
    table->add_option("--format", table_args.format, "json | csv");
    table->add_option("-o,--output", table_args.output, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUser;
    }

    try {
        if (*state) return run_state(state_args);
        if (*sweep) return run_sweep(sweep_args);
        if (*density) return run_density(density_args);
        if (*ell) return run_ellipsometry(ell_args);
        if (*table) return run_mathieu_table(table_args);
    } catch (const Error& e) {
        std::cerr << "qellip: " << e.what() << '\n';
        return e.is_tolerance_failure() ? kExitTolerance : kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "qellip: internal error: " << e.what() << '\n';
        return kExitTolerance;
    }
    return kExitUser;
}
