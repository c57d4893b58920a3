#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "thinhom/coefficients.hpp"
#include "thinhom/config.hpp"
#include "thinhom/direct3d.hpp"
#include "thinhom/error.hpp"
#include "thinhom/homsolver.hpp"
#include "thinhom/io.hpp"
#include "thinhom/unfolding.hpp"

namespace thinhom {

/// Process exit codes of the command line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitUnsupportedRegime = 2,
    kExitSolver = 3,
    kExitBudget = 4,
};

inline int exit_code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::Config:
    case ErrorKind::InvalidProfile: return kExitConfig;
    case ErrorKind::UnsupportedRegime: return kExitUnsupportedRegime;
    case ErrorKind::Budget: return kExitBudget;
    case ErrorKind::WrongPath:
    case ErrorKind::NonConvergence:
    case ErrorKind::DegenerateMesh:
    case ErrorKind::Domain: return kExitSolver;
    }
    return kExitSolver;
}

struct CommandOptions {
    std::optional<std::filesystem::path> out; // overrides the configured output directory
    bool serial = false;
    bool verbose = false;
};

/// Everything a command needs once the configuration is parsed.
struct CommandContext {
    RunConfig cfg;
    OutputStamp stamp;
    std::filesystem::path out;
    unsigned threads = 1;
    bool verbose = false;
    std::ostream* log = &std::cerr;

    ProfileFunction profile() const { return cfg.profile.build(cfg.seed); }
    CellSolveOptions cell_options() const { return cfg.cell_options(threads); }

    void note(const std::string& msg) const {
        if (verbose) *log << "[thinhom] " << msg << '\n';
    }
};

inline Json load_config_file(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) fail(ErrorKind::Config, "cannot open config " + p.string());
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Config, "config " + p.string() + " is not valid JSON: " + e.what());
    }
}

/// The output directory is not part of the hash so reruns into different
/// directories stay byte-identical.
inline OutputStamp stamp_for(const RunConfig& cfg) {
    Json c = canonical_json(cfg);
    c.erase("output");
    return {config_hash(c), kVersion};
}

inline CommandContext make_context(const Json& config, const CommandOptions& opt) {
    CommandContext ctx;
    ctx.cfg = parse_config(config);
    ctx.stamp = stamp_for(ctx.cfg);
    ctx.out = opt.out ? *opt.out : std::filesystem::path(ctx.cfg.output);
    ctx.threads = opt.serial ? 1u : std::max(1u, std::thread::hardware_concurrency());
    ctx.verbose = opt.verbose;
    return ctx;
}

namespace detail {

inline Json run_header(const CommandContext& ctx, const std::string& command) {
    return Json{{"command", command},
                {"alpha", ctx.cfg.alpha},
                {"beta", ctx.cfg.beta},
                {"profile", ctx.cfg.profile.table.empty() ? ctx.cfg.profile.name : std::string("table")}};
}

/// Source of the limit problem; `manufactured` is built so that
/// cos(k1 pi s1) cos(k2 pi s2) solves it, which needs constant coefficients.
inline Field2 limit_source(const CommandContext& ctx, const EffectiveCoefficients& c) {
    const Field2 f = make_source(ctx.cfg.source, ctx.cfg.omega);
    if (ctx.cfg.source.kind != "manufactured") return c.rhs.from_source(f);
    if (!c.constant)
        fail(ErrorKind::Config, "the manufactured source needs x1-independent coefficients; regime " +
                                    std::string(to_string(c.provenance.regime)) + " has x1-dependent ones");
    constexpr double pi = std::numbers::pi;
    const double w1 = ctx.cfg.source.k1 * pi / ctx.cfg.omega.width();
    const double w2 = ctx.cfg.source.k2 * pi / ctx.cfg.omega.height();
    const double A = c.a11(0, 0), B = c.a22(0, 0), M = c.m(0, 0);
    const double factor = (A * w1 * w1 + B * w2 * w2 + M) / M;
    return [f, factor](double x1, double x2) { return factor * f(x1, x2); };
}

struct ExactSolution {
    Field2 u;
    VectorField2 grad;
};

/// Closed-form limit solution for constant coefficients and trigonometric
/// or constant sources.
inline std::optional<ExactSolution> exact_solution(const CommandContext& ctx, const EffectiveCoefficients& c) {
    if (!c.constant) return std::nullopt;
    const auto& s = ctx.cfg.source;
    if (s.kind == "constant") {
        const double v = s.value;
        return ExactSolution{[v](double, double) { return v; },
                             [](double, double) { return std::array<double, 2>{0.0, 0.0}; }};
    }
    if (s.kind != "cos_cos" && s.kind != "manufactured") return std::nullopt;
    constexpr double pi = std::numbers::pi;
    const Rectangle w = ctx.cfg.omega;
    const double w1 = s.k1 * pi / w.width(), w2 = s.k2 * pi / w.height();
    const double A = c.a11(0, 0), B = c.a22(0, 0), M = c.m(0, 0);
    const double amp = s.kind == "manufactured" ? 1.0 : s.amplitude * M / (A * w1 * w1 + B * w2 * w2 + M);
    const double a = w.x1_lo, b = w.x2_lo;
    return ExactSolution{
        [=](double x1, double x2) { return amp * std::cos(w1 * (x1 - a)) * std::cos(w2 * (x2 - b)); },
        [=](double x1, double x2) {
            return std::array<double, 2>{-amp * w1 * std::sin(w1 * (x1 - a)) * std::cos(w2 * (x2 - b)),
                                         -amp * w2 * std::cos(w1 * (x1 - a)) * std::sin(w2 * (x2 - b))};
        }};
}

inline EffectiveCoefficients coefficients_for(const CommandContext& ctx) {
    const RegimeClass cls = classify(ctx.cfg.alpha, ctx.cfg.beta);
    ctx.note(std::string("regime ") + to_string(cls));
    const auto t0 = std::chrono::steady_clock::now();
    EffectiveCoefficients c = effective_coefficients(cls, ctx.profile(), ctx.cell_options());
    ctx.note("coefficients in " +
             std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
    return c;
}

inline HomSolution solve_limit(const CommandContext& ctx, const EffectiveCoefficients& c) {
    HomogenizedProblem p{ctx.cfg.omega, c, limit_source(ctx, c)};
    const HomSolution s = solve_homogenized(p, ctx.cfg.mesh.hom_n, ctx.cfg.mesh.hom_n, ctx.cfg.tolerances.hom);
    ctx.note("homogenized solve: " + std::to_string(s.iterations) + " CG iterations");
    return s;
}

} // namespace detail

/// coeffs: effective coefficients with provenance, plus slice and x1 tables.
inline int cmd_coeffs(const CommandContext& ctx) {
    const EffectiveCoefficients c = detail::coefficients_for(ctx);
    Json j = detail::run_header(ctx, "coeffs");
    j["coefficients"] = to_json(c);
    j["regime"] = to_string(c.provenance.regime);
    j["q1"] = c.q1;
    j["q2"] = c.q2;
    j["m"] = c.m_value;
    j["provenance"] = j["coefficients"]["provenance"];
    write_json(ctx.out / "coeffs.json", j, ctx.stamp);

    std::vector<std::vector<double>> slices;
    for (const auto& s : c.slice_table) slices.push_back({s[0], s[1]});
    write_csv(ctx.out / "slices.csv", {"parameter", "q2"}, slices, ctx.stamp);

    constexpr int n = 32;
    const Rectangle& w = ctx.cfg.omega;
    const double x2 = 0.5 * (w.x2_lo + w.x2_hi);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i <= n; ++i) {
        const double x1 = w.x1_lo + w.width() * i / n;
        rows.push_back({x1, c.a11(x1, x2), c.a22(x1, x2), c.m(x1, x2)});
    }
    write_csv(ctx.out / "coefficients.csv", {"x1", "a11", "a22", "m"}, rows, ctx.stamp);
    return kExitOk;
}

/// solve: limit solution on omega as VTK and CSV, a summary, and a
/// convergence table when the exact solution is known.
inline int cmd_solve(const CommandContext& ctx) {
    const EffectiveCoefficients c = detail::coefficients_for(ctx);
    const HomSolution s = detail::solve_limit(ctx, c);
    const Field2 fbar = detail::limit_source(ctx, c);
    const TriMesh2D& mesh = *s.mesh;

    std::vector<double> fv, a11, a22;
    for (const auto& p : mesh.nodes) {
        fv.push_back(fbar(p[0], p[1]));
        a11.push_back(c.a11(p[0], p[1]));
        a22.push_back(c.a22(p[0], p[1]));
    }
    write_vtk(ctx.out / "u_hom.vtk", mesh, {{"u", s.u.values}, {"f_bar", fv}, {"a11", a11}, {"a22", a22}}, ctx.stamp);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < mesh.num_nodes(); ++k)
        rows.push_back({mesh.nodes[k][0], mesh.nodes[k][1], s.u.values[k], fv[k]});
    write_csv(ctx.out / "u_hom.csv", {"x1", "x2", "u", "f_bar"}, rows, ctx.stamp);

    Json j = detail::run_header(ctx, "solve");
    j["coefficients"] = to_json(c);
    j["mesh"] = {{"n1", s.n1}, {"n2", s.n2}, {"nodes", mesh.num_nodes()}, {"triangles", mesh.num_triangles()}};
    j["solver"] = {{"iterations", s.iterations}, {"residual", s.residual}};
    j["energy"] = s.energy;
    j["load"] = s.load;
    j["weighted_mean_u"] = s.weighted_mean_u;
    j["weighted_mean_fbar"] = s.weighted_mean_fbar;

    if (const auto ex = detail::exact_solution(ctx, c)) {
        HomogenizedProblem p{ctx.cfg.omega, c, fbar};
        const ConvergenceTable t = convergence_study(p, ex->u, ex->grad, 4, 16);
        j["convergence"] = to_json(t);
        std::vector<std::vector<double>> cr;
        for (const auto& r : t.rows) cr.push_back({static_cast<double>(r.n), r.h, r.l2, r.h1});
        write_csv(ctx.out / "convergence.csv", {"n", "h", "l2", "h1"}, cr, ctx.stamp);
        ctx.note("convergence rates written");
    }
    write_json(ctx.out / "summary.json", j, ctx.stamp);
    return kExitOk;
}

/// validate: direct thin-domain solves against the limit solution.
inline int cmd_validate(const CommandContext& ctx) {
    const ProfileFunction g = ctx.profile();
    std::vector<ThinDomainSpec> specs;
    for (double e : ctx.cfg.epsilons) {
        ThinDomainSpec s;
        s.epsilon = e;
        s.alpha = ctx.cfg.alpha;
        s.beta = ctx.cfg.beta;
        s.profile = g;
        s.omega = ctx.cfg.omega;
        s.source = make_source(ctx.cfg.source, ctx.cfg.omega);
        s.validate();
        // Budget errors must surface before any expensive solve.
        build_thin_mesh(s, ctx.cfg.thin_mesh_options());
        specs.push_back(std::move(s));
    }
    if (ctx.cfg.source.kind == "manufactured")
        fail(ErrorKind::Config, "validate compares against the physical source; use cos_cos, constant or polynomial");
    const EffectiveCoefficients c = detail::coefficients_for(ctx);
    const HomSolution hom = detail::solve_limit(ctx, c);
    const ValidationReport rep = validate(specs, hom, ctx.cfg.thin_mesh_options(), ctx.cfg.tolerances.direct);

    Json j = detail::run_header(ctx, "validate");
    j["regime"] = to_string(c.provenance.regime);
    j["report"] = to_json(rep);
    write_json(ctx.out / "validation.json", j, ctx.stamp);
    std::vector<std::vector<double>> rows;
    for (const auto& r : rep.rows)
        rows.push_back({r.epsilon, r.error, static_cast<double>(r.elements), static_cast<double>(r.iterations),
                        r.h1_norm, r.source_norm});
    write_csv(ctx.out / "validation.csv", {"epsilon", "error", "elements", "iterations", "h1_norm", "source_norm"}, rows,
              ctx.stamp);

    if (ctx.cfg.write_3d_vtk) {
        const ThinDomainSpec& s = specs.front();
        auto mesh = std::make_shared<const HexMesh3D>(build_thin_mesh(s, ctx.cfg.thin_mesh_options()));
        const DirectSolution d = solve_direct(s, mesh, ctx.cfg.tolerances.direct);
        write_vtk(ctx.out / "u_direct.vtk", *mesh, "u", d.u, ctx.stamp);
    }
    return kExitOk;
}

/// unfold-check: two-path checks of the unfolding identities for every
/// epsilon. Returns kExitSolver when a discrepancy exceeds the tolerance.
inline int cmd_unfold_check(const CommandContext& ctx) {
    ctx.note(std::string("regime ") + to_string(classify(ctx.cfg.alpha, ctx.cfg.beta)));
    const ProfileFunction g = ctx.profile();
    const double g0 = min_profile(g);
    const double tol = ctx.cfg.tolerances.unfold;
    const Field3 one = [](double, double, double) { return 1.0; };
    const Field3 smooth = [](double a, double b, double c) { return std::sin(3 * a) * std::exp(b) * std::cos(c) + 2.0; };
    const Field3 positive = [](double a, double b, double c) { return 1.0 + a * a + b * b + c; };
    const Field3 fd_phi = [](double a, double b, double c) { return std::sin(a) + std::cos(2 * b) * c + c * c * a; };
    const auto fd_grad = [](double a, double b, double c) {
        return std::array<double, 3>{std::cos(a) + c * c, -2 * std::sin(2 * b) * c, std::cos(2 * b) + 2 * c * a};
    };

    bool ok = true;
    Json checks = Json::array();
    auto add = [&](const IdentityReport& r) {
        const bool pass = r.discrepancy <= tol;
        ok = ok && pass;
        Json e = to_json(r);
        e["tolerance"] = tol;
        e["pass"] = pass;
        checks.push_back(e);
    };
    for (double eps : ctx.cfg.epsilons) {
        const UnfoldGrid grid(eps, ctx.cfg.alpha, ctx.cfg.beta, g, ctx.cfg.omega);
        const double L1 = g.period1(), L2 = g.period2();
        add(check_oscillation_identity(
            [L1, L2](double a, double b, double c) {
                return std::cos(2 * std::numbers::pi * a / L1) * std::sin(2 * std::numbers::pi * b / L2) + c;
            },
            grid));
        add(check_integral_identity(one, grid));
        add(check_integral_identity(smooth, grid));
        add(check_norm_identity(smooth, grid));
        add(check_integral_identity(positive, grid, UnfoldRegion::Full));
        add(check_pi_norm_identity(smooth, eps, ctx.cfg.omega, g0));

        // Centred differences are second order: halving h divides the
        // residual by about 4 unless it is already at rounding level.
        const double h = std::min({g0, g.period1(), g.period2()}) / 8.0;
        const auto d1 = check_derivative_scaling(fd_phi, fd_grad, grid, h);
        const auto d2 = check_derivative_scaling(fd_phi, fd_grad, grid, h / 2);
        const double ratio = d2.max_residual > 0.0 ? d1.max_residual / d2.max_residual : 4.0;
        const bool pass = d2.max_residual <= tol || std::abs(ratio - 4.0) <= 0.5;
        ok = ok && pass;
        checks.push_back({{"identity", "derivative-scaling"},
                          {"epsilon", eps},
                          {"h", h},
                          {"residual_h", d1.max_residual},
                          {"residual_h_over_2", d2.max_residual},
                          {"ratio", ratio},
                          {"samples", d1.samples},
                          {"pass", pass}});
        ctx.note("unfold checks done for epsilon " + std::to_string(eps));
    }
    Json j = detail::run_header(ctx, "unfold-check");
    j["checks"] = checks;
    j["pass"] = ok;
    write_json(ctx.out / "unfold.json", j, ctx.stamp);
    return ok ? kExitOk : kExitSolver;
}

/// profiles: the catalog with formulas and default parameters.
inline Json profiles_json() {
    Json arr = Json::array();
    for (const auto& e : profile_catalog()) arr.push_back({{"name", e.name}, {"formula", e.formula}, {"defaults", e.defaults}});
    return arr;
}

/// Parses the config, runs one command and maps errors to exit codes.
inline int run_command(const std::string& command, const Json& config, const CommandOptions& opt,
                       std::ostream& err = std::cerr) {
    try {
        const CommandContext ctx = make_context(config, opt);
        if (command == "coeffs") return cmd_coeffs(ctx);
        if (command == "solve") return cmd_solve(ctx);
        if (command == "validate") return cmd_validate(ctx);
        if (command == "unfold-check") {
            const int rc = cmd_unfold_check(ctx);
            if (rc != kExitOk) err << "error: unfolding discrepancy above tolerance (see unfold.json)\n";
            return rc;
        }
        fail(ErrorKind::Config, "unknown command '" + command + "'");
    } catch (const BudgetError& e) {
        err << "error: " << e.what() << " (required " << e.required() << ", available " << e.available() << ")\n";
        return kExitBudget;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

} // namespace thinhom
