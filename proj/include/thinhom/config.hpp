#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thinhom/cellsolver.hpp"
#include "thinhom/direct3d.hpp"
#include "thinhom/error.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/unfolding.hpp"

namespace thinhom {

/// Source f(x1, x2) from the closed-form catalog. Trigonometric kinds use
/// coordinates relative to omega so they satisfy the natural boundary
/// condition on any rectangle.
struct SourceSpec {
    std::string kind = "cos_cos"; // constant | cos_cos | polynomial | manufactured
    double value = 1.0;           // constant
    double amplitude = 1.0;       // cos_cos
    int k1 = 1, k2 = 1;           // cos_cos, manufactured
    std::vector<std::array<double, 3>> terms; // polynomial: (c, p1, p2) for c x1^p1 x2^p2
};

struct MeshSettings {
    int cell_n_h = 64, cell_n_v = 64;
    int n_y1 = 8, n_x1 = 16;
    int hom_n = 64;
    int cells_per_period = 8, nz = 6;
    long long element_budget = 2000000;
};

struct ToleranceSettings {
    double cell = 1e-11;
    double hom = 1e-10;
    double direct = 1e-10;
    double unfold = 1e-8;
};

struct ProfileSettings {
    std::string name = "cos_cos";
    std::vector<double> params;
    std::vector<PiecewiseRow> table; // used instead of the catalog when non-empty
    double period1 = 1.0, period2 = 1.0;

    ProfileFunction build() const {
        if (!table.empty()) return make_table_profile(table, period1, period2);
        return make_profile(name, params, period1, period2);
    }

    /// The `fourier` catalog entry takes its seed from the run seed when no
    /// parameters are given.
    ProfileFunction build(std::uint64_t seed) const {
        if (table.empty() && name == "fourier" && params.empty())
            return make_profile(name, {static_cast<double>(seed), 2.0, 0.8}, period1, period2);
        return build();
    }
};

struct RunConfig {
    ProfileSettings profile;
    double alpha = 0.5, beta = 0.75;
    Rectangle omega{};
    SourceSpec source;
    std::vector<double> epsilons{0.2, 0.1, 0.05};
    MeshSettings mesh;
    ToleranceSettings tolerances;
    std::string output = "out";
    std::uint64_t seed = 1;
    bool extrapolate = true;
    bool write_3d_vtk = false;

    CellSolveOptions cell_options(unsigned threads = 1) const {
        CellSolveOptions o;
        o.res = {mesh.cell_n_h, mesh.cell_n_v};
        o.tol = tolerances.cell;
        o.n_y1 = mesh.n_y1;
        o.n_y1_max = std::max(o.n_y1_max, mesh.n_y1);
        o.n_x1 = mesh.n_x1;
        o.extrapolate = extrapolate;
        o.threads = threads;
        return o;
    }

    ThinMeshOptions thin_mesh_options() const {
        ThinMeshOptions o;
        o.cells_per_period = mesh.cells_per_period;
        o.nz = mesh.nz;
        o.element_budget = mesh.element_budget;
        return o;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) fail(ErrorKind::Config, where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) fail(ErrorKind::Config, "unknown key '" + k + "' in " + where);
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::Config, "'" + key + "' in " + where + " has the wrong type");
    }
}

template <class T>
void read_opt(const nlohmann::json& j, const std::string& key, T& out, const std::string& where) {
    if (j.contains(key)) out = get_as<T>(j, key, where);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Config, what);
}

} // namespace detail

/// Parses and validates a run configuration; every numeric field is checked
/// before anything runs and unknown keys are rejected.
inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::read_opt;
    using detail::require;
    detail::check_keys(j,
                       {"profile", "alpha", "beta", "omega", "source", "epsilons", "mesh", "tolerances", "output",
                        "seed", "extrapolate", "write_3d_vtk"},
                       "config");
    RunConfig c;
    if (j.contains("profile")) {
        const auto& p = j["profile"];
        detail::check_keys(p, {"name", "params", "table", "period1", "period2"}, "profile");
        read_opt(p, "name", c.profile.name, "profile");
        read_opt(p, "params", c.profile.params, "profile");
        read_opt(p, "period1", c.profile.period1, "profile");
        read_opt(p, "period2", c.profile.period2, "profile");
        if (p.contains("table")) {
            const auto rows = detail::get_as<std::vector<std::vector<double>>>(p, "table", "profile");
            for (const auto& r : rows) {
                require(r.size() == 5, "profile table rows are [y1_lo, y1_hi, y2_lo, y2_hi, value]");
                c.profile.table.push_back({r[0], r[1], r[2], r[3], r[4]});
            }
            require(!c.profile.table.empty(), "profile table is empty");
            c.profile.name = "table";
        }
    }
    read_opt(j, "alpha", c.alpha, "config");
    read_opt(j, "beta", c.beta, "config");
    if (j.contains("omega")) {
        const auto w = detail::get_as<std::vector<double>>(j, "omega", "config");
        require(w.size() == 4, "omega is [x1_lo, x1_hi, x2_lo, x2_hi]");
        c.omega = {w[0], w[1], w[2], w[3]};
    }
    if (j.contains("source")) {
        const auto& s = j["source"];
        detail::check_keys(s, {"kind", "value", "amplitude", "k1", "k2", "terms"}, "source");
        read_opt(s, "kind", c.source.kind, "source");
        read_opt(s, "value", c.source.value, "source");
        read_opt(s, "amplitude", c.source.amplitude, "source");
        read_opt(s, "k1", c.source.k1, "source");
        read_opt(s, "k2", c.source.k2, "source");
        if (s.contains("terms")) {
            const auto t = detail::get_as<std::vector<std::vector<double>>>(s, "terms", "source");
            for (const auto& r : t) {
                require(r.size() == 3, "polynomial terms are [c, p1, p2]");
                c.source.terms.push_back({r[0], r[1], r[2]});
            }
        }
    }
    read_opt(j, "epsilons", c.epsilons, "config");
    if (j.contains("mesh")) {
        const auto& m = j["mesh"];
        detail::check_keys(m, {"cell_n_h", "cell_n_v", "n_y1", "n_x1", "hom_n", "cells_per_period", "nz", "element_budget"},
                           "mesh");
        read_opt(m, "cell_n_h", c.mesh.cell_n_h, "mesh");
        read_opt(m, "cell_n_v", c.mesh.cell_n_v, "mesh");
        read_opt(m, "n_y1", c.mesh.n_y1, "mesh");
        read_opt(m, "n_x1", c.mesh.n_x1, "mesh");
        read_opt(m, "hom_n", c.mesh.hom_n, "mesh");
        read_opt(m, "cells_per_period", c.mesh.cells_per_period, "mesh");
        read_opt(m, "nz", c.mesh.nz, "mesh");
        read_opt(m, "element_budget", c.mesh.element_budget, "mesh");
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        detail::check_keys(t, {"cell", "hom", "direct", "unfold"}, "tolerances");
        read_opt(t, "cell", c.tolerances.cell, "tolerances");
        read_opt(t, "hom", c.tolerances.hom, "tolerances");
        read_opt(t, "direct", c.tolerances.direct, "tolerances");
        read_opt(t, "unfold", c.tolerances.unfold, "tolerances");
    }
    read_opt(j, "output", c.output, "config");
    read_opt(j, "seed", c.seed, "config");
    read_opt(j, "extrapolate", c.extrapolate, "config");
    read_opt(j, "write_3d_vtk", c.write_3d_vtk, "config");

    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(c.alpha) && finite(c.beta), "alpha and beta must be finite");
    require(finite(c.omega.x1_lo) && finite(c.omega.x1_hi) && finite(c.omega.x2_lo) && finite(c.omega.x2_hi) &&
                c.omega.x1_hi > c.omega.x1_lo && c.omega.x2_hi > c.omega.x2_lo,
            "omega must be a non-degenerate rectangle");
    require(c.profile.period1 > 0.0 && c.profile.period2 > 0.0, "profile periods must be positive");
    require(!c.epsilons.empty(), "epsilons must not be empty");
    for (double e : c.epsilons) require(e > 0.0 && e < 1.0, "every epsilon must lie in (0, 1)");
    require(c.mesh.cell_n_h >= 4 && c.mesh.cell_n_v >= 4, "cell resolution must be at least 4 x 4");
    require(c.mesh.n_y1 >= 1 && c.mesh.n_x1 >= 1, "n_y1 and n_x1 must be >= 1");
    require(c.mesh.hom_n >= 2, "hom_n must be >= 2");
    require(c.mesh.cells_per_period >= 4, "cells_per_period must be >= 4");
    require(c.mesh.nz >= 1, "nz must be >= 1");
    require(c.mesh.element_budget >= 1, "element_budget must be positive");
    require(c.tolerances.cell > 0 && c.tolerances.hom > 0 && c.tolerances.direct > 0 && c.tolerances.unfold > 0,
            "tolerances must be positive");
    const std::set<std::string> kinds{"constant", "cos_cos", "polynomial", "manufactured"};
    require(kinds.count(c.source.kind) > 0, "source kind must be one of constant, cos_cos, polynomial, manufactured");
    require(finite(c.source.value) && finite(c.source.amplitude), "source parameters must be finite");
    if (c.source.kind == "polynomial") require(!c.source.terms.empty(), "polynomial source needs terms");
    for (const auto& t : c.source.terms)
        require(finite(t[0]) && t[1] >= 0 && t[2] >= 0 && t[1] == std::floor(t[1]) && t[2] == std::floor(t[2]),
                "polynomial powers must be non-negative integers");
    try {
        validate_profile(c.profile.build(c.seed));
    } catch (const Error& e) {
        fail(ErrorKind::Config, std::string("profile: ") + e.what());
    }
    return c;
}

/// Fully expanded configuration (defaults included) as JSON; its compact
/// dump is what the output hash covers.
inline nlohmann::json canonical_json(const RunConfig& c) {
    nlohmann::json p{{"period1", c.profile.period1}, {"period2", c.profile.period2}};
    if (c.profile.table.empty()) {
        p["name"] = c.profile.name;
        p["params"] = c.profile.params;
    } else {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : c.profile.table) rows.push_back({r.y1_lo, r.y1_hi, r.y2_lo, r.y2_hi, r.value});
        p["table"] = rows;
    }
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : c.source.terms) terms.push_back({t[0], t[1], t[2]});
    return {{"profile", p},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"omega", {c.omega.x1_lo, c.omega.x1_hi, c.omega.x2_lo, c.omega.x2_hi}},
            {"source",
             {{"kind", c.source.kind},
              {"value", c.source.value},
              {"amplitude", c.source.amplitude},
              {"k1", c.source.k1},
              {"k2", c.source.k2},
              {"terms", terms}}},
            {"epsilons", c.epsilons},
            {"mesh",
             {{"cell_n_h", c.mesh.cell_n_h},
              {"cell_n_v", c.mesh.cell_n_v},
              {"n_y1", c.mesh.n_y1},
              {"n_x1", c.mesh.n_x1},
              {"hom_n", c.mesh.hom_n},
              {"cells_per_period", c.mesh.cells_per_period},
              {"nz", c.mesh.nz},
              {"element_budget", c.mesh.element_budget}}},
            {"tolerances",
             {{"cell", c.tolerances.cell},
              {"hom", c.tolerances.hom},
              {"direct", c.tolerances.direct},
              {"unfold", c.tolerances.unfold}}},
            {"output", c.output},
            {"seed", c.seed},
            {"extrapolate", c.extrapolate},
            {"write_3d_vtk", c.write_3d_vtk}};
}

/// f(x1, x2) for the catalog kinds other than `manufactured`, which depends
/// on the coefficients (see manufactured_source).
inline std::function<double(double, double)> make_source(const SourceSpec& s, const Rectangle& omega) {
    constexpr double pi = std::numbers::pi;
    if (s.kind == "constant") {
        const double v = s.value;
        return [v](double, double) { return v; };
    }
    if (s.kind == "cos_cos" || s.kind == "manufactured") {
        const double A = s.kind == "cos_cos" ? s.amplitude : 1.0;
        const double w1 = s.k1 * pi / omega.width(), w2 = s.k2 * pi / omega.height();
        const double a = omega.x1_lo, b = omega.x2_lo;
        return [=](double x1, double x2) { return A * std::cos(w1 * (x1 - a)) * std::cos(w2 * (x2 - b)); };
    }
    if (s.kind == "polynomial") {
        const auto terms = s.terms;
        return [terms](double x1, double x2) {
            double v = 0.0;
            for (const auto& t : terms) v += t[0] * std::pow(x1, t[1]) * std::pow(x2, t[2]);
            return v;
        };
    }
    fail(ErrorKind::Config, "unknown source kind '" + s.kind + "'");
}

} // namespace thinhom
