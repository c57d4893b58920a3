#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "thinhom/direct3d.hpp"
#include "thinhom/error.hpp"
#include "thinhom/homsolver.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/regime.hpp"
#include "thinhom/unfolding.hpp"

namespace thinhom {

inline constexpr const char* kVersion = "1.0.0";

using Json = nlohmann::json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of the compact dump; object keys are already sorted.
inline std::string config_hash(const Json& canonical) { return hex64(fnv1a64(canonical.dump())); }

/// Stamp written into every output file.
struct OutputStamp {
    std::string hash;
    std::string version = kVersion;
};

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) fail(ErrorKind::Config, "cannot write " + p.string());
    return os;
}

} // namespace detail

inline void write_json(const std::filesystem::path& p, Json j, const OutputStamp& stamp) {
    j["config_hash"] = stamp.hash;
    j["version"] = stamp.version;
    auto os = detail::open_output(p);
    os << j.dump(2) << '\n';
}

/// CSV with a one-line comment header carrying the stamp.
inline void write_csv(const std::filesystem::path& p, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows, const OutputStamp& stamp) {
    auto os = detail::open_output(p);
    os << "# thinhom " << stamp.version << " config " << stamp.hash << '\n';
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << format_double(r[c]);
        os << '\n';
    }
}

using NamedField = std::pair<std::string, std::span<const double>>;

/// Legacy ASCII VTK unstructured grid of a triangle mesh with point data.
inline void write_vtk(const std::filesystem::path& p, const TriMesh2D& mesh, const std::vector<NamedField>& fields,
                      const OutputStamp& stamp) {
    auto os = detail::open_output(p);
    os << "# vtk DataFile Version 3.0\n"
       << "thinhom " << stamp.version << " config " << stamp.hash << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& n : mesh.nodes) os << format_double(n[0]) << ' ' << format_double(n[1]) << " 0\n";
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) os << "5\n";
    os << "POINT_DATA " << mesh.num_nodes() << '\n';
    for (const auto& [name, v] : fields) {
        if (v.size() != mesh.num_nodes()) fail(ErrorKind::Domain, "field '" + name + "' does not match the mesh");
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double x : v) os << format_double(x) << '\n';
    }
}

/// Legacy ASCII VTK of a hexahedral thin-domain mesh with one nodal field.
inline void write_vtk(const std::filesystem::path& p, const HexMesh3D& m, const std::string& name,
                      std::span<const double> u, const OutputStamp& stamp) {
    if (u.size() != m.num_nodes()) fail(ErrorKind::Domain, "field '" + name + "' does not match the mesh");
    auto os = detail::open_output(p);
    os << "# vtk DataFile Version 3.0\n"
       << "thinhom " << stamp.version << " config " << stamp.hash << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.num_nodes() << " double\n";
    for (int i = 0; i <= m.n1; ++i)
        for (int j = 0; j <= m.n2; ++j)
            for (int k = 0; k <= m.nz; ++k) {
                const auto c = m.coord(i, j, k);
                os << format_double(c[0]) << ' ' << format_double(c[1]) << ' ' << format_double(c[2]) << '\n';
            }
    const long long ne = m.num_elements();
    os << "CELLS " << ne << ' ' << 9 * ne << '\n';
    for (int i = 0; i < m.n1; ++i)
        for (int j = 0; j < m.n2; ++j)
            for (int k = 0; k < m.nz; ++k) {
                os << '8';
                for (const auto& [a, b, c] : {std::array<int, 3>{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                             {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}})
                    os << ' ' << m.node(i + a, j + b, k + c);
                os << '\n';
            }
    os << "CELL_TYPES " << ne << '\n';
    for (long long e = 0; e < ne; ++e) os << "12\n";
    os << "POINT_DATA " << m.num_nodes() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : u) os << format_double(x) << '\n';
}

// ---------------------------------------------------------------------------
// JSON views of library results
// ---------------------------------------------------------------------------

inline Json to_json(const IdentityReport& r) {
    return Json{{"identity", r.identity},   {"lhs", r.lhs},
                {"rhs", r.rhs},             {"discrepancy", r.discrepancy},
                {"epsilon", r.epsilon},     {"resolution", r.resolution},
                {"inequality", r.inequality}};
}

inline Json to_json(const ValidationReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"epsilon", r.epsilon},
                        {"error", r.error},
                        {"n1", r.n1},
                        {"n2", r.n2},
                        {"nz", r.nz},
                        {"elements", r.elements},
                        {"iterations", r.iterations},
                        {"residual", r.residual},
                        {"min_jacobian", r.min_jacobian},
                        {"h1_norm", r.h1_norm},
                        {"source_norm", r.source_norm}});
    return Json{{"rows", rows}, {"notes", rep.notes}, {"monotone_decreasing", rep.monotone_decreasing()}};
}

inline Json to_json(const ConvergenceTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) rows.push_back({{"n", r.n}, {"h", r.h}, {"l2", r.l2}, {"h1", r.h1}});
    Json j{{"rows", rows}, {"exact", t.exact}};
    j["rate_l2"] = t.rate_l2 ? Json(*t.rate_l2) : Json(nullptr);
    j["rate_h1"] = t.rate_h1 ? Json(*t.rate_h1) : Json(nullptr);
    return j;
}

inline Json to_json(const EffectiveCoefficients& c) {
    Json j{{"regime", to_string(c.provenance.regime)},
           {"constant", c.constant},
           {"q1", c.q1},
           {"q2", c.q2},
           {"m", c.m_value},
           {"provenance",
            {{"a11", {{"origin", to_string(c.provenance.a11)}, {"formula", c.provenance.a11_formula}}},
             {"a22", {{"origin", to_string(c.provenance.a22)}, {"formula", c.provenance.a22_formula}}},
             {"m", {{"formula", c.provenance.m_formula}}}}}};
    if (!c.constant) j["note"] = "x1-dependent coefficients; q1, q2 and m are sampled at x1 = 0";
    return j;
}

} // namespace thinhom
