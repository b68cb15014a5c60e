#pragma once

// File outputs: CSV tables with a schema line, binary field dumps, manifests.

#include "simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dnls {

inline constexpr int schema_version = 1;

inline std::string schema_line(const std::string& table) {
    return "# dnls schema " + std::to_string(schema_version) + " " + table;
}

// Shortest text that reads back to the same double.
inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return os.str();
}

class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::string& table, const std::vector<std::string>& header) : os_(os) {
        os_ << schema_line(table) << "\n";
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }

private:
    std::ostream& os_;
};

inline void write_envelope_csv(std::ostream& os, const std::vector<EnvelopeHistory>& snaps) {
    CsvWriter w(os, "envelope", {"source", "m2", "n2", "re", "im", "abs"});
    for (const auto& h : snaps)
        for (std::size_t i = 0; i < h.phi.size(); ++i)
            w.row({h.source, fmt(h.m2), std::to_string(h.n2_first + (long long)i), fmt(h.phi[i].real()),
                   fmt(h.phi[i].imag()), fmt(std::abs(h.phi[i]))});
}

inline void write_convergence_csv(std::ostream& os, const FarFieldReport& rep) {
    CsvWriter w(os, "convergence",
                {"N", "eps", "rows", "width", "E", "ratio", "E_semicontinuous", "second_harmonic_error", "max_residual"});
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const auto& r = rep.runs[i];
        w.row({std::to_string(r.N), fmt(r.eps), std::to_string(r.rows), std::to_string(r.width), fmt(r.error),
               i < rep.ratios.size() ? fmt(rep.ratios[i]) : "", fmt(r.error_semicontinuous),
               fmt(r.second_harmonic_error), fmt(r.max_residual)});
    }
}

// Binary field dump: magic "DNLSGRID", u32 version, u64 rows, u64 width,
// i64 n0, then per row an i64 m, then rows*width little-endian float64.
inline void write_field_grid(std::ostream& os, const FieldGrid& g) {
    auto put = [&](const void* p, std::size_t n) { os.write(static_cast<const char*>(p), std::streamsize(n)); };
    const char magic[8] = {'D', 'N', 'L', 'S', 'G', 'R', 'I', 'D'};
    const std::uint32_t version = schema_version;
    const std::uint64_t rows = g.rows.size(), width = g.width;
    const std::int64_t n0 = g.n0;
    put(magic, 8);
    put(&version, 4);
    put(&rows, 8);
    put(&width, 8);
    put(&n0, 8);
    for (auto m : g.m) {
        const std::int64_t mm = m;
        put(&mm, 8);
    }
    for (const auto& r : g.rows) put(r.data(), r.size() * sizeof(double));
    if (!os) throw ConfigError("failed to write field grid");
}

inline FieldGrid read_field_grid(std::istream& is) {
    auto get = [&](void* p, std::size_t n) {
        is.read(static_cast<char*>(p), std::streamsize(n));
        if (!is) throw ConfigError("truncated field grid");
    };
    char magic[8];
    get(magic, 8);
    if (std::memcmp(magic, "DNLSGRID", 8) != 0) throw ConfigError("not a field grid file");
    std::uint32_t version = 0;
    std::uint64_t rows = 0, width = 0;
    std::int64_t n0 = 0;
    get(&version, 4);
    if (version != std::uint32_t(schema_version)) throw ConfigError("unsupported field grid version");
    get(&rows, 8);
    get(&width, 8);
    get(&n0, 8);
    FieldGrid g;
    g.n0 = n0;
    g.width = width;
    for (std::uint64_t i = 0; i < rows; ++i) {
        std::int64_t m = 0;
        get(&m, 8);
        g.m.push_back(m);
    }
    for (std::uint64_t i = 0; i < rows; ++i) {
        std::vector<double> r(width);
        get(r.data(), width * sizeof(double));
        g.rows.push_back(std::move(r));
    }
    return g;
}

inline nlohmann::ordered_json complex_json(cd v) { return {{"re", v.real()}, {"im", v.imag()}}; }

inline nlohmann::ordered_json reduced_json(const ReducedEquation& r) {
    nlohmann::ordered_json j;
    j["model"] = to_string(r.kind);
    j["k"] = r.k;
    if (r.kind != ModelKind::nikdv) {
        j["cos_k"] = to_string(r.wave.cos_k);
        j["sin_sign"] = r.wave.sin_sign;
        j["degenerate"] = r.scales.degenerate;
        j["S"] = complex_json(r.scales.S);
    }
    j["M1"] = r.M1;
    j["M2"] = r.M2;
    j["group_velocity"] = r.M1 != 0 ? r.M2 / r.M1 : 0.0;
    j["exact"] = r.exact.has_value();
    auto& c = j["coefficients"];
    c["c1"] = complex_json(r.c1());
    c["c2"] = complex_json(r.c2());
    c["cubic"] = complex_json(r.cubic());
    c["c_psi0"] = complex_json(r.c_psi0());
    c["p1"] = complex_json(r.p1());
    c["p2"] = complex_json(r.p2());
    c["nonlocal"] = r.coef.nonlocal;
    auto& n = j["nls"];
    n["C1"] = complex_json(r.C1());
    n["C2"] = complex_json(r.C2());
    n["C3"] = complex_json(r.C3());
    n["continuum"] = complex_json(r.continuum());
    auto& raw = j["raw"];
    raw = nlohmann::ordered_json::object();
    for (const auto& [name, v] : r.coef.raw) raw[name] = complex_json(v.to_cd());
    if (r.exact) {
        auto& e = j["exact_values"];
        auto put = [&](const char* name, const Cx<Rational>& v) { e[name] = {{"re", to_string(v.re)}, {"im", to_string(v.im)}}; };
        put("c1", r.exact->c1);
        put("c2", r.exact->c2);
        put("cubic", r.exact->cubic);
        put("c_psi0", r.exact->c_psi0);
        put("p1", r.exact->p1);
        put("p2", r.exact->p2);
    }
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace dnls
