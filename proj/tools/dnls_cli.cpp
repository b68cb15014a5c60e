// dnls: dispersion tables, admissible carriers, reduced coefficients,
// engine derivations and far-field simulations from one config.

#include <dnls/dnls.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using json = nlohmann::ordered_json;
using namespace dnls;

namespace {

json defaults() {
    return json::parse(R"({
      "model": {"kind": "mkdv", "p": "2", "q": "1", "e1": "2", "e2": "1", "o1": "3", "o2": null,
                "alpha": "2", "beta": "1"},
      "carrier": {"cos_k": "0", "sin_sign": 1, "M2": 4, "branch": 0, "k": 1.0471975511965976, "S": 1.0},
      "variant": "corrected",
      "N": [8, 16],
      "packet": {"profile": "sech", "amplitude": 0.2, "width": 32, "harmonics": 2},
      "slow_time": 5,
      "demod": {"passes": 3, "window": 0, "sampling": "lagrange"},
      "semicontinuous_dt": 0.01,
      "control": true,
      "linear": false,
      "snapshots": 5,
      "grid": {"k_min": 0.05, "k_max": 3.09, "k_count": 60},
      "admissible": {"M2_max": 4, "denom_max": 6, "r_min": -4, "r_max": 4, "r_count": 81},
      "verify": {"samples": 5, "seed": 1},
      "output": {"dir": ".", "prefix": "dnls", "grid": false, "equations": false}
    })");
}

// Sets a dotted key path, creating objects on the way.
void set_path(json& j, const std::string& path, const json& value) {
    json* cur = &j;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("empty config key");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!cur->contains(parts[i]) || !(*cur)[parts[i]].is_object()) (*cur)[parts[i]] = json::object();
        cur = &(*cur)[parts[i]];
    }
    (*cur)[parts.back()] = value;
}

json parse_value(const std::string& s) {
    try {
        return json::parse(s);
    } catch (const json::parse_error&) {
        return s;
    }
}

std::string rational_text(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) throw ConfigError(key + " must be an integer or a rational string such as \"1/2\"");
    throw ConfigError(key + " is missing");
}

Rational rat(const json& cfg, const std::string& group, const std::string& key) {
    return parse_rational(rational_text(cfg.at(group).at(key), group + "." + key));
}

template <class T>
T get(const json& cfg, const std::string& path) {
    const json* cur = &cfg;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!cur->contains(part)) throw ConfigError("missing config key " + path);
        cur = &cur->at(part);
    }
    try {
        return cur->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key " + path + " has the wrong type");
    }
}

LatticeModel build_model(const json& cfg) {
    const ModelKind kind = parse_model_kind(get<std::string>(cfg, "model.kind"));
    switch (kind) {
        case ModelKind::mkdv: return LatticeModel::mkdv(rat(cfg, "model", "p"), rat(cfg, "model", "q"));
        case ModelKind::hietarinta: {
            std::optional<Rational> o2;
            if (!cfg["model"]["o2"].is_null()) o2 = rat(cfg, "model", "o2");
            return LatticeModel::hietarinta(rat(cfg, "model", "e1"), rat(cfg, "model", "e2"), rat(cfg, "model", "o1"), o2);
        }
        case ModelKind::vkvm: return LatticeModel::vkvm(rat(cfg, "model", "alpha"));
        case ModelKind::nikdv: return LatticeModel::nikdv(rat(cfg, "model", "alpha"), rat(cfg, "model", "beta"));
    }
    throw ConfigError("unknown model");
}

Wavenumber build_wave(const json& cfg) {
    Wavenumber w{rat(cfg, "carrier", "cos_k"), get<int>(cfg, "carrier.sin_sign")};
    if (w.sin_sign != 1 && w.sin_sign != -1) throw ConfigError("carrier.sin_sign must be 1 or -1");
    w.check();
    return w;
}

FormVariant build_variant(const json& cfg) {
    const auto v = get<std::string>(cfg, "variant");
    if (v == "corrected") return FormVariant::corrected;
    if (v == "printed") return FormVariant::printed;
    throw ConfigError("variant must be 'corrected' or 'printed'");
}

ReducedEquation build_reduced(const LatticeModel& m, const json& cfg, bool engine) {
    if (m.kind() == ModelKind::nikdv)
        return reduce_nikdv(m.alpha(), m.beta(), get<double>(cfg, "carrier.k"), get<double>(cfg, "carrier.S"));
    const Wavenumber w = build_wave(cfg);
    const long long M2 = get<long long>(cfg, "carrier.M2");
    const int branch = get<int>(cfg, "carrier.branch");
    return engine ? reduce_with_engine(m, w, M2, branch) : reduce_closed(m, w, M2, build_variant(cfg), branch);
}

std::vector<long long> build_Ns(const json& cfg) {
    auto Ns = get<std::vector<long long>>(cfg, "N");
    if (Ns.empty()) throw ConfigError("N must list at least one value");
    for (auto n : Ns)
        if (n < 2) throw ConfigError("N must be at least 2");
    return Ns;
}

FarFieldConfig build_far_field(const json& cfg) {
    FarFieldConfig f;
    f.packet.profile = parse_profile(get<std::string>(cfg, "packet.profile"));
    f.packet.amplitude = get<double>(cfg, "packet.amplitude");
    f.packet.width = get<double>(cfg, "packet.width");
    f.packet.harmonics = get<int>(cfg, "packet.harmonics");
    if (f.packet.harmonics < 1 || f.packet.harmonics > 2) throw ConfigError("packet.harmonics must be 1 or 2");
    f.slow_time = get<long long>(cfg, "slow_time");
    if (f.slow_time < 1) throw ConfigError("slow_time must be positive");
    f.demod.passes = get<int>(cfg, "demod.passes");
    f.demod.window = get<int>(cfg, "demod.window");
    const auto s = get<std::string>(cfg, "demod.sampling");
    if (s == "lagrange") f.demod.sampling = Sampling::lagrange;
    else if (s == "nearest") f.demod.sampling = Sampling::nearest;
    else throw ConfigError("demod.sampling must be 'lagrange' or 'nearest'");
    f.semicontinuous_dt = get<double>(cfg, "semicontinuous_dt");
    f.control = get<bool>(cfg, "control");
    f.linear = get<bool>(cfg, "linear");
    return f;
}

std::filesystem::path out_path(const json& cfg, const std::string& suffix) {
    std::filesystem::path dir = get<std::string>(cfg, "output.dir");
    std::filesystem::create_directories(dir);
    return dir / (get<std::string>(cfg, "output.prefix") + "_" + suffix);
}

void write_manifest(const json& cfg, const std::string& command, const json& results) {
    json m = cfg;
    m["schema"] = "dnls schema " + std::to_string(schema_version) + " manifest";
    m["command"] = command;
    m["results"] = results;
    write_text(out_path(cfg, command + "_manifest.json").string(), m.dump(2) + "\n");
}

int cmd_dispersion(const json& cfg) {
    const LatticeModel m = build_model(cfg);
    const double k0 = get<double>(cfg, "grid.k_min"), k1 = get<double>(cfg, "grid.k_max");
    const int n = get<int>(cfg, "grid.k_count");
    if (n < 1 || k1 < k0) throw ConfigError("grid needs k_count >= 1 and k_max >= k_min");
    const auto path = out_path(cfg, "dispersion.csv");
    std::ofstream f(path);
    CsvWriter w(f, "dispersion", {"k", "omega", "group_velocity", "abs_Omega", "status"});
    bool pq_zero = false;
    if (m.kind() != ModelKind::nikdv) {
        try {
            pq_zero = pq_of(m).P == 0;
        } catch (const DomainError&) {
        }
    }
    int flagged = 0;
    for (int i = 0; i < n; ++i) {
        const double k = n == 1 ? k0 : k0 + (k1 - k0) * i / (n - 1);
        try {
            const CarrierWave c = m.dispersion(k);
            w.row({fmt(k), fmt(c.omega), fmt(c.group_velocity), fmt(std::abs(c.Omega)), pq_zero ? "degenerate_P0" : "ok"});
        } catch (const DomainError& e) {
            ++flagged;
            w.row({fmt(k), "", "", "", "reality_violation"});
        }
    }
    write_manifest(cfg, "dispersion", {{"table", path.string()}, {"rows", n}, {"flagged", flagged}});
    std::cout << "wrote " << path.string() << " (" << n << " rows, " << flagged << " flagged)\n";
    return 0;
}

int cmd_admissible(const json& cfg) {
    const LatticeModel m = build_model(cfg);
    const auto M2max = get<long long>(cfg, "admissible.M2_max"), dmax = get<long long>(cfg, "admissible.denom_max");
    const auto entries = enumerate_admissible(m, M2max, dmax);
    const auto path = out_path(cfg, "admissible.csv");
    {
        std::ofstream f(path);
        CsvWriter w(f, "admissible", {"cos_k", "M1", "M2", "group_velocity", "degenerate"});
        for (const auto& e : entries)
            w.row({to_string(e.cos_k), std::to_string(e.M1), std::to_string(e.M2),
                   e.M1 ? to_string(Rational(e.M2) / Rational(e.M1)) : "", e.degenerate ? "1" : "0"});
    }
    const auto rpath = out_path(cfg, "regions.csv");
    {
        std::ofstream f(rpath);
        CsvWriter w(f, "regions", {"r", "lo", "hi", "status"});
        const Rational r0 = rat(cfg, "admissible", "r_min"), r1 = rat(cfg, "admissible", "r_max");
        const int n = get<int>(cfg, "admissible.r_count");
        for (int i = 0; i < n; ++i) {
            const Rational r = n == 1 ? r0 : r0 + (r1 - r0) * i / (n - 1);
            try {
                const Interval iv = allowed_region(r);
                w.row({fmt(to_double(r)), fmt(to_double(iv.lo)), fmt(to_double(iv.hi)), "ok"});
            } catch (const DomainError&) {
                w.row({fmt(to_double(r)), "", "", "degenerate"});
            }
        }
    }
    write_manifest(cfg, "admissible", {{"table", path.string()}, {"regions", rpath.string()}, {"rows", entries.size()}});
    std::cout << "wrote " << path.string() << " (" << entries.size() << " rows) and " << rpath.string() << "\n";
    return 0;
}

int cmd_coefficients(const json& cfg, bool engine) {
    const LatticeModel m = build_model(cfg);
    const ReducedEquation r = build_reduced(m, cfg, engine);
    json rep = reduced_json(r);
    rep["source"] = engine ? "engine" : "closed";
    if (!engine && m.kind() != ModelKind::nikdv) rep["variant"] = get<std::string>(cfg, "variant");
    if (m.kind() != ModelKind::nikdv) {
        json div = json::array();
        for (auto N : build_Ns(cfg))
            div.push_back({{"N", N}, {"M1_divides", N % r.scales.M1 == 0},
                           {"M2_divides", r.scales.M2 != 0 && N % r.scales.M2 == 0}});
        rep["divisibility"] = div;
    }
    write_manifest(cfg, "coefficients", rep);
    std::cout << rep.dump(2) << "\n";
    return 0;
}

int cmd_derive(const json& cfg, bool verify) {
    const LatticeModel m = build_model(cfg);
    const ReducedEquation r = build_reduced(m, cfg, true);
    json rep = reduced_json(r);
    rep["source"] = "engine";
    if (get<bool>(cfg, "output.equations") && m.kind() != ModelKind::nikdv) {
        const Wavenumber w = build_wave(cfg);
        if (auto s = w.sin_exact()) {
            auto pr = probe_for<Rational>(m, Cx<Rational>(w.cos_k, *s), r.scales.M1, r.scales.M2);
            const auto eqs = EpsilonEngine<Rational>::expand(m, pr);
            const auto path = out_path(cfg, "equations.json");
            write_text(path.string(), equations_to_json<Rational>(EpsilonEngine<Rational>::substitute(eqs)).dump(1) + "\n");
            rep["equations_file"] = path.string();
        }
    }
    if (verify) {
        if (m.kind() == ModelKind::nikdv) throw DomainError("nikdv has no closed forms to verify against");
        const auto rv = verify_closed_forms(m, get<int>(cfg, "verify.samples"), get<std::uint64_t>(cfg, "verify.seed"));
        rep["verify"] = {{"samples", rv.points.size()}, {"compared", rv.compared}, {"max_deviation", rv.max_deviation},
                         {"worst", rv.worst}, {"seed", get<std::uint64_t>(cfg, "verify.seed")}};
        if (m.kind() == ModelKind::hietarinta) rep["verify"]["polynomials_match"] = hietarinta_polynomial_check(m).match;
        std::cerr << "max deviation " << rv.max_deviation << "\n";
    }
    write_manifest(cfg, "derive", rep);
    std::cout << rep.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const json& cfg) {
    const LatticeModel m = build_model(cfg);
    if (!m.is_quad()) throw DomainError("simulate is implemented for the quad models");
    const ReducedEquation red = build_reduced(m, cfg, false);
    const FarFieldConfig ff = build_far_field(cfg);
    const long long N = build_Ns(cfg).front();
    const int snaps = get<int>(cfg, "snapshots");
    if (snaps < 1) throw ConfigError("snapshots must be positive");
    SimCarrier c = make_sim_carrier(m, red, N);
    PacketSpec pk = ff.packet;
    pk.N = N;
    const long long rows = ff.slow_time * N * N;
    const double vg = c.M2 / c.M1;
    const long long half = (long long)(pk.support() * 22.0 / 19.5 * double(N) / std::abs(c.M1)) + 10;
    const std::size_t L = std::size_t(std::abs(vg) * double(rows) + 2.0 * double(half) + 20.0);
    const long long nc = vg < 0 ? (long long)L - half - 10 : half + 10;
    pk.center = std::round(c.slow_position(double(nc), 0));
    RunOptions ro;
    ro.m_steps = rows;
    std::vector<long long> at;
    for (int i = 0; i <= snaps; ++i) at.push_back(rows * i / snaps);
    if (!get<bool>(cfg, "output.grid")) ro.keep = at;
    const FieldGrid g = run_full(m, make_initial(m, c, pk, red, L), vg, ro);
    std::vector<EnvelopeHistory> hist;
    const auto phi0 = demodulate(g.row(0), 0, c, ff.demod);
    const ReducedCoefficients rc = ReducedCoefficients::from(red);
    json errors = json::array();
    for (long long mm : at) {
        auto d = demodulate(g.row(mm), mm, c, ff.demod);
        hist.push_back(d);
        if (mm > 0 && mm % (N * N) == 0) {
            auto r = run_reduced(rc, phi0, mm / (N * N));
            errors.push_back({{"m2", double(mm) / double(N * N)}, {"E", relative_sup_error(r, d)}});
            hist.push_back(std::move(r));
        }
    }
    const auto path = out_path(cfg, "envelope.csv");
    {
        std::ofstream f(path);
        write_envelope_csv(f, hist);
    }
    json results = {{"envelope", path.string()}, {"N", N}, {"rows", rows}, {"width", L},
                    {"max_residual", g.max_residual}, {"min_denominator", g.min_denominator}, {"errors", errors}};
    if (get<bool>(cfg, "output.grid")) {
        const auto gp = out_path(cfg, "grid.bin");
        std::ofstream f(gp, std::ios::binary);
        write_field_grid(f, g);
        results["grid"] = gp.string();
    }
    write_manifest(cfg, "simulate", results);
    std::cout << results.dump(2) << "\n";
    return 0;
}

int cmd_validate(const json& cfg) {
    const LatticeModel m = build_model(cfg);
    const ReducedEquation red = build_reduced(m, cfg, false);
    const FarFieldConfig ff = build_far_field(cfg);
    const FarFieldReport rep = validate_far_field(m, red, build_Ns(cfg), ff);
    const auto cpath = out_path(cfg, "convergence.csv"), epath = out_path(cfg, "validate_envelope.csv");
    {
        std::ofstream f(cpath);
        write_convergence_csv(f, rep);
    }
    {
        std::ofstream f(epath);
        std::vector<EnvelopeHistory> all;
        for (const auto& r : rep.runs) {
            for (auto h : {r.initial, r.measured, r.reduced, r.semicontinuous}) {
                if (h.phi.empty()) continue;
                h.source += "_N" + std::to_string(r.N);
                all.push_back(std::move(h));
            }
        }
        write_envelope_csv(f, all);
    }
    json runs = json::array();
    for (const auto& r : rep.runs)
        runs.push_back({{"N", r.N}, {"E", r.error}, {"E_semicontinuous", r.error_semicontinuous},
                        {"second_harmonic_error", r.second_harmonic_error}, {"max_residual", r.max_residual}});
    json results = {{"convergence", cpath.string()}, {"envelopes", epath.string()}, {"runs", runs}, {"ratios", rep.ratios}};
    if (rep.control_error) results["control_E"] = *rep.control_error;
    write_manifest(cfg, "validate", results);
    std::cout << results.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete NLS reductions of lattice equations"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_file;
    std::vector<std::string> sets;
    app.add_option("-c,--config", config_file, "JSON config file (a manifest also works)");
    app.add_option("--set", sets, "Override a config key: path.to.key=value");

    struct Flag {
        std::string name, path;
        std::string value;
    };
    std::vector<Flag> flags = {{"--model", "model.kind"}, {"--p", "model.p"},           {"--q", "model.q"},
                               {"--e1", "model.e1"},      {"--e2", "model.e2"},         {"--o1", "model.o1"},
                               {"--o2", "model.o2"},      {"--alpha", "model.alpha"},   {"--beta", "model.beta"},
                               {"--cos-k", "carrier.cos_k"}, {"--sin-sign", "carrier.sin_sign"},
                               {"--M2", "carrier.M2"},    {"--branch", "carrier.branch"}, {"--k", "carrier.k"},
                               {"--variant", "variant"},  {"--slow-time", "slow_time"}, {"--amplitude", "packet.amplitude"},
                               {"--width", "packet.width"}, {"--profile", "packet.profile"}, {"--seed", "verify.seed"},
                               {"--samples", "verify.samples"}, {"--out", "output.dir"}, {"--prefix", "output.prefix"}};
    std::vector<long long> Ns;
    app.add_option("--N", Ns, "Lattice refinement N = 1/eps (repeatable)");
    for (auto& f : flags) app.add_option(f.name, f.value, "Sets " + f.path);

    auto* dispersion = app.add_subcommand("dispersion", "Dispersion table over a k grid");
    auto* admissible = app.add_subcommand("admissible", "Admissible carriers and allowed regions");
    auto* coefficients = app.add_subcommand("coefficients", "Reduced-equation coefficients from the closed forms");
    bool use_engine = false;
    coefficients->add_flag("--engine", use_engine, "Use the expansion engine instead");
    auto* derive = app.add_subcommand("derive", "Expansion-engine derivation");
    bool verify = false;
    derive->add_flag("--verify", verify, "Cross-check the closed forms at random admissible points");
    auto* simulate = app.add_subcommand("simulate", "Full lattice run with demodulated envelopes");
    auto* validate = app.add_subcommand("validate", "Far-field convergence experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        json cfg = defaults();
        if (!config_file.empty()) {
            std::ifstream f(config_file);
            if (!f) throw ConfigError("cannot read config '" + config_file + "'");
            json user;
            try {
                user = json::parse(f);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            for (const char* k : {"schema", "command", "results"}) user.erase(k);
            cfg.merge_patch(user);
        }
        for (const auto& f : flags)
            if (app.count(f.name)) set_path(cfg, f.path, parse_value(f.value));
        for (const auto& name : {"model.p", "model.q", "model.e1", "model.e2", "model.o1", "model.o2", "model.alpha",
                                 "model.beta", "carrier.cos_k"}) {
            // rationals given on the command line stay exact
            for (const auto& f : flags)
                if (f.path == name && app.count(f.name)) set_path(cfg, f.path, f.value);
        }
        if (!Ns.empty()) cfg["N"] = Ns;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            set_path(cfg, s.substr(0, eq), parse_value(s.substr(eq + 1)));
        }

        if (*dispersion) return cmd_dispersion(cfg);
        if (*admissible) return cmd_admissible(cfg);
        if (*coefficients) return cmd_coefficients(cfg, use_engine);
        if (*derive) return cmd_derive(cfg, verify);
        if (*simulate) return cmd_simulate(cfg);
        if (*validate) return cmd_validate(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return int(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
