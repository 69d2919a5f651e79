#include "config.hpp"

#include "sds/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sdslab {

using nlohmann::json;
using sds::InvalidArgument;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw InvalidArgument("cli", "config " + where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) bad(where, "must be an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) bad(where, "unknown key '" + it.key() + "'");
}

double number(const json& j, const std::string& where, const char* key, std::optional<double> dflt = {}) {
    if (!j.contains(key)) {
        if (dflt) return *dflt;
        bad(where, std::string("missing '") + key + "'");
    }
    if (!j[key].is_number()) bad(where, std::string("'") + key + "' must be a number");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) bad(where, std::string("'") + key + "' must be finite");
    return v;
}

double positive(const json& j, const std::string& where, const char* key, std::optional<double> dflt = {}) {
    const double v = number(j, where, key, dflt);
    if (!(v > 0.0)) bad(where, std::string("'") + key + "' must be positive");
    return v;
}

long integer(const json& j, const std::string& where, const char* key, long dflt, long lo, long hi) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
    const long v = j[key].get<long>();
    if (v < lo || v > hi) bad(where, std::string("'") + key + "' out of range");
    return v;
}

std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "must be a non-empty array of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) bad(where, "must be a non-empty array of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

void increasing(const std::vector<double>& v, const std::string& where) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) bad(where, "must be strictly increasing");
}

// Either an explicit list or {lo, hi, count} for geometric spacing.
std::vector<double> radius_list(const json& j, const std::string& where) {
    if (j.is_array()) {
        auto v = numbers(j, where);
        increasing(v, where);
        return v;
    }
    only_keys(j, where, {"lo", "hi", "count"});
    const double lo = positive(j, where, "lo"), hi = positive(j, where, "hi");
    const long n = integer(j, where, "count", 12, 2, 100000);
    if (!(hi > lo)) bad(where, "'hi' must exceed 'lo'");
    return sds::geometric_radii(lo, hi, static_cast<int>(n));
}

void validate_data_spec(const json& d, const std::string& where) {
    if (!d.is_object() || !d.contains("kind") || !d["kind"].is_string()) bad(where, "needs a string 'kind'");
    const std::string kind = d["kind"];
    if (kind == "zero") {
        only_keys(d, where, {"kind"});
    } else if (kind == "random") {
        only_keys(d, where, {"kind", "decay", "seed_offset"});
        number(d, where, "decay", 1.5);
        integer(d, where, "seed_offset", 0, 0, 1L << 40);
    } else if (kind == "constant") {
        only_keys(d, where, {"kind", "value"});
        number(d, where, "value");
    } else if (kind == "mode") {
        only_keys(d, where, {"kind", "k", "ell", "em", "re", "im"});
        integer(d, where, "k", 0, -100000, 100000);
        integer(d, where, "ell", 0, 0, 100000);
        integer(d, where, "em", 0, -100000, 100000);
        number(d, where, "re", 0.0);
        number(d, where, "im", 0.0);
    } else if (kind == "field") {
        only_keys(d, where, {"kind", "field"});
        if (!d.contains("field") || !d["field"].is_object()) bad(where, "'field' must be an object");
    } else if (kind == "file") {
        only_keys(d, where, {"kind", "path"});
        if (!d.contains("path") || !d["path"].is_string()) bad(where, "'path' must be a string");
    } else {
        bad(where, "unknown data kind '" + kind + "'");
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cli", "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("cli", path + ": " + e.what());
    }
}

std::string join(const std::string& base, const std::string& p) {
    if (p.empty() || p[0] == '/' || base.empty()) return p;
    return base + "/" + p;
}

}  // namespace

RunConfig parse_config(const json& j, const std::string& base_dir) {
    only_keys(j, "root",
              {"geometry", "band", "integrator", "radii", "seed", "data", "extraction", "energy", "roundtrip",
               "residual_scan", "perturbed"});
    RunConfig c;
    c.base_dir = base_dir;

    if (!j.contains("geometry")) bad("root", "missing 'geometry'");
    const json& g = j["geometry"];
    only_keys(g, "geometry", {"lambda", "mass"});
    // Sign errors are reported by the geometry module with its own error kinds.
    c.geometry = sds::build_geometry(number(g, "geometry", "lambda"), number(g, "geometry", "mass"));
    const double rc = c.geometry.r_c;

    if (j.contains("band")) {
        const json& b = j["band"];
        only_keys(b, "band", {"period", "max_k", "max_ell"});
        c.band.period = positive(b, "band", "period", c.band.period);
        c.band.max_k = static_cast<int>(integer(b, "band", "max_k", c.band.max_k, 0, 64));
        c.band.max_ell = static_cast<int>(integer(b, "band", "max_ell", c.band.max_ell, 0, 64));
    }

    if (j.contains("integrator")) {
        const json& in = j["integrator"];
        only_keys(in, "integrator", {"rel_tol", "abs_tol", "switch_radius", "variable", "max_steps"});
        c.integrator.rel_tol = positive(in, "integrator", "rel_tol", c.integrator.rel_tol);
        c.integrator.abs_tol = positive(in, "integrator", "abs_tol", c.integrator.abs_tol);
        const double sw = number(in, "integrator", "switch_radius", 0.0);
        if (sw != 0.0 && !(sw > 1.0)) bad("integrator", "'switch_radius' must be 0 or above 1 (units of r_c)");
        c.integrator.switch_radius = sw * rc;
        if (in.contains("variable")) {
            if (in["variable"] == "radius") c.integrator.variable = sds::Variable::radius;
            else if (in["variable"] == "inverse_radius") c.integrator.variable = sds::Variable::inverse_radius;
            else bad("integrator", "'variable' must be \"radius\" or \"inverse_radius\"");
        }
        c.integrator.max_steps = integer(in, "integrator", "max_steps", c.integrator.max_steps, 1, 1L << 40);
    }
    sds::validate(c.integrator);

    c.seed = static_cast<std::uint64_t>(integer(j, "root", "seed", 1, 0, 1L << 53));

    json radii = j.value("radii", json::object());
    only_keys(radii, "radii", {"r0", "schedule", "fit_radii", "samples"});
    c.r0 = positive(radii, "radii", "r0", 1.5) * rc;
    if (!(c.r0 > rc)) bad("radii", "'r0' must exceed 1 (units of r_c)");
    auto scaled = [&](std::vector<double> v) {
        for (double& x : v) x *= rc;
        return v;
    };
    c.schedule = scaled(radii.contains("schedule") ? radius_list(radii["schedule"], "radii.schedule")
                                                   : std::vector<double>{25.0, 50.0, 100.0, 200.0});
    c.fit_radii = scaled(radii.contains("fit_radii") ? radius_list(radii["fit_radii"], "radii.fit_radii")
                                                     : sds::geometric_radii(300.0, 1e4, 12));
    c.samples = scaled(radii.contains("samples") ? radius_list(radii["samples"], "radii.samples")
                                                 : sds::geometric_radii(2.0, 100.0, 23));
    if (c.schedule.front() <= c.r0) bad("radii.schedule", "every cutoff must exceed r0");
    if (c.fit_radii.front() <= c.r0) bad("radii.fit_radii", "every fit radius must exceed r0");
    if (c.samples.front() <= c.r0) bad("radii.samples", "every sample radius must exceed r0");

    c.data = j.value("data", json::object());
    only_keys(c.data, "data", {"psi0", "psi3", "u", "du"});
    for (const char* slot : {"psi0", "psi3", "u", "du"})
        if (c.data.contains(slot)) validate_data_spec(c.data[slot], std::string("data.") + slot);

    if (j.contains("extraction")) {
        const json& e = j["extraction"];
        only_keys(e, "extraction", {"nuisance_terms", "use_derivative", "max_condition", "spurious_threshold"});
        c.extraction.nuisance_terms = static_cast<int>(integer(e, "extraction", "nuisance_terms", 3, 0, 12));
        if (e.contains("use_derivative")) {
            if (!e["use_derivative"].is_boolean()) bad("extraction", "'use_derivative' must be a boolean");
            c.extraction.use_derivative = e["use_derivative"];
        }
        c.extraction.max_condition = positive(e, "extraction", "max_condition", c.extraction.max_condition);
        c.spurious_threshold = positive(e, "extraction", "spurious_threshold", c.spurious_threshold);
    }
    if (j.contains("energy")) {
        only_keys(j["energy"], "energy", {"higher_order_bound"});
        c.higher_order_bound = positive(j["energy"], "energy", "higher_order_bound", c.higher_order_bound);
    }
    if (j.contains("roundtrip")) {
        only_keys(j["roundtrip"], "roundtrip", {"tolerance"});
        c.roundtrip_tolerance = positive(j["roundtrip"], "roundtrip", "tolerance", c.roundtrip_tolerance);
    }
    c.scan_radii = scaled({20.0, 40.0, 80.0});
    if (j.contains("residual_scan")) {
        only_keys(j["residual_scan"], "residual_scan", {"radii"});
        if (j["residual_scan"].contains("radii"))
            c.scan_radii = scaled(radius_list(j["residual_scan"]["radii"], "residual_scan.radii"));
        if (c.scan_radii.size() < 2) bad("residual_scan.radii", "needs at least two radii");
        if (c.scan_radii.front() <= 1.0 * rc) bad("residual_scan.radii", "radii must exceed 1 (units of r_c)");
    }

    // Perturbed run: rho in units of 1/r_c for SdS-compatible defaults.
    json p = j.value("perturbed", json::object());
    only_keys(p, "perturbed", {"model", "rho0", "cutoffs", "rhos"});
    if (p.contains("model")) {
        const json& m = p["model"];
        if (m.is_object() && m.contains("path") && m.size() == 1) {
            if (!m["path"].is_string()) bad("perturbed.model", "'path' must be a string");
            c.model = read_json_file(join(base_dir, m["path"]));
        } else {
            c.model = m;
        }
    } else {
        c.model = {{"kind", "sds"}, {"lambda", c.geometry.lambda}, {"mass", c.geometry.mass}};
    }
    sds::model_from_json(c.model);
    c.rho0 = positive(p, "perturbed", "rho0", 1.0 / c.r0);
    c.cutoffs = p.contains("cutoffs") ? numbers(p["cutoffs"], "perturbed.cutoffs")
                                      : std::vector<double>{8.0 / c.schedule.back(), 4.0 / c.schedule.back(),
                                                            2.0 / c.schedule.back(), 1.0 / c.schedule.back()};
    for (std::size_t i = 0; i < c.cutoffs.size(); ++i) {
        if (!(c.cutoffs[i] > 0.0 && c.cutoffs[i] < c.rho0)) bad("perturbed.cutoffs", "cutoffs must lie in (0, rho0)");
        if (i > 0 && !(c.cutoffs[i] < c.cutoffs[i - 1])) bad("perturbed.cutoffs", "cutoffs must decrease");
    }
    c.rhos = p.contains("rhos") ? radius_list(p["rhos"], "perturbed.rhos") : sds::geometric_radii(1e-4, 0.1, 16);
    if (c.rhos.size() < 4 || c.rhos.back() > 0.1) bad("perturbed.rhos", "needs at least 4 samples, all <= 0.1");
    // Resolving every configured slot catches band and file errors before any compute.
    for (const char* slot : {"psi0", "psi3", "u", "du"})
        if (c.data.contains(slot)) resolve_data(c, slot);
    return c;
}

RunConfig load_config(const std::string& path) {
    const json j = read_json_file(path);
    const auto slash = path.find_last_of('/');
    return parse_config(j, slash == std::string::npos ? std::string() : path.substr(0, slash));
}

sds::CylinderField resolve_data(const RunConfig& cfg, const std::string& slot) {
    // Defaults: random data for psi0, psi3 and u; zero radial velocity.
    json spec = cfg.data.contains(slot) ? cfg.data[slot] : json{{"kind", slot == "du" ? "zero" : "random"}};
    const std::string kind = spec["kind"];
    const std::uint64_t slot_offset = slot == "psi0" ? 0 : slot == "psi3" ? 1 : slot == "u" ? 2 : 3;
    sds::CylinderField f(cfg.band, true);
    if (kind == "random") {
        const std::uint64_t off = spec.value("seed_offset", 0ULL);
        return sds::random_field(cfg.band, cfg.seed * 4 + slot_offset + off, spec.value("decay", 1.5), true);
    }
    if (kind == "constant") {
        f.at(0, 0, 0) = spec["value"].get<double>();
    } else if (kind == "mode") {
        const int k = spec.value("k", 0), ell = spec.value("ell", 0), em = spec.value("em", 0);
        if (!cfg.band.contains(k, ell, em)) throw sds::BandMismatch("cli", "data." + slot + ": mode outside the band");
        const sds::cplx v(spec.value("re", 0.0), spec.value("im", 0.0));
        const std::size_t i = cfg.band.index(k, ell, em);
        f[i] = v;
        const std::size_t j = f.partner(i);
        if (j == i) {
            f[i] = v.real();
        } else {
            f[j] = ((em % 2 == 0) ? 1.0 : -1.0) * std::conj(v);
        }
    } else if (kind == "field" || kind == "file") {
        const sds::CylinderField g = sds::field_from_json(
            kind == "field" ? spec["field"] : read_json_file(join(cfg.base_dir, spec["path"].get<std::string>())));
        if (!(g.band() == cfg.band)) throw sds::BandMismatch("cli", "data." + slot + ": field band differs from config band");
        f = g;
        f.set_real_flag(g.real_flag());
    }
    return f;
}

}  // namespace sdslab
