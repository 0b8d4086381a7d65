#include "matmi/config.hpp"

#include "matmi/errors.hpp"
#include "matmi/functional.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace matmi {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("config key '" + key + "': cannot read '" + value + "' as " + expected);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        if (value == "inf") return std::numeric_limits<double>::infinity();
        bad_value(key, value, "a number");
    }
    return out;
}

long long to_integer(const std::string& key, const std::string& value) {
    long long out = 0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) bad_value(key, value, "an integer");
    return out;
}

int to_positive(const std::string& key, const std::string& value) {
    const long long v = to_integer(key, value);
    if (v < 1 || v > 1'000'000) bad_value(key, value, "a positive integer");
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value, "a boolean");
}

std::string scheme_name(TransportScheme s) {
    switch (s) {
        case TransportScheme::DG0: return "dg0";
        case TransportScheme::PicardP1: return "picard";
        default: return "auto";
    }
}

std::string number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

const std::vector<std::string>& setting_keys() {
    static const std::vector<std::string> keys{
        "preset",       "family",         "dim",           "n",                "iterations",     "solver",
        "refine",       "lambda",         "lower",         "upper",            "grad_const",     "norm_bound",
        "gamma0",       "gamma_star",     "data",          "tol_inflow",       "relaxation",     "stabilisation",
        "neumann.tol",  "picard.max_outer", "picard.rel_tol", "picard.damping", "picard.accept_last", "seed",
        "dump_fields"};
    return keys;
}

void apply_setting(RunSettings& s, const std::string& key, const std::string& value) {
    if (key == "preset") {
        find_preset(value);
        s.preset = value;
    } else if (key == "family") {
        s.family = value;
    } else if (key == "dim") {
        const int d = to_positive(key, value);
        if (d != 2 && d != 3) bad_value(key, value, "2 or 3");
        s.dim = d;
    } else if (key == "n") {
        s.n = to_positive(key, value);
    } else if (key == "iterations") {
        s.iterations = to_positive(key, value);
    } else if (key == "solver") {
        if (value == "auto") s.solver = TransportScheme::Auto;
        else if (value == "dg0") s.solver = TransportScheme::DG0;
        else if (value == "picard") s.solver = TransportScheme::PicardP1;
        else bad_value(key, value, "auto, dg0 or picard");
    } else if (key == "refine") {
        s.refine = to_positive(key, value);
    } else if (key == "lambda") {
        const double l = to_double(key, value);
        if (!(l >= 1.0) || std::isinf(l)) bad_value(key, value, "a finite number >= 1");
        s.lambda = l;
    } else if (key == "lower") {
        s.lower = to_double(key, value);
    } else if (key == "upper") {
        s.upper = to_double(key, value);
    } else if (key == "grad_const") {
        s.grad_const = to_double(key, value);
    } else if (key == "norm_bound") {
        s.norm_bound = to_double(key, value);
    } else if (key == "gamma0") {
        s.gamma0 = to_double(key, value);
    } else if (key == "gamma_star") {
        s.gamma_star = value;
    } else if (key == "data") {
        s.data = value;
    } else if (key == "tol_inflow") {
        s.tol_inflow = to_double(key, value);
    } else if (key == "relaxation") {
        const double r = to_double(key, value);
        if (!(r > 0.0 && r <= 1.0)) bad_value(key, value, "a number in (0, 1]");
        s.relaxation = r;
    } else if (key == "stabilisation") {
        if (value == "corrected") s.corrected_stabilisation = true;
        else if (value == "plain") s.corrected_stabilisation = false;
        else bad_value(key, value, "corrected or plain");
    } else if (key == "neumann.tol") {
        s.neumann_tol = to_double(key, value);
    } else if (key == "picard.max_outer") {
        s.picard_max_outer = to_positive(key, value);
    } else if (key == "picard.rel_tol") {
        const double t = to_double(key, value);
        if (!(t > 0.0 && t < 1.0)) bad_value(key, value, "a number in (0, 1)");
        s.picard_rel_tol = t;
    } else if (key == "picard.damping") {
        const double d = to_double(key, value);
        if (!(d > 0.0 && d <= 1.0)) bad_value(key, value, "a number in (0, 1]");
        s.picard_damping = d;
    } else if (key == "picard.accept_last") {
        s.picard_accept_last = to_bool(key, value);
    } else if (key == "seed") {
        const long long v = to_integer(key, value);
        if (v < 0) bad_value(key, value, "a non-negative integer");
        s.seed = static_cast<std::uint64_t>(v);
    } else if (key == "dump_fields") {
        s.dump_fields = to_bool(key, value);
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(number) + ": empty key or value");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

std::pair<std::string, std::string> parse_override(const std::string& token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + token + "' is not key=value");
    std::string key = trim(token.substr(0, eq)), value = trim(token.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("override '" + token + "' has an empty key or value");
    return {std::move(key), std::move(value)};
}

RunSettings settings_from_text(const std::string& text) {
    RunSettings s;
    for (const auto& [key, value] : parse_key_values(text)) apply_setting(s, key, value);
    return s;
}

RunSettings load_settings(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return settings_from_text(buffer.str());
}

ResolvedRun resolve(const RunSettings& s) {
    ResolvedRun run;
    if (s.preset) run.preset = &find_preset(*s.preset);
    const ExperimentPreset* p = run.preset;
    run.name = p ? p->name : "custom";

    const std::string family_name = s.family ? *s.family : p ? p->family : std::string{};
    if (family_name.empty()) throw ConfigError("config: no family (set 'family' or 'preset')");
    AnisotropyFamily family = [&] {
        try {
            return builtin(family_name);
        } catch (const std::invalid_argument&) {
            throw ConfigError("config key 'family': unknown family " + family_name);
        }
    }();

    const int dim = s.dim ? *s.dim : p ? p->dim : 2;
    const int n = s.n ? *s.n : p ? p->n : 32;
    auto& cfg = run.config;
    cfg.mesh = dim == 3 ? make_unit_cube(n) : make_unit_square(n);

    if (s.gamma_star) {
        const std::string& g = *s.gamma_star;
        if (g.rfind("example", 0) == 0) {
            cfg.gamma_star = find_preset(g).gamma_star;
        } else {
            const double c = to_double("gamma_star", g);
            cfg.gamma_star = [c](const Vec3&) { return c; };
        }
    } else if (p) {
        cfg.gamma_star = p->gamma_star;
    }
    if (!cfg.gamma_star)
        throw ConfigError("config: 'gamma_star' is needed for the boundary trace (preset name or number)");

    double lo = 0.0, hi = 0.0;
    if (s.lower || s.upper) {
        if (!s.lower || !s.upper) throw ConfigError("config: 'lower' and 'upper' must be given together");
        lo = *s.lower;
        hi = *s.upper;
    } else if (s.lambda) {
        lo = 1.0 / *s.lambda;
        hi = *s.lambda;
    } else {
        std::tie(lo, hi) = default_t_range(cfg.gamma_star, *cfg.mesh);
    }
    if (!(lo > 0.0 && lo <= hi)) throw ConfigError("config: admissible box needs 0 < lower <= upper");

    cfg.family = family.with_range(lo, hi);
    cfg.admissible.gamma0 = NodalField::constant(cfg.mesh, s.gamma0);
    cfg.admissible.lower = lo;
    cfg.admissible.upper = hi;
    cfg.admissible.grad_const = s.grad_const;
    cfg.admissible.norm_bound = s.norm_bound;
    try {
        cfg.admissible.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (s.data) cfg.data = read_functional(*s.data, cfg.mesh);
    cfg.iterations = s.iterations ? *s.iterations : p ? p->iterations : 10;
    cfg.refine = s.refine;
    cfg.scheme = s.solver ? *s.solver : p ? p->scheme : TransportScheme::Auto;
    cfg.relaxation = s.relaxation ? *s.relaxation : p ? p->relaxation : 1.0;
    cfg.corrected_stabilisation = s.corrected_stabilisation;
    cfg.tol_inflow = s.tol_inflow;
    cfg.picard = p ? p->picard : PicardOptions{};
    if (s.picard_max_outer) cfg.picard.max_outer = *s.picard_max_outer;
    if (s.picard_rel_tol) cfg.picard.rel_tol = *s.picard_rel_tol;
    if (s.picard_damping) cfg.picard.damping = *s.picard_damping;
    if (s.picard_accept_last) cfg.picard.accept_last = *s.picard_accept_last;
    cfg.neumann.tol = s.neumann_tol;
    return run;
}

std::string snapshot(const RunSettings& s) {
    std::ostringstream os;
    auto put = [&](const std::string& key, const std::string& value) { os << key << " = " << value << '\n'; };
    if (s.preset) put("preset", *s.preset);
    if (s.family) put("family", *s.family);
    if (s.dim) put("dim", std::to_string(*s.dim));
    if (s.n) put("n", std::to_string(*s.n));
    if (s.iterations) put("iterations", std::to_string(*s.iterations));
    if (s.solver) put("solver", scheme_name(*s.solver));
    put("refine", std::to_string(s.refine));
    if (s.lambda) put("lambda", number(*s.lambda));
    if (s.lower) put("lower", number(*s.lower));
    if (s.upper) put("upper", number(*s.upper));
    put("grad_const", number(s.grad_const));
    put("norm_bound", number(s.norm_bound));
    put("gamma0", number(s.gamma0));
    if (s.gamma_star) put("gamma_star", *s.gamma_star);
    if (s.data) put("data", *s.data);
    put("tol_inflow", number(s.tol_inflow));
    if (s.relaxation) put("relaxation", number(*s.relaxation));
    put("stabilisation", s.corrected_stabilisation ? "corrected" : "plain");
    put("neumann.tol", number(s.neumann_tol));
    if (s.picard_max_outer) put("picard.max_outer", std::to_string(*s.picard_max_outer));
    if (s.picard_rel_tol) put("picard.rel_tol", number(*s.picard_rel_tol));
    if (s.picard_damping) put("picard.damping", number(*s.picard_damping));
    if (s.picard_accept_last) put("picard.accept_last", *s.picard_accept_last ? "true" : "false");
    put("seed", std::to_string(s.seed));
    put("dump_fields", s.dump_fields ? "true" : "false");
    return os.str();
}

}  // namespace matmi
