#pragma once

#include "matmi/presets.hpp"
#include "matmi/reconstruction.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace matmi {

/// Flat run description. Unset optionals fall back to the preset (when one is named) or to the
/// library defaults.
///
/// Keys:
///   preset, family, dim, n, iterations, solver (auto | dg0 | picard), refine, lambda, lower, upper,
///   grad_const, norm_bound, gamma0, gamma_star (preset name or number), data, tol_inflow,
///   relaxation, stabilisation (corrected | plain), neumann.tol, picard.max_outer, picard.rel_tol,
///   picard.damping, picard.accept_last, seed, dump_fields
struct RunSettings {
    std::optional<std::string> preset;
    std::optional<std::string> family;
    std::optional<int> dim;
    std::optional<int> n;
    std::optional<int> iterations;
    std::optional<TransportScheme> solver;
    int refine = 1;
    std::optional<double> lambda;
    std::optional<double> lower;
    std::optional<double> upper;
    double grad_const = std::numeric_limits<double>::infinity();
    double norm_bound = std::numeric_limits<double>::infinity();
    double gamma0 = 1.0;
    std::optional<std::string> gamma_star;
    std::optional<std::string> data;
    double tol_inflow = 1e-12;
    std::optional<double> relaxation;
    bool corrected_stabilisation = true;
    double neumann_tol = 1e-10;
    std::optional<int> picard_max_outer;
    std::optional<double> picard_rel_tol;
    std::optional<double> picard_damping;
    std::optional<bool> picard_accept_last;
    std::uint64_t seed = 0;
    bool dump_fields = false;
};

/// Every key understood by apply_setting, in snapshot order.
const std::vector<std::string>& setting_keys();

/// Throws ConfigError naming the key when it is unknown or its value is malformed.
void apply_setting(RunSettings& settings, const std::string& key, const std::string& value);

/// "key = value" lines; '#' starts a comment; blank lines are ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);
/// "key=value" override token.
std::pair<std::string, std::string> parse_override(const std::string& token);

RunSettings settings_from_text(const std::string& text);
RunSettings load_settings(const std::string& path);

/// A run ready to execute.
struct ResolvedRun {
    std::string name;                  // preset name or "custom"
    const ExperimentPreset* preset = nullptr;
    ReconConfig config;
};

/// Throws ConfigError for inconsistent or incomplete settings.
ResolvedRun resolve(const RunSettings& settings);

/// key = value text of the resolved settings; parsing it back reproduces the run.
std::string snapshot(const RunSettings& settings);

}  // namespace matmi
