// matmi: run, verify, synthesize and sweep reconstruction experiments.
#include "matmi/config.hpp"
#include "matmi/errors.hpp"
#include "matmi/experiment.hpp"
#include "matmi/functional.hpp"
#include "matmi/stability.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace matmi;

namespace {

enum Exit { ok = 0, solver_failure = 1, config_failure = 2 };

struct CommonOptions {
    std::string preset;
    std::string config;
    std::string out;
    int n = 0;
    int iterations = 0;
    int refine = 0;
    bool dump_fields = false;
    long long seed = -1;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--preset", o.preset, "example1 .. example6");
    cmd->add_option("--config", o.config, "key = value config file");
    cmd->add_option("--out", o.out, "artifact directory (default $MATMI_OUT_DIR/<name> or ./matmi_out/<name>)");
    cmd->add_option("--n", o.n, "mesh resolution")->check(CLI::PositiveNumber);
    cmd->add_option("--iterations", o.iterations, "reconstruction iterations")->check(CLI::PositiveNumber);
    cmd->add_option("--refine", o.refine, "data synthesis refinement factor")->check(CLI::PositiveNumber);
    cmd->add_flag("--dump-fields", o.dump_fields, "write a VTK file for every iterate");
    cmd->add_option("--seed", o.seed, "seed for random perturbations")->check(CLI::NonNegativeNumber);
    cmd->add_option("overrides", o.overrides, "key=value overrides");
}

RunSettings settings_from(const CommonOptions& o) {
    RunSettings s = o.config.empty() ? RunSettings{} : load_settings(o.config);
    if (!o.preset.empty()) apply_setting(s, "preset", o.preset);
    if (o.n > 0) s.n = o.n;
    if (o.iterations > 0) s.iterations = o.iterations;
    if (o.refine > 0) s.refine = o.refine;
    if (o.dump_fields) s.dump_fields = true;
    if (o.seed >= 0) s.seed = static_cast<std::uint64_t>(o.seed);
    for (const auto& token : o.overrides) {
        const auto [key, value] = parse_override(token);
        apply_setting(s, key, value);
    }
    return s;
}

fs::path output_dir(const CommonOptions& o, const RunSettings& s) {
    if (!o.out.empty()) return fs::path(o.out);
    return default_output_root() / (s.preset ? *s.preset : std::string("custom"));
}

int cmd_run(const CommonOptions& o) {
    const RunSettings settings = settings_from(o);
    const fs::path dir = output_dir(o, settings);
    const RunOutcome outcome = run_experiment(settings, dir);
    const ReconTrace& t = outcome.trace;
    std::cout << outcome.run.name << ": scheme " << t.scheme << ", " << t.records.size() << " iterations, "
              << std::fixed << std::setprecision(2) << outcome.seconds << " s\n"
              << std::scientific << std::setprecision(4);
    std::cout << "  initial error " << t.initial_error << ", residual " << t.initial_residual << '\n';
    for (const auto& r : t.records) {
        std::cout << "  k=" << std::setw(2) << r.iteration << "  error " << r.error_l2 << "  residual " << r.residual
                  << "  ratio " << r.ratio;
        if (r.picard_steps > 0) std::cout << "  picard " << r.picard_steps << (r.picard_converged ? "" : " (cap)");
        std::cout << '\n';
    }
    std::cout << "artifacts in " << dir.string() << '\n';
    return ok;
}

int cmd_verify(const CommonOptions& o, const std::string& data) {
    RunSettings settings = settings_from(o);
    if (!data.empty()) settings.data = data;
    const fs::path dir = output_dir(o, settings) / "verify";
    const VerifySummary summary = verify_preset(settings, dir);
    print_summary(summary, std::cout);
    return summary.pass() ? ok : solver_failure;
}

int cmd_synthesize(const CommonOptions& o) {
    const RunSettings settings = settings_from(o);
    const ResolvedRun run = resolve(settings);
    const FunctionalData data =
        synthesize(*run.config.family, run.config.mesh, run.config.gamma_star, run.config.refine, run.config.neumann);
    fs::path path = o.out.empty() ? default_output_root() / (run.name + "_data.bin") : fs::path(o.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_functional(data, path.string());
    fs::path csv = path;
    csv.replace_extension(".csv");
    write_functional_csv(data, csv.string());
    std::cout << "wrote " << path.string() << " and " << csv.string() << '\n';
    return ok;
}

struct SweepOptions {
    std::string family = "D1";
    std::string base = "example1";
    std::vector<int> resolutions{32};
    int count = 20;
    double amplitude = 0.1;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_sweep(const SweepOptions& o) {
    const ExperimentPreset& base_preset = find_preset(o.base);
    const fs::path dir = o.out.empty() ? default_output_root() / ("sweep_" + o.family) : fs::path(o.out);
    fs::create_directories(dir);
    for (int n : o.resolutions) {
        const MeshPtr mesh = preset_mesh(base_preset, n);
        const auto [lo, hi] = default_t_range(base_preset, *mesh);
        AnisotropyFamily family = [&] {
            try {
                return builtin(o.family).with_range(lo, hi);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }();
        const NodalField base = interpolate(mesh, base_preset.gamma_star);
        const auto deltas = smooth_perturbations(mesh, o.count, o.amplitude, o.seed);

        const StabilityReport report = stability_sweep(family, base, deltas);
        std::vector<std::pair<NodalField, NodalField>> pairs;
        for (const auto& d : deltas) pairs.emplace_back(base, NodalField(mesh, base.values + d.values));
        const FieldDifferenceReport fields = field_difference_sweep(family, pairs);

        const std::string suffix = "_n" + std::to_string(n) + ".csv";
        write_stability_csv(report, (dir / ("stability" + suffix)).string());
        write_field_difference_csv(fields, (dir / ("field_difference" + suffix)).string());
        std::cout << o.family << " n=" << n << ": C_emp mean " << report.mean_ratio() << ", max "
                  << report.max_ratio() << "; field ratio max " << fields.max_ratio() << '\n';
        for (const auto& line : report.log) std::cout << "  " << line << '\n';
    }
    std::cout << "reports in " << dir.string() << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conductivity reconstruction from internal functionals"};
    app.require_subcommand(1);

    CommonOptions run_opts, verify_opts, synth_opts;
    std::string verify_data;
    SweepOptions sweep_opts;

    add_common(app.add_subcommand("run", "run a preset or config"), run_opts);
    auto* verify = app.add_subcommand("verify", "run a preset and check the acceptance thresholds");
    add_common(verify, verify_opts);
    verify->add_option("--data", verify_data, "measured functional (binary container)");
    add_common(app.add_subcommand("synthesize", "write the internal functional of gamma*"), synth_opts);

    auto* sweep = app.add_subcommand("sweep", "stability and field-difference sweeps");
    sweep->add_option("--family", sweep_opts.family, "anisotropy family");
    sweep->add_option("--preset", sweep_opts.base, "preset whose gamma* is the base field");
    sweep->add_option("--n", sweep_opts.resolutions, "mesh resolutions")->delimiter(',');
    sweep->add_option("--count", sweep_opts.count, "number of perturbations")->check(CLI::PositiveNumber);
    sweep->add_option("--amplitude", sweep_opts.amplitude, "max |delta|");
    sweep->add_option("--seed", sweep_opts.seed, "perturbation seed");
    sweep->add_option("--out", sweep_opts.out, "report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_failure;
    }

    try {
        if (app.got_subcommand("run")) return cmd_run(run_opts);
        if (app.got_subcommand("verify")) return cmd_verify(verify_opts, verify_data);
        if (app.got_subcommand("synthesize")) return cmd_synthesize(synth_opts);
        return cmd_sweep(sweep_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_failure;
    } catch (const ReconstructionError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return solver_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return solver_failure;
    }
}
