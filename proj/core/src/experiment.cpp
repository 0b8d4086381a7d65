#include "matmi/experiment.hpp"

#include "matmi/errors.hpp"
#include "matmi/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace matmi {

namespace fs = std::filesystem;

namespace {

constexpr int slice_samples = 64;

std::string slice_stem(double level) {
    std::ostringstream os;
    os << "slice_z" << std::fixed << std::setprecision(3) << level;
    return os.str();
}

void write_energy_csv(const ReconTrace& trace, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << "solve,grad_u_norm,etilde_norm,lambda_est\n" << std::setprecision(17);
    for (std::size_t i = 0; i < trace.energy.size(); ++i)
        os << i + 1 << ',' << trace.energy[i].grad_u_norm << ',' << trace.energy[i].etilde_norm << ','
           << trace.lambda_est << '\n';
}

void write_trace_files(const ReconTrace& trace, const fs::path& dir) {
    write_trace_csv(trace, (dir / "trace.csv").string());
    write_timing_csv(trace, (dir / "timing.csv").string());
    write_picard_csv(trace, (dir / "picard.csv").string());
    write_energy_csv(trace, dir / "energy.csv");
}

VerifyCheck make_check(std::string name, double value, std::string relation, double threshold, std::string note = {}) {
    VerifyCheck c;
    c.name = std::move(name);
    c.value = value;
    c.relation = std::move(relation);
    c.threshold = threshold;
    if (c.relation == "<=") c.pass = value <= threshold;
    else if (c.relation == "<") c.pass = value < threshold;
    else if (c.relation == ">=") c.pass = value >= threshold;
    else c.pass = value == threshold;
    c.note = std::move(note);
    return c;
}

}  // namespace

fs::path default_output_root() {
    if (const char* env = std::getenv("MATMI_OUT_DIR"); env && *env) return fs::path(env);
    return fs::path("matmi_out");
}

RunOutcome run_experiment(const RunSettings& settings, const fs::path& directory) {
    RunOutcome out;
    out.run = resolve(settings);
    out.directory = directory;
    fs::create_directories(directory);
    {
        std::ofstream os(directory / "config.txt");
        if (!os) throw std::runtime_error("cannot write " + (directory / "config.txt").string());
        os << snapshot(settings);
    }

    ReconConfig config = out.run.config;
    if (settings.dump_fields) {
        config.on_iterate = [&directory](int k, const NodalField& g) {
            write_vtk((directory / ("iterate_" + std::to_string(k) + ".vtk")).string(), *g.mesh, {{"gamma", &g}});
        };
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        out.trace = reconstruct(config);
    } catch (const ReconstructionError& e) {
        write_trace_files(e.trace(), directory);
        throw;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_trace_files(out.trace, directory);

    const NodalField& gamma = out.trace.final_iterate();
    const MeshPtr& mesh = gamma.mesh;
    const NodalField truth = interpolate(mesh, config.gamma_star);
    const NodalField error(mesh, gamma.values - truth.values);
    write_vtk((directory / "final.vtk").string(), *mesh, {{"gamma", &gamma}, {"gamma_star", &truth}, {"error", &error}});

    if (mesh->dim() == 3) {
        for (double z : slice_levels()) {
            const ZSlice slice = sample_z_slice(gamma, z, slice_samples);
            write_slice_vtk(slice, "gamma", (directory / (slice_stem(z) + ".vtk")).string());
            write_slice_csv(slice, (directory / (slice_stem(z) + ".csv")).string());
        }
    }
    return out;
}

bool VerifySummary::pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

VerifySummary verify_preset(const RunSettings& input, const fs::path& directory) {
    VerifySummary summary;
    RunSettings settings = input;
    if (!settings.preset) throw ConfigError("verify: a preset is required");
    const ExperimentPreset& preset = find_preset(*settings.preset);
    summary.preset = preset.name;
    if (!settings.n) settings.n = preset.verify_n;
    summary.resolution = *settings.n;

    RunOutcome outcome;
    try {
        outcome = run_experiment(settings, directory);
    } catch (const IntegrityError& e) {
        summary.checks.push_back(make_check("data_integrity", 0.0, "==", 1.0, e.what()));
        return summary;
    } catch (const ReconstructionError& e) {
        summary.checks.push_back(make_check("solver", 0.0, "==", 1.0, e.what()));
        summary.trace = e.trace();
        return summary;
    }
    const ReconTrace& trace = outcome.trace;
    const ReconConfig& config = outcome.run.config;
    summary.trace = trace;

    if (preset.dim == 2) {
        const double rel = trace.records.back().error_l2 / trace.initial_error;
        summary.checks.push_back(make_check("final_relative_error", rel, "<=", 0.1));
    }

    const ContractionReport contraction = contraction_report(trace);
    summary.checks.push_back(make_check("contraction_geometric_mean", contraction.geometric_mean, "<", 1.0,
                                        contraction.contractive ? "contractive" : "not contractive"));

    if (preset.dim == 2) summary.checks.push_back(make_check("runtime_seconds", outcome.seconds, "<=", 300.0));

    summary.checks.push_back(
        make_check("final_residual_over_initial", trace.records.back().residual / trace.initial_residual, "<=", 1.0));

    double worst_energy = 0.0;
    for (const auto& e : trace.energy) worst_energy = std::max(worst_energy, e.grad_u_norm / e.etilde_norm);
    summary.checks.push_back(make_check("energy_ratio_vs_lambda", worst_energy, "<=", trace.lambda_est,
                                        "max ||grad u|| / ||E~|| over all solves"));

    double box_violation = 0.0, boundary_gap = 0.0;
    const NodalField truth = interpolate(config.mesh, config.gamma_star);
    for (const auto& g : trace.iterates) {
        box_violation = std::max({box_violation, config.admissible.lower - g.values.minCoeff(),
                                  g.values.maxCoeff() - config.admissible.upper});
        for (int v : config.mesh->boundary_vertices()) boundary_gap = std::max(boundary_gap, std::abs(g[v] - truth[v]));
    }
    summary.checks.push_back(make_check("box_violation", box_violation, "<=", 0.0));
    summary.checks.push_back(make_check("boundary_trace_gap", boundary_gap, "==", 0.0));

    if (preset.dim == 3) {
        const auto centroid = superlevel_centroid(trace.final_iterate(), 1.5);
        const double dist = centroid ? (*centroid - Vec3(0.5, 0.5, 0.5)).norm() : std::numeric_limits<double>::infinity();
        summary.checks.push_back(make_check("level_1.5_centroid_distance", dist, "<=", 0.1));
        int slices = 0;
        for (double z : slice_levels())
            if (fs::exists(directory / (slice_stem(z) + ".vtk")) && fs::exists(directory / (slice_stem(z) + ".csv")))
                ++slices;
        summary.checks.push_back(make_check("slices_exported", slices, "==", static_cast<double>(slice_levels().size())));
    }
    return summary;
}

void print_summary(const VerifySummary& summary, std::ostream& os) {
    os << "verify " << summary.preset << " (n=" << summary.resolution << ")\n";
    for (const auto& c : summary.checks) {
        os << "  " << (c.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(30) << c.name << std::right
           << std::setw(14) << std::setprecision(6) << c.value << ' ' << c.relation << ' ' << c.threshold;
        if (!c.note.empty()) os << "  (" << c.note << ')';
        os << '\n';
    }
    os << (summary.pass() ? "verify: PASS\n" : "verify: FAIL\n");
}

}  // namespace matmi
