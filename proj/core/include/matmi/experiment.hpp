#pragma once

#include "matmi/config.hpp"
#include "matmi/reconstruction.hpp"
#include "matmi/stability.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace matmi {

struct RunOutcome {
    ResolvedRun run;
    ReconTrace trace;
    double seconds = 0.0;
    std::filesystem::path directory;
};

/// Resolve, reconstruct and write the artifacts into `directory`:
///   config.txt, trace.csv, timing.csv, picard.csv, energy.csv, final.vtk,
///   iterate_<k>.vtk (dump_fields), slice_z<level>.{vtk,csv} for 3D runs.
/// ConfigError and ReconstructionError propagate; the partial trace is written before rethrowing.
RunOutcome run_experiment(const RunSettings& settings, const std::filesystem::path& directory);

/// Default artifact root: $MATMI_OUT_DIR when set, ./matmi_out otherwise.
std::filesystem::path default_output_root();

struct VerifyCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation;  // "<=", ">=", "=="
    bool pass = false;
    std::string note;
};

struct VerifySummary {
    std::string preset;
    int resolution = 0;
    std::vector<VerifyCheck> checks;
    std::optional<ReconTrace> trace;
    bool pass() const;
};

/// Run a preset at its verification resolution and check the acceptance thresholds:
/// final relative error <= 0.1 (2D presets), contraction verdict, runtime <= 300 s, final residual
/// <= initial residual, energy bound, box and boundary invariants; for the 3D preset the 1.5
/// superlevel centroid and the slice export. `settings` may carry overrides and a data file.
/// Never throws for solver or integrity failures: they become failed checks.
VerifySummary verify_preset(const RunSettings& settings, const std::filesystem::path& directory);

void print_summary(const VerifySummary& summary, std::ostream& os);

}  // namespace matmi
