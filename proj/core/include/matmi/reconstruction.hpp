#pragma once

#include "matmi/anisotropy.hpp"
#include "matmi/fields.hpp"
#include "matmi/functional.hpp"
#include "matmi/neumann.hpp"
#include "matmi/transport.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace matmi {

/// Box-and-boundary part of the admissible set around a background gamma0. The gradient and norm
/// bounds are diagnostics: they are measured on every iterate, never enforced.
struct AdmissibleSet {
    NodalField gamma0;
    double lower = 0.5;
    double upper = 2.0;
    double grad_const = std::numeric_limits<double>::infinity();
    double norm_bound = std::numeric_limits<double>::infinity();

    /// Box [1/lambda, lambda]; lambda >= 1.
    static AdmissibleSet from_lambda(NodalField gamma0, double lambda);
    void validate() const;
};

/// Vertex-wise clamp into [lower, upper], then boundary vertices reset to `boundary_values`.
NodalField project(const NodalField& gamma_half, const AdmissibleSet& set, const NodalField& boundary_values);

/// ||grad(gamma - gamma0)|| / ||gamma - gamma0|| (0 when gamma == gamma0).
double gradient_condition(const NodalField& gamma, const NodalField& gamma0);

/// Sampled max over cells of |div[(dA/dt(x, t) - I) E x B0]| with t frozen at gamma(x_K), the
/// quantity the contraction theorems require to be small.
double smallness_indicator(const AnisotropyFamily& family, const NodalField& gamma, const ElectricField& field);

enum class TransportScheme { Auto, DG0, PicardP1 };

struct ReconConfig {
    std::optional<AnisotropyFamily> family;   // with its admissible range
    MeshPtr mesh;
    ScalarFunction gamma_star;                // closed form, when known
    std::optional<FunctionalData> data;       // measured data; synthesized from gamma_star otherwise
    NodalField boundary_trace;                // defaults to the interpolant of gamma_star
    int iterations = 10;
    int refine = 1;
    TransportScheme scheme = TransportScheme::Auto;
    AdmissibleSet admissible;
    double tol_inflow = 1e-12;
    bool corrected_stabilisation = true;
    /// gamma_{k+1} = P(gamma_k + relaxation (gamma_{k+1/2} - gamma_k)); 1 is the plain update.
    double relaxation = 1.0;
    PicardOptions picard;
    NeumannOptions neumann;
    /// Called with (k, gamma_k) for every iterate including the initial one.
    std::function<void(int, const NodalField&)> on_iterate;
};

/// Norms of one Neumann solve, kept to check ||grad u|| <= Lambda ||E~||.
struct EnergyRecord {
    double grad_u_norm = 0.0;
    double etilde_norm = 0.0;
};

struct IterationRecord {
    int iteration = 0;          // k: the step that produced gamma_{k+1}
    double error_l2 = 0.0;      // ||gamma_{k+1} - I_h gamma*||  (NaN without gamma*)
    double residual = 0.0;      // ||F(gamma_{k+1}) - F*|| on nodal projections
    double ratio = 0.0;         // e_{k+1} / e_k
    double seconds = 0.0;
    int inflow_facets = 0;
    int picard_steps = 0;
    bool picard_converged = true;
    double smallness = 0.0;     // smallness_indicator at gamma_k
    double grad_condition = 0.0;
    double norm_alpha = 0.0;    // ||gamma_{k+1} - gamma0||
    bool in_admissible_set = true;
};

struct ReconTrace {
    std::vector<NodalField> iterates;  // gamma_1 .. gamma_{K+1}
    std::vector<IterationRecord> records;
    std::vector<EnergyRecord> energy;
    double initial_error = 0.0;
    double initial_residual = 0.0;
    double lambda_est = 0.0;           // sampled ellipticity bound of the family over its range
    std::string scheme;
    std::vector<int> final_inflow;     // inflow facets of the last transport step
    std::vector<std::vector<double>> picard_history;  // per step: relative change per outer iteration

    std::vector<double> errors() const;  // e_1 .. e_{K+1}
    const NodalField& final_iterate() const { return iterates.back(); }
};

/// A sub-solver failed; the partial trace is attached.
class ReconstructionError : public std::runtime_error {
public:
    ReconstructionError(const std::string& what, ReconTrace trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const ReconTrace& trace() const noexcept { return trace_; }

private:
    ReconTrace trace_;
};

/// Fixed-point loop: field solve, inflow classification, transport, projection.
ReconTrace reconstruct(const ReconConfig& config);

/// trace.csv: iteration,error_L2,residual,ratio (deterministic, no timings).
void write_trace_csv(const ReconTrace& trace, const std::string& path);
/// timing.csv: iteration,seconds.
void write_timing_csv(const ReconTrace& trace, const std::string& path);
/// picard.csv: iteration,outer,change (empty body for DG0 runs).
void write_picard_csv(const ReconTrace& trace, const std::string& path);

}  // namespace matmi
