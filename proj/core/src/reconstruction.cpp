#include "matmi/reconstruction.hpp"

#include "matmi/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace matmi {

AdmissibleSet AdmissibleSet::from_lambda(NodalField gamma0, double lambda) {
    if (!(lambda >= 1.0)) throw std::invalid_argument("AdmissibleSet: lambda must be >= 1");
    AdmissibleSet set;
    set.gamma0 = std::move(gamma0);
    set.lower = 1.0 / lambda;
    set.upper = lambda;
    set.validate();
    return set;
}

void AdmissibleSet::validate() const {
    if (!(lower > 0.0 && lower <= upper)) throw std::invalid_argument("AdmissibleSet: need 0 < lower <= upper");
    if (gamma0.mesh) {
        const double lo = gamma0.values.minCoeff(), hi = gamma0.values.maxCoeff();
        if (lo < lower || hi > upper) throw std::invalid_argument("AdmissibleSet: gamma0 outside the box");
    }
}

NodalField project(const NodalField& gamma_half, const AdmissibleSet& set, const NodalField& boundary_values) {
    NodalField out = gamma_half;
    out.values = out.values.cwiseMax(set.lower).cwiseMin(set.upper);
    for (int v : gamma_half.mesh->boundary_vertices()) out.values[v] = boundary_values[v];
    return out;
}

double gradient_condition(const NodalField& gamma, const NodalField& gamma0) {
    const NodalField alpha(gamma.mesh, gamma.values - gamma0.values);
    const double norm = l2_norm(alpha);
    return norm > 0.0 ? grad_l2_norm(alpha) / norm : 0.0;
}

double smallness_indicator(const AnisotropyFamily& family, const NodalField& gamma, const ElectricField& field) {
    const CoefficientField coeffs = expand_coefficients(family, field);
    const Mesh& mesh = *field.mesh();
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const double t = gamma.at_centroid(c);
        const double h = 1e-5 * std::max(1.0, std::abs(t));
        // d/dt of div(A w) at frozen t is div(dA/dt w); subtracting div w accounts for the identity.
        const double d_reaction = (coeffs.reaction(c, t + h) - coeffs.reaction(c, t - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(d_reaction - coeffs.flow_gradient()[c].trace()));
    }
    return worst;
}

std::vector<double> ReconTrace::errors() const {
    std::vector<double> e{initial_error};
    for (const auto& r : records) e.push_back(r.error_l2);
    return e;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Evaluation {
    FieldSolve solve;
    FunctionalData functional;
};

}  // namespace

ReconTrace reconstruct(const ReconConfig& config) {
    if (!config.family) throw ConfigError("reconstruct: no anisotropy family given");
    if (!config.mesh) throw ConfigError("reconstruct: no mesh given");
    if (config.iterations < 1) throw ConfigError("reconstruct: iterations must be >= 1");
    if (!(config.relaxation > 0.0 && config.relaxation <= 1.0)) throw ConfigError("reconstruct: relaxation must lie in (0, 1]");
    const AnisotropyFamily& family = *config.family;
    const MeshPtr& mesh = config.mesh;
    const bool have_truth = static_cast<bool>(config.gamma_star);

    AdmissibleSet set = config.admissible;
    if (!set.gamma0.mesh) set.gamma0 = NodalField::constant(mesh, 1.0);
    set.validate();

    NodalField truth;
    if (have_truth) truth = interpolate(mesh, config.gamma_star);
    NodalField trace_values = config.boundary_trace.mesh ? config.boundary_trace : truth;
    if (!trace_values.mesh) throw ConfigError("reconstruct: boundary trace unknown (no gamma_star, no trace)");

    FunctionalData data;
    if (config.data) {
        data = *config.data;
    } else if (have_truth) {
        data = synthesize(family, mesh, config.gamma_star, config.refine, config.neumann);
    } else {
        throw ConfigError("reconstruct: neither data nor gamma_star given");
    }

    TransportScheme scheme = config.scheme;
    if (scheme == TransportScheme::Auto)
        scheme = family.affine_in_t() ? TransportScheme::DG0 : TransportScheme::PicardP1;

    ReconTrace trace;
    trace.scheme = scheme == TransportScheme::DG0 ? "dg0" : "picard-p1";
    {
        const double lo = std::isfinite(family.t_min()) ? family.t_min() : set.lower;
        const double hi = std::isfinite(family.t_max()) ? family.t_max() : set.upper;
        trace.lambda_est = check_admissibility(family.with_range(lo, hi), 6, hi, mesh->dim()).lambda_est;
    }

    auto error_of = [&](const NodalField& g) {
        return have_truth ? l2_norm(NodalField(mesh, g.values - truth.values)) : std::nan("");
    };
    auto evaluate = [&](const NodalField& g) {
        Evaluation ev{solve_field(family, g, config.neumann), {}};
        ev.functional = functional_from_field(family, g, ev.solve.field);
        trace.energy.push_back({ev.solve.grad_u_norm, ev.solve.etilde_norm});
        return ev;
    };
    auto fail = [&](const std::string& where, const std::exception& e) {
        throw ReconstructionError("reconstruct: " + where + ": " + e.what(), trace);
    };

    NodalField gamma = project(set.gamma0, set, trace_values);
    trace.iterates.push_back(gamma);
    if (config.on_iterate) config.on_iterate(1, gamma);
    trace.initial_error = error_of(gamma);

    Evaluation current;
    try {
        current = evaluate(gamma);
    } catch (const std::exception& e) {
        fail("field solve 1", e);
    }
    trace.initial_residual = functional_distance(current.functional, data);

    for (int k = 1; k <= config.iterations; ++k) {
        const auto start = Clock::now();
        IterationRecord rec;
        rec.iteration = k;
        rec.smallness = smallness_indicator(family, gamma, current.solve.field);

        TransportProblem problem{family,          current.solve.field, data, trace_values, {}, gamma,
                                 config.tol_inflow, config.corrected_stabilisation};
        NodalField half;
        try {
            problem.inflow_facets = flux_inflow(family, gamma, current.solve.field, config.tol_inflow);
            if (scheme == TransportScheme::DG0) {
                half = lumped_projection(solve_linear_dg(problem));
                rec.picard_steps = 0;
                trace.picard_history.emplace_back();
            } else {
                PicardResult pr = solve_nonlinear(problem, config.picard);
                half = std::move(pr.gamma);
                rec.picard_steps = pr.iterations;
                rec.picard_converged = pr.converged;
                trace.picard_history.push_back(std::move(pr.history));
            }
        } catch (const std::exception& e) {
            fail("transport step " + std::to_string(k), e);
        }
        rec.inflow_facets = static_cast<int>(problem.inflow_facets.size());
        trace.final_inflow = problem.inflow_facets;

        if (config.relaxation != 1.0) half.values = gamma.values + config.relaxation * (half.values - gamma.values);
        gamma = project(half, set, trace_values);
        try {
            current = evaluate(gamma);
        } catch (const std::exception& e) {
            fail("field solve " + std::to_string(k + 1), e);
        }

        const double previous = k == 1 ? trace.initial_error : trace.records.back().error_l2;
        rec.error_l2 = error_of(gamma);
        rec.ratio = previous > 0.0 ? rec.error_l2 / previous : std::nan("");
        rec.residual = functional_distance(current.functional, data);
        rec.grad_condition = gradient_condition(gamma, set.gamma0);
        rec.norm_alpha = l2_norm(NodalField(mesh, gamma.values - set.gamma0.values));
        rec.in_admissible_set = rec.grad_condition <= set.grad_const && rec.norm_alpha <= set.norm_bound;
        rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();

        trace.records.push_back(rec);
        trace.iterates.push_back(gamma);
        if (config.on_iterate) config.on_iterate(k + 1, gamma);
    }
    return trace;
}

void write_trace_csv(const ReconTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "iteration,error_L2,residual,ratio\n" << std::setprecision(17);
    for (const auto& r : trace.records) os << r.iteration << ',' << r.error_l2 << ',' << r.residual << ',' << r.ratio << '\n';
}

void write_timing_csv(const ReconTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "iteration,seconds\n" << std::setprecision(6);
    for (const auto& r : trace.records) os << r.iteration << ',' << r.seconds << '\n';
}

void write_picard_csv(const ReconTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "iteration,outer,change\n" << std::setprecision(17);
    for (std::size_t k = 0; k < trace.picard_history.size(); ++k)
        for (std::size_t j = 0; j < trace.picard_history[k].size(); ++j)
            os << k + 1 << ',' << j + 1 << ',' << trace.picard_history[k][j] << '\n';
}

}  // namespace matmi
