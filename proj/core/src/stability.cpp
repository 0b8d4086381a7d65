#include "matmi/stability.hpp"

#include "matmi/functional.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace matmi {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

bool in_family_range(const AnisotropyFamily& family, const NodalField& g) {
    // P1 values inside a cell are convex combinations of vertex values, so the vertices decide.
    return family.in_range(g.values.minCoeff()) && family.in_range(g.values.maxCoeff());
}

FunctionalData functional_of(const AnisotropyFamily& family, const NodalField& g, const NeumannOptions& opts) {
    const FieldSolve solve = solve_field(family, g, opts);
    return functional_from_field(family, g, solve.field);
}

double field_distance(const ElectricField& a, const ElectricField& b) {
    // The background parts coincide, so the difference is cellwise constant.
    const Mesh& mesh = *a.mesh();
    double sum = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c)
        sum += mesh.volume(c) * (a.gradient_part()[c] - b.gradient_part()[c]).squaredNorm();
    return std::sqrt(sum);
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << std::setprecision(17);
    return os;
}

}  // namespace

std::vector<double> StabilityReport::ratios() const {
    std::vector<double> out;
    for (const auto& p : pairs)
        if (!p.skipped && std::isfinite(p.ratio)) out.push_back(p.ratio);
    return out;
}

double StabilityReport::max_ratio() const {
    const auto r = ratios();
    return r.empty() ? nan_value : *std::max_element(r.begin(), r.end());
}

double StabilityReport::mean_ratio() const {
    const auto r = ratios();
    return r.empty() ? nan_value : std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

bool StabilityReport::verdict_available() const {
    return std::all_of(pairs.begin(), pairs.end(),
                       [&](const StabilityPair& p) { return p.skipped || p.grad_condition <= grad_const; });
}

StabilityPair compare_pair(const AnisotropyFamily& family, const NodalField& gamma_1, const NodalField& gamma_2,
                           std::string label, const NeumannOptions& opts) {
    if (gamma_1.mesh != gamma_2.mesh) throw std::invalid_argument("compare_pair: fields live on different meshes");
    StabilityPair pair;
    pair.label = std::move(label);
    const NodalField diff(gamma_1.mesh, gamma_1.values - gamma_2.values);
    pair.gamma_diff = l2_norm(diff);
    pair.grad_condition = pair.gamma_diff > 0.0 ? grad_l2_norm(diff) / pair.gamma_diff : 0.0;
    pair.functional_diff = functional_distance(functional_of(family, gamma_1, opts), functional_of(family, gamma_2, opts));
    pair.ratio = pair.functional_diff > 0.0 ? pair.gamma_diff / pair.functional_diff : nan_value;
    return pair;
}

StabilityReport stability_sweep(const AnisotropyFamily& family, const NodalField& base,
                                const std::vector<NodalField>& perturbations, double grad_const,
                                const NeumannOptions& opts) {
    StabilityReport report;
    report.family = family.name();
    report.resolution = base.mesh->resolution();
    report.grad_const = grad_const;

    const FunctionalData base_data = functional_of(family, base, opts);
    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        const NodalField& delta = perturbations[i];
        const std::string label = "delta" + std::to_string(i);
        if (delta.mesh != base.mesh) throw std::invalid_argument("stability_sweep: " + label + " is on another mesh");
        for (int v : base.mesh->boundary_vertices())
            if (delta[v] != 0.0)
                throw std::invalid_argument("stability_sweep: " + label + " does not vanish on the boundary");

        const NodalField perturbed(base.mesh, base.values + delta.values);
        StabilityPair pair;
        pair.label = label;
        if (!in_family_range(family, perturbed)) {
            pair.skipped = true;
            pair.ratio = nan_value;
            report.log.push_back(label + ": skipped, leaves the range of " + family.name());
            report.pairs.push_back(pair);
            continue;
        }
        pair.gamma_diff = l2_norm(delta);
        pair.grad_condition = pair.gamma_diff > 0.0 ? grad_l2_norm(delta) / pair.gamma_diff : 0.0;
        pair.functional_diff = functional_distance(base_data, functional_of(family, perturbed, opts));
        pair.ratio = pair.functional_diff > 0.0 ? pair.gamma_diff / pair.functional_diff : nan_value;
        if (!std::isfinite(pair.ratio)) report.log.push_back(label + ": identical data, excluded from ratios");
        report.pairs.push_back(pair);
    }
    return report;
}

std::vector<NodalField> smooth_perturbations(MeshPtr mesh, int count, double amplitude, std::uint64_t seed,
                                             int modes) {
    if (count < 0 || modes < 1) throw std::invalid_argument("smooth_perturbations: bad count or modes");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> coefficient(0.0, 1.0);
    const int dim = mesh->dim();
    const int lz = dim == 3 ? modes : 1;
    constexpr double pi = std::numbers::pi;

    std::vector<NodalField> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        std::vector<double> c;
        for (int i = 0; i < modes * modes * lz; ++i) c.push_back(coefficient(rng) / (1.0 + i));
        Vector values(mesh->num_vertices());
        for (int v = 0; v < mesh->num_vertices(); ++v) {
            const Vec3& x = mesh->vertex(v);
            double s = 0.0;
            int idx = 0;
            for (int m = 1; m <= modes; ++m)
                for (int n = 1; n <= modes; ++n)
                    for (int l = 1; l <= lz; ++l, ++idx) {
                        double term = std::sin(m * pi * x[0]) * std::sin(n * pi * x[1]);
                        if (dim == 3) term *= std::sin(l * pi * x[2]);
                        s += c[idx] * term;
                    }
            values[v] = s;
        }
        for (int v : mesh->boundary_vertices()) values[v] = 0.0;  // sin(pi) is not exactly 0
        const double peak = values.cwiseAbs().maxCoeff();
        if (peak > 0.0) values *= amplitude / peak;
        out.emplace_back(mesh, std::move(values));
    }
    return out;
}

double FieldDifferenceReport::max_ratio() const {
    double best = nan_value;
    for (const auto& r : rows)
        if (!r.skipped && std::isfinite(r.ratio)) best = std::isnan(best) ? r.ratio : std::max(best, r.ratio);
    return best;
}

FieldDifferenceReport field_difference_sweep(const AnisotropyFamily& family,
                                             const std::vector<std::pair<NodalField, NodalField>>& pairs,
                                             const NeumannOptions& opts) {
    FieldDifferenceReport report;
    report.family = family.name();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [g1, g2] = pairs[i];
        if (g1.mesh != g2.mesh) throw std::invalid_argument("field_difference_sweep: pair on different meshes");
        report.resolution = g1.mesh->resolution();
        FieldDifferenceRow row;
        row.label = "pair" + std::to_string(i);
        if (!in_family_range(family, g1) || !in_family_range(family, g2)) {
            row.skipped = true;
            row.ratio = nan_value;
            report.log.push_back(row.label + ": skipped, leaves the range of " + family.name());
            report.rows.push_back(row);
            continue;
        }
        row.gamma_diff = l2_norm(NodalField(g1.mesh, g1.values - g2.values));
        row.field_diff = field_distance(solve_field(family, g1, opts).field, solve_field(family, g2, opts).field);
        row.ratio = row.gamma_diff > 0.0 ? row.field_diff / row.gamma_diff : nan_value;
        report.rows.push_back(row);
    }
    return report;
}

ContractionReport contraction_report(const std::vector<double>& errors, double threshold) {
    if (errors.size() < 4) throw std::invalid_argument("contraction_report: need at least 3 iterations");
    ContractionReport report;
    report.errors = errors;
    double log_sum = 0.0;
    int used = 0;
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
        const double rho = errors[k] > 0.0 ? errors[k + 1] / errors[k] : nan_value;
        const bool counted = errors[k] > threshold && std::isfinite(rho);
        report.ratios.push_back(rho);
        report.counted.push_back(counted);
        if (counted) {
            log_sum += std::log(std::max(rho, std::numeric_limits<double>::min()));
            ++used;
        }
    }
    if (used > 0) {
        report.geometric_mean = std::exp(log_sum / used);
        report.contractive = report.geometric_mean < 1.0;
    }
    return report;
}

ContractionReport contraction_report(const ReconTrace& trace, double threshold) {
    const auto errors = trace.errors();
    if (std::any_of(errors.begin(), errors.end(), [](double e) { return std::isnan(e); }))
        throw std::invalid_argument("contraction_report: trace has no reference solution");
    return contraction_report(errors, threshold);
}

void write_stability_csv(const StabilityReport& report, const std::string& path) {
    auto os = open_csv(path);
    os << "label,gamma_diff,functional_diff,ratio,grad_condition,skipped\n";
    for (const auto& p : report.pairs)
        os << p.label << ',' << p.gamma_diff << ',' << p.functional_diff << ',' << p.ratio << ',' << p.grad_condition
           << ',' << (p.skipped ? 1 : 0) << '\n';
}

void write_field_difference_csv(const FieldDifferenceReport& report, const std::string& path) {
    auto os = open_csv(path);
    os << "label,gamma_diff,field_diff,ratio,skipped\n";
    for (const auto& r : report.rows)
        os << r.label << ',' << r.gamma_diff << ',' << r.field_diff << ',' << r.ratio << ',' << (r.skipped ? 1 : 0)
           << '\n';
}

void write_contraction_csv(const ContractionReport& report, const std::string& path) {
    auto os = open_csv(path);
    os << "iteration,error_L2,ratio,counted\n";
    for (std::size_t k = 0; k < report.ratios.size(); ++k)
        os << k + 1 << ',' << report.errors[k + 1] << ',' << report.ratios[k] << ',' << (report.counted[k] ? 1 : 0)
           << '\n';
}

}  // namespace matmi
