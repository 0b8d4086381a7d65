#pragma once

#include "matmi/mesh.hpp"

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace matmi {

/// One-parameter family of symmetric 3x3 matrices t -> A(x, t).
///
/// Families without spatial dependence ignore x. Evaluation outside [t_min, t_max]
/// throws OutOfRangeError: the admissible box is part of the family.
class AnisotropyFamily {
public:
    using MatrixFn = std::function<Mat3(const Vec3&, double)>;
    using SpatialGradFn = std::function<std::array<Mat3, 3>(const Vec3&, double)>;

    AnisotropyFamily(std::string name, bool spatial, MatrixFn eval, MatrixFn deriv_t,
                     SpatialGradFn deriv_x = {});

    const std::string& name() const noexcept { return name_; }
    bool spatial() const noexcept { return spatial_; }
    double t_min() const noexcept { return t_min_; }
    double t_max() const noexcept { return t_max_; }
    bool in_range(double t) const noexcept;

    /// Copy restricted to [lo, hi].
    AnisotropyFamily with_range(double lo, double hi) const;

    Mat3 eval(const Vec3& x, double t) const;
    Mat3 deriv_t(const Vec3& x, double t) const;
    /// Partial derivatives dA/dx_i at fixed t. Central differences when no analytic form was given.
    std::array<Mat3, 3> deriv_x(const Vec3& x, double t) const;

    /// No range check; used for algebraic manipulations such as secant anchors.
    Mat3 eval_unchecked(const Vec3& x, double t) const { return eval_(x, t); }

    /// True when A(x, t) is affine in t at the sampled points.
    bool affine_in_t(int samples = 5) const;

private:
    void check(double t) const;

    std::string name_;
    bool spatial_ = false;
    MatrixFn eval_;
    MatrixFn deriv_t_;
    SpatialGradFn deriv_x_;
    double t_min_ = -std::numeric_limits<double>::infinity();
    double t_max_ = std::numeric_limits<double>::infinity();
};

/// The six built-in families "D1" .. "D6". Throws std::invalid_argument on unknown names.
/// Built-ins come without an admissible box; experiments restrict them with `with_range`.
AnisotropyFamily builtin(std::string_view name);

/// Names of the built-in families.
std::vector<std::string> builtin_names();

/// Family whose entries are polynomials in t. `coefficients[e]` lists ascending powers for the
/// upper-triangular entry e in the order (00, 01, 02, 11, 12, 22).
AnisotropyFamily polynomial_family(std::string name, const std::array<std::vector<double>, 6>& coefficients);

struct AdmissibilityReport {
    double lambda_est = 0.0;      // max(largest eigenvalue, 1 / smallest eigenvalue); inf if indefinite
    double derivative_est = 0.0;  // sampled sup |dA/dt| (plus sup_i |dA/dx_i| for spatial families)
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double max_asymmetry = 0.0;
    int x_samples = 0;
    int t_samples = 0;
    int grid_density = 0;
    bool symmetric = true;
    bool elliptic = true;  // all sampled eigenvalues in [1/lambda_declared, lambda_declared]
    bool pass = true;
};

/// Samples the family on nested tensor grids (densities 2..grid_density, so the estimates can
/// only grow with the density). The spatial grid covers [0,1]^dim, the t grid the family range,
/// which must be finite.
AdmissibilityReport check_admissibility(const AnisotropyFamily& family, int grid_density, double lambda_declared,
                                        int dim = 2);

}  // namespace matmi
