#include "matmi/anisotropy.hpp"

#include "matmi/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace matmi {

AnisotropyFamily::AnisotropyFamily(std::string name, bool spatial, MatrixFn eval, MatrixFn deriv_t,
                                   SpatialGradFn deriv_x)
    : name_(std::move(name)),
      spatial_(spatial),
      eval_(std::move(eval)),
      deriv_t_(std::move(deriv_t)),
      deriv_x_(std::move(deriv_x)) {}

bool AnisotropyFamily::in_range(double t) const noexcept {
    const double slack = 1e-12 * std::max(1.0, std::abs(t));
    return t >= t_min_ - slack && t <= t_max_ + slack;
}

void AnisotropyFamily::check(double t) const {
    if (!std::isfinite(t) || !in_range(t)) {
        std::ostringstream msg;
        msg << "family " << name_ << ": t = " << t << " outside [" << t_min_ << ", " << t_max_ << "]";
        throw OutOfRangeError(msg.str());
    }
}

AnisotropyFamily AnisotropyFamily::with_range(double lo, double hi) const {
    if (!(lo <= hi)) throw std::invalid_argument("with_range: lower bound exceeds upper bound");
    AnisotropyFamily copy = *this;
    copy.t_min_ = lo;
    copy.t_max_ = hi;
    return copy;
}

Mat3 AnisotropyFamily::eval(const Vec3& x, double t) const {
    check(t);
    return eval_(x, t);
}

Mat3 AnisotropyFamily::deriv_t(const Vec3& x, double t) const {
    check(t);
    return deriv_t_(x, t);
}

std::array<Mat3, 3> AnisotropyFamily::deriv_x(const Vec3& x, double t) const {
    check(t);
    if (!spatial_) return {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
    if (deriv_x_) return deriv_x_(x, t);
    constexpr double h = 1e-6;
    std::array<Mat3, 3> out;
    for (int i = 0; i < 3; ++i) {
        Vec3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        out[i] = (eval_(xp, t) - eval_(xm, t)) / (2.0 * h);
    }
    return out;
}

bool AnisotropyFamily::affine_in_t(int samples) const {
    const double lo = std::isfinite(t_min_) ? t_min_ : 0.5;
    const double hi = std::isfinite(t_max_) ? t_max_ : 2.0;
    for (int s = 0; s < samples; ++s) {
        const Vec3 x(0.13 + 0.17 * s, 0.71 - 0.11 * s, 0.37);
        const Mat3 a = eval_(x, lo);
        const Mat3 b = eval_(x, hi);
        for (int k = 1; k < samples; ++k) {
            const double th = static_cast<double>(k) / samples;
            const Mat3 mid = eval_(x, lo + th * (hi - lo));
            const Mat3 lin = (1.0 - th) * a + th * b;
            if ((mid - lin).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + lin.cwiseAbs().maxCoeff())) return false;
        }
    }
    return true;
}

namespace {

Mat3 sym2(double a11, double a12, double a22, double a33) {
    Mat3 m;
    m << a11, a12, 0.0, a12, a22, 0.0, 0.0, 0.0, a33;
    return m;
}

// Shared structure of D2..D6: diag entries 0.4(t+1)^2, 3t, t and an off-diagonal s(x, t).
AnisotropyFamily layered(std::string name, bool spatial, std::function<double(const Vec3&, double)> off,
                         std::function<double(const Vec3&, double)> off_t,
                         AnisotropyFamily::SpatialGradFn dx = {}) {
    auto eval = [off](const Vec3& x, double t) { return sym2(0.4 * (t + 1.0) * (t + 1.0), off(x, t), 3.0 * t, t); };
    auto dt = [off_t](const Vec3& x, double t) { return sym2(0.8 * (t + 1.0), off_t(x, t), 3.0, 1.0); };
    return AnisotropyFamily(std::move(name), spatial, eval, dt, std::move(dx));
}

// d/dx_i of an off-diagonal-only spatial dependence.
AnisotropyFamily::SpatialGradFn off_diagonal_gradient(std::function<Vec3(const Vec3&, double)> grad_off) {
    return [grad_off](const Vec3& x, double t) {
        const Vec3 g = grad_off(x, t);
        std::array<Mat3, 3> out;
        for (int i = 0; i < 3; ++i) out[i] = sym2(0.0, g[i], 0.0, 0.0);
        return out;
    };
}

}  // namespace

std::vector<std::string> builtin_names() { return {"D1", "D2", "D3", "D4", "D5", "D6"}; }

AnisotropyFamily builtin(std::string_view name) {
    if (name == "D1") {
        return AnisotropyFamily(
            "D1", false, [](const Vec3&, double t) { return sym2(t, 0.0, t, 1.0); },
            [](const Vec3&, double) { return sym2(1.0, 0.0, 1.0, 0.0); });
    }
    if (name == "D2") {
        return layered(
            "D2", false, [](const Vec3&, double) { return 0.01; }, [](const Vec3&, double) { return 0.0; });
    }
    if (name == "D3") {
        return layered(
            "D3", false, [](const Vec3&, double t) { return 0.01 * t * (1.0 - t); },
            [](const Vec3&, double t) { return 0.01 * (1.0 - 2.0 * t); });
    }
    if (name == "D4") {
        return layered(
            "D4", false, [](const Vec3&, double t) { return 1.0 / (t + 20.0); },
            [](const Vec3&, double t) { return -1.0 / ((t + 20.0) * (t + 20.0)); });
    }
    if (name == "D5") {
        return layered(
            "D5", true, [](const Vec3& x, double t) { return 0.25 * (x[0] * x[0] + x[1] * x[1]) * t; },
            [](const Vec3& x, double) { return 0.25 * (x[0] * x[0] + x[1] * x[1]); },
            off_diagonal_gradient([](const Vec3& x, double t) { return Vec3(0.5 * x[0] * t, 0.5 * x[1] * t, 0.0); }));
    }
    if (name == "D6") {
        return layered(
            "D6", true,
            [](const Vec3& x, double t) {
                const double dx = x[0] - 0.5, dy = x[1] - 0.5;
                return 0.25 * (dx * dx + dy * dy) * t;
            },
            [](const Vec3& x, double) {
                const double dx = x[0] - 0.5, dy = x[1] - 0.5;
                return 0.25 * (dx * dx + dy * dy);
            },
            off_diagonal_gradient(
                [](const Vec3& x, double t) { return Vec3(0.5 * (x[0] - 0.5) * t, 0.5 * (x[1] - 0.5) * t, 0.0); }));
    }
    throw std::invalid_argument("unknown anisotropy family: " + std::string(name));
}

AnisotropyFamily polynomial_family(std::string name, const std::array<std::vector<double>, 6>& coefficients) {
    static constexpr int rows[6] = {0, 0, 0, 1, 1, 2};
    static constexpr int cols[6] = {0, 1, 2, 1, 2, 2};
    auto eval = [coefficients](const Vec3&, double t) {
        Mat3 m = Mat3::Zero();
        for (int e = 0; e < 6; ++e) {
            double v = 0.0;
            for (auto it = coefficients[e].rbegin(); it != coefficients[e].rend(); ++it) v = v * t + *it;
            m(rows[e], cols[e]) = v;
            m(cols[e], rows[e]) = v;
        }
        return m;
    };
    auto dt = [coefficients](const Vec3&, double t) {
        Mat3 m = Mat3::Zero();
        for (int e = 0; e < 6; ++e) {
            double v = 0.0;
            const auto& c = coefficients[e];
            for (std::size_t p = c.size(); p-- > 1;) v = v * t + static_cast<double>(p) * c[p];
            m(rows[e], cols[e]) = v;
            m(cols[e], rows[e]) = v;
        }
        return m;
    };
    return AnisotropyFamily(std::move(name), false, eval, dt);
}

AdmissibilityReport check_admissibility(const AnisotropyFamily& family, int grid_density, double lambda_declared,
                                        int dim) {
    if (grid_density < 2) throw std::invalid_argument("check_admissibility: grid_density must be >= 2");
    if (!std::isfinite(family.t_min()) || !std::isfinite(family.t_max()))
        throw std::invalid_argument("check_admissibility: family range must be finite");

    AdmissibilityReport rep;
    rep.grid_density = grid_density;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
    const double lo = family.t_min(), hi = family.t_max();

    auto sample = [&](const Vec3& x, double t) {
        const Mat3 a = family.eval(x, t);
        rep.max_asymmetry = std::max(rep.max_asymmetry, (a - a.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Mat3> es(a, Eigen::EigenvaluesOnly);
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
        rep.max_eigenvalue = std::max(rep.max_eigenvalue, es.eigenvalues().maxCoeff());
        double deriv = family.deriv_t(x, t).operatorNorm();
        if (family.spatial()) {
            double sup_x = 0.0;
            for (const auto& m : family.deriv_x(x, t)) sup_x = std::max(sup_x, m.operatorNorm());
            deriv += sup_x;
        }
        rep.derivative_est = std::max(rep.derivative_est, deriv);
        ++rep.t_samples;
    };

    for (int g = 2; g <= grid_density; ++g) {
        const int gx = family.spatial() ? g : 1;
        const int gy = family.spatial() ? g : 1;
        const int gz = family.spatial() && dim == 3 ? g : 1;
        for (int k = 0; k < gz; ++k)
            for (int j = 0; j < gy; ++j)
                for (int i = 0; i < gx; ++i) {
                    const Vec3 x(gx > 1 ? static_cast<double>(i) / (gx - 1) : 0.5,
                                 gy > 1 ? static_cast<double>(j) / (gy - 1) : 0.5,
                                 gz > 1 ? static_cast<double>(k) / (gz - 1) : 0.0);
                    ++rep.x_samples;
                    for (int s = 0; s < g; ++s) sample(x, lo + (hi - lo) * s / (g - 1));
                }
    }

    rep.symmetric = rep.max_asymmetry <= 1e-14;
    rep.lambda_est = rep.min_eigenvalue > 0.0
                         ? std::max({1.0, rep.max_eigenvalue, 1.0 / rep.min_eigenvalue})
                         : std::numeric_limits<double>::infinity();
    rep.elliptic = rep.min_eigenvalue >= 1.0 / lambda_declared - 1e-14 && rep.max_eigenvalue <= lambda_declared + 1e-14;
    rep.pass = rep.symmetric && rep.elliptic;
    return rep;
}

}  // namespace matmi
