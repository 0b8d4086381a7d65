#include "matmi/linalg.hpp"

#include "matmi/errors.hpp"

#include <cmath>
#include <sstream>

namespace matmi {
namespace {

void remove_mean(Vector& v) { v.array() -= v.mean(); }

}  // namespace

CgResult conjugate_gradient(const SparseMatrix& A, const Vector& b, const CgOptions& opts) {
    const Eigen::Index n = b.size();
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * n);

    Vector inv_diag = Vector::Ones(n);
    if (opts.jacobi) {
        const Vector d = A.diagonal();
        for (Eigen::Index i = 0; i < n; ++i) inv_diag[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
    }

    CgResult out;
    out.x = Vector::Zero(n);
    Vector r = b;
    if (opts.project_constants) remove_mean(r);
    const double bnorm = r.norm();
    if (bnorm == 0.0) {
        out.history.push_back(0.0);
        return out;
    }

    auto precondition = [&](const Vector& res) {
        Vector z = inv_diag.cwiseProduct(res);
        if (opts.project_constants) remove_mean(z);
        return z;
    };

    Vector z = precondition(r);
    Vector p = z;
    double rz = r.dot(z);
    out.history.push_back(1.0);
    for (int it = 1; it <= max_iter; ++it) {
        Vector Ap = A * p;
        if (opts.project_constants) remove_mean(Ap);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) {
            std::ostringstream msg;
            msg << "conjugate_gradient: breakdown (p'Ap = " << pAp << ") at iteration " << it;
            throw SolverError(msg.str(), out.history);
        }
        const double alpha = rz / pAp;
        out.x += alpha * p;
        r -= alpha * Ap;
        const double rel = r.norm() / bnorm;
        out.history.push_back(rel);
        out.iterations = it;
        out.relative_residual = rel;
        if (rel <= opts.tol) {
            // Confirm against the true residual; recursion drift can fake convergence.
            Vector true_r = b - A * out.x;
            if (opts.project_constants) remove_mean(true_r);
            out.relative_residual = true_r.norm() / bnorm;
            if (out.relative_residual <= opts.tol) return out;
            // restart from the true residual
            r = true_r;
            z = precondition(r);
            p = z;
            rz = r.dot(z);
            continue;
        }
        z = precondition(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    std::ostringstream msg;
    msg << "conjugate_gradient: no convergence after " << max_iter << " iterations (relative residual "
        << out.relative_residual << ")";
    throw SolverError(msg.str(), out.history);
}

}  // namespace matmi
