#pragma once

#include "matmi/fields.hpp"

#include <vector>

namespace matmi {

struct CgOptions {
    double tol = 1e-10;
    int max_iter = 0;  // 0 means 10 * (system size)
    bool jacobi = false;
    /// Work in the orthogonal complement of the constant vector (singular Neumann systems).
    bool project_constants = false;
};

struct CgResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> history;
};

/// Preconditioned conjugate gradients for symmetric positive (semi)definite systems.
/// Throws SolverError carrying the relative-residual history when max_iter is exhausted.
CgResult conjugate_gradient(const SparseMatrix& A, const Vector& b, const CgOptions& opts);

}  // namespace matmi
