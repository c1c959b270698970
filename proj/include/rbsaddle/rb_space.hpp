#pragma once

// Nested reduced-basis spaces X_N, Y_N: Gram-orthonormal snapshot insertion,
// supremizer enrichment, and the reduced inf-sup constant.

#include "rbsaddle/kernels.hpp"
#include "rbsaddle/stokes.hpp"

#include <limits>
#include <string>
#include <vector>

namespace rbs {

enum class BasisRole { USnapshot, PSnapshot, Supremizer, ExtraSnapshot };

std::string role_name(BasisRole role);
BasisRole role_from_name(const std::string& name);

enum class WhichSpace { X, Y };

struct RBSpace {
    DenseMatrix zu; // truth velocity dofs x N_X, X-Gram-orthonormal columns
    DenseMatrix zp; // pressure dofs x N_Y, Y-Gram-orthonormal columns
    std::vector<BasisRole> u_roles, p_roles;
    std::vector<int> u_generation, p_generation;

    Index n_x() const { return zu.cols(); }
    Index n_y() const { return zp.cols(); }
    Index n_z() const { return n_x() + n_y(); }
};

struct InsertReport {
    int accepted = 0;
    int rejected = 0;
};

// Modified Gram-Schmidt against the existing basis in the metric of `gram`,
// with one re-orthogonalization pass. Vectors whose post-projection norm
// drops below 1e-10 of the pre-projection norm are rejected.
InsertReport insert(RBSpace& space, const SparseMatrix& gram,
                    const std::vector<std::pair<Vector, BasisRole>>& vectors, WhichSpace which,
                    int generation, double rejection_tol = 1e-10);

// Riesz representer of b(., q; mu) in the X inner product; the velocity
// direction maximizing b(v, q; mu)/|v|_X.
Vector supremizer(const TruthDiscretization& disc, const Vector& mu, const Vector& q);
Vector supremizer(const SpdSolver& x_solver, const SparseMatrix& b_mu, const Vector& q);

// Reduced inf-sup constant beta_N(mu); +infinity for an empty Y_N.
double rb_infsup(const RBSpace& space, const SparseMatrix& b_mu);
double rb_infsup(const RBSpace& space, const TruthDiscretization& disc, const Vector& mu);

} // namespace rbs
