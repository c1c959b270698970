#pragma once

// Sparse numerical kernels shared by all modules: SPD and saddle-point
// solves, and extremal generalized symmetric eigenvalues (shift-invert
// Lanczos with a dense fallback at small dimensions).

#include "rbsaddle/types.hpp"

#include <functional>
#include <utility>

namespace rbs {

struct EigenResult {
    double value = 0.0;
    Vector vector;
    double residual_norm = 0.0; // relative pencil residual
    int iterations = 0;
};

enum class EigWhich { Min, Max };

struct EigOptions {
    double tol = 1e-8;           // relative eigen-residual target
    int max_dim = 600;           // Krylov subspace cap
    unsigned seed = 0x5add1e;    // deterministic start vector
    Index dense_threshold = 2000;
};

// Deterministic pseudo-random vector with entries in [-1, 1].
Vector seeded_vector(Index n, unsigned seed);

// x with |M x - rhs| / |rhs| <= rel_tol; M must be SPD.
Vector solve_spd(const SparseMatrix& M, const Vector& rhs, double rel_tol = 1e-10);

// Reusable SPD factorization for repeated right-hand sides.
class SpdSolver {
public:
    explicit SpdSolver(const SparseMatrix& M);
    Vector solve(const Vector& rhs) const;
    Index rows() const { return n_; }

private:
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    Index n_;
};

// Reusable LU factorization of the saddle block [[A, B^T], [B, 0]].
class SaddleSolver {
public:
    SaddleSolver(const SparseMatrix& A, const SparseMatrix& B);
    // Solves the block system for (u, p).
    std::pair<Vector, Vector> solve(const Vector& f, const Vector& g) const;
    Index nu() const { return nu_; }
    Index np() const { return np_; }

private:
    Eigen::SparseLU<SparseMatrix> lu_;
    Index nu_, np_;
};

// Block solve of A u + B^T p = f, B u = g with residual check.
std::pair<Vector, Vector> solve_saddle(const SparseMatrix& A, const SparseMatrix& B,
                                       const Vector& f, const Vector& g,
                                       double rel_tol = 1e-9);

// Extremal eigenvalue of the pencil M v = lambda G v (M symmetric, G SPD).
EigenResult eig_extreme(const SparseMatrix& M, const SparseMatrix& G, EigWhich which,
                        const EigOptions& opts = {});

using VecOp = std::function<Vector(const Vector&)>;

// Extremal Ritz pair of an operator T that is self-adjoint with respect to
// the SPD inner product induced by apply_B. Lanczos with full
// reorthogonalization; convergence on the B-norm Ritz residual.
EigenResult lanczos_extreme(const VecOp& apply_T, const VecOp& apply_B, Index n,
                            EigWhich which, const EigOptions& opts = {});

} // namespace rbs
