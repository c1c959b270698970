#pragma once

// Offline-online split: mu-independent projected blocks and Riesz-representer
// Gram tensors, dense online saddle solves, and residual dual norms whose
// online cost is independent of the truth dimension.

#include "rbsaddle/rb_space.hpp"
#include "rbsaddle/stokes.hpp"

#include <utility>
#include <vector>

namespace rbs {

struct ReducedModel {
    ParameterDomain domain;
    std::vector<Theta> theta_a, theta_b, theta_f, theta_g;

    std::vector<DenseMatrix> a_blocks; // Q_a blocks, N_X x N_X
    std::vector<DenseMatrix> b_blocks; // Q_b blocks, N_Y x N_X
    std::vector<Vector> f_blocks;      // Q_f vectors, N_X
    std::vector<Vector> g_blocks;      // Q_g vectors, N_Y

    // Riesz Gram blocks for the momentum residual (X'-norm). Representer
    // ordering: F-block by f-term; A-block column-major by velocity basis
    // column (index j*Q_a + q); B-block by pressure column (k*Q_b + q).
    DenseMatrix r1_ff, r1_fa, r1_fb, r1_aa, r1_ab, r1_bb;
    // Continuity residual (Y'-norm): G-block by g-term; B-block by velocity
    // column (j*Q_b + q).
    DenseMatrix r2_gg, r2_gb, r2_bb;

    // Positive-semidefinite square roots S of the assembled Riesz Gram
    // matrices, coefficient ordering [f; a; b] and [g; b]. Dual norms are
    // evaluated as |S c|_2, which avoids the catastrophic cancellation of the
    // raw quadratic expansion once residuals are small.
    DenseMatrix r1_fac, r2_fac;

    std::vector<std::pair<Index, Index>> generations; // (N_X, N_Y) per greedy step

    Index n_x() const { return a_blocks.empty() ? 0 : a_blocks[0].rows(); }
    Index n_y() const { return b_blocks.empty() ? 0 : b_blocks[0].rows(); }
};

struct RBSolution {
    Vector mu;
    Index n_x = 0, n_y = 0;
    Vector u; // reduced velocity coefficients
    Vector p;
    double residual = 0.0;
};

// Incremental projector: nested basis columns are processed once; each sync
// extends the projected blocks and Riesz Gram tensors and records a
// generation mark.
class ReducedModelBuilder {
public:
    explicit ReducedModelBuilder(const TruthDiscretization& disc);

    void sync(const RBSpace& space);
    const ReducedModel& model() const { return model_; }

private:
    using MatrixLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

    const TruthDiscretization* disc_;
    SpdSolver x_solver_, y_solver_;
    ReducedModel model_;
    DenseMatrix zu_, zp_; // accepted basis copies (columns only ever appended)
    DenseMatrix r1_reps_f_, r1_reps_a_, r1_reps_b_;
    DenseMatrix r2_reps_g_, r2_reps_b_;
    // Extended-precision shadows of the Riesz Gram blocks: the factored
    // dual-norm path needs Gram data accurate beyond double storage, because
    // entry errors enter the residual square at zeroth order.
    MatrixLD g1_ff_, g1_fa_, g1_fb_, g1_aa_, g1_ab_, g1_bb_;
    MatrixLD g2_gg_, g2_gb_, g2_bb_;
};

// One-shot projection of the truth model onto the given space.
ReducedModel project(const TruthDiscretization& disc, const RBSpace& space);

Vector eval_theta_list(const std::vector<Theta>& thetas, const ParameterDomain& domain,
                       const Vector& mu);

// Dense reduced saddle solve at the stored generation (default: latest).
RBSolution online_solve(const ReducedModel& model, const Vector& mu, int generation = -1);

// (|r1|_{X'}, |r2|_{Y'}) via the factored Riesz Gram expansion.
std::pair<double, double> residual_dual_norms(const ReducedModel& model, const Vector& mu,
                                              const RBSolution& sol);

// Truth-level residual vectors (free velocity dofs / pressure dofs).
Vector truth_residual_1(const TruthDiscretization& disc, const RBSpace& space, const Vector& mu,
                        const RBSolution& sol);
Vector truth_residual_2(const TruthDiscretization& disc, const RBSpace& space, const Vector& mu,
                        const RBSolution& sol);

// |r1|_{X',mu} computed exactly at truth level (validation mode).
double energy_residual_norm_exact(const TruthDiscretization& disc, const RBSpace& space,
                                  const Vector& mu, const RBSolution& sol);

// Fast-mode sandwich |r1|_{X'}/sqrt(gamma) <= |r1|_{X',mu} <= |r1|_{X'}/sqrt(alpha).
std::pair<double, double> energy_residual_sandwich(double r1_dual, double alpha, double gamma);

} // namespace rbs
