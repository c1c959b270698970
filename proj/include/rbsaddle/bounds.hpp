#pragma once

// A posteriori error bounds for the reduced saddle-point approximation:
// residual-based bounds exploiting symmetry, the general-theory comparison
// bounds, a combined-residual bound from inf-sup stability of the full
// operator, effectivities, and a numerical verifier for the a priori
// best-approximation estimates.

#include "rbsaddle/constants.hpp"
#include "rbsaddle/rb_online.hpp"

#include <limits>
#include <utility>

namespace rbs {

// Velocity bound in the X-norm: r1/alpha_lb + sqrt(gamma_ub/alpha_lb) * r2/beta_br_lb.
double delta_u_sym(double r1, double r2, const ConstantBounds& c);
// Pressure bound: (1 + sqrt(gamma_ub/alpha_lb)) * r1/beta_br_lb
//                 + (gamma_ub/beta_br_lb) * r2/beta_br_lb.
double delta_p_sym(double r1, double r2, const ConstantBounds& c);
double delta_combined_sym(double du, double dp);
// Velocity bound in the energy norm: r1/sqrt(alpha_lb) + sqrt(gamma_ub) * r2/beta_br_lb.
double delta_u_energy(double r1, double r2, const ConstantBounds& c);

// Comparison bounds from the general (nonsymmetric) theory.
double delta_u_general(double r1, double r2, const ConstantBounds& c);
double delta_p_general(double r1, double r2, const ConstantBounds& c);
double delta_combined_general(double du, double dp);

// Combined-residual bound sqrt(r1^2 + r2^2) / beta_ba_lb.
double delta_babuska(double r1, double r2, double beta_ba_lb);

// Energy-residual bounds using the natural inf-sup constant tilde-beta:
// (r1_energy + r2/tb, 2*r1_energy/tb + r2/tb^2).
std::pair<double, double> delta_tilde_beta_pair(double r1_energy, double r2, double tilde_beta);

// delta / error; throws ZeroError when the error is below 1e-13.
double effectivity(double delta, double error);

struct TrueErrors {
    double eu_x = 0;      // |e_u|_X
    double eu_energy = 0; // |e_u|_{X,mu}
    double ep_y = 0;      // |e_p|_Y
    double e_z = 0;       // sqrt(eu_x^2 + ep_y^2)
};

TrueErrors true_errors(const TruthDiscretization& disc, const RBSpace& space, const Vector& mu,
                       const RBSolution& sol);

struct BoundReport {
    Vector mu;
    Index n_x = 0, n_y = 0, n_z = 0;
    double r1 = 0, r2 = 0;
    ConstantBounds constants;

    double du_sym = 0, dp_sym = 0, d_sym = 0;
    double du_energy = 0;
    double du_gen = 0, dp_gen = 0, d_br = 0;
    double d_ba = 0;
    double du_tilde = -1, dp_tilde = -1; // -1 when the tilde-beta pair was not evaluated

    bool has_errors = false;
    TrueErrors errors;

    // Effectivities; NaN marks a point excluded from statistics (error ~ 0).
    double eta_u_energy = 0, eta_u_sym = 0, eta_p_sym = 0, eta_sym = 0;
    double eta_u_br = 0, eta_p_br = 0, eta_br = 0;
    double eta_u_ba = 0, eta_p_ba = 0, eta_ba = 0;
};

// Residual norms plus every bound at (mu, sol). The tilde-beta pair is filled
// when c.tilde_beta > 0 and a finite energy residual norm is supplied.
BoundReport bound_report(const ReducedModel& model, const Vector& mu, const RBSolution& sol,
                         const ConstantBounds& c,
                         double r1_energy = std::numeric_limits<double>::quiet_NaN());

// Attaches true errors and effectivities (NaN where the error vanishes).
void attach_errors(BoundReport& report, const TruthDiscretization& disc, const RBSpace& space,
                   const RBSolution& sol);

struct AprioriRecord {
    double inf_u = 0; // constrained velocity best-approximation error
    double inf_p = 0; // pressure best-approximation error
    double beta_n = 0;
    double lhs_u = 0, rhs_u = 0;
    double lhs_p = 0, rhs_p = 0;
    bool holds_u = false, holds_p = false;
};

// Evaluates both sides of the a priori best-approximation estimates with
// exact constants; the velocity infimum is an equality-constrained
// least-squares problem in the X-Gram metric.
AprioriRecord verify_apriori(const TruthDiscretization& disc, const RBSpace& space,
                             const Vector& mu, const RBSolution& sol, const ConstantBounds& c);

} // namespace rbs
