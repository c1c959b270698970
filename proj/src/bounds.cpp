#include "rbsaddle/bounds.hpp"

#include <Eigen/LU>

#include <cmath>

namespace rbs {
namespace {

void check_sym_constants(const ConstantBounds& c) {
    if (c.alpha_lb <= 0.0 || c.gamma_ub <= 0.0 || c.beta_br_lb <= 0.0)
        throw NonpositiveConstant("bound requires positive alpha_lb, gamma_ub, beta_br_lb");
}

} // namespace

double delta_u_sym(double r1, double r2, const ConstantBounds& c) {
    check_sym_constants(c);
    return r1 / c.alpha_lb + std::sqrt(c.gamma_ub / c.alpha_lb) * r2 / c.beta_br_lb;
}

double delta_p_sym(double r1, double r2, const ConstantBounds& c) {
    check_sym_constants(c);
    const double kappa = std::sqrt(c.gamma_ub / c.alpha_lb);
    return (1.0 + kappa) * r1 / c.beta_br_lb + (c.gamma_ub / c.beta_br_lb) * (r2 / c.beta_br_lb);
}

double delta_combined_sym(double du, double dp) { return std::sqrt(du * du + dp * dp); }

double delta_u_energy(double r1, double r2, const ConstantBounds& c) {
    check_sym_constants(c);
    return r1 / std::sqrt(c.alpha_lb) + std::sqrt(c.gamma_ub) * r2 / c.beta_br_lb;
}

double delta_u_general(double r1, double r2, const ConstantBounds& c) {
    check_sym_constants(c);
    return r1 / c.alpha_lb + (1.0 + c.gamma_ub / c.alpha_lb) * r2 / c.beta_br_lb;
}

double delta_p_general(double r1, double r2, const ConstantBounds& c) {
    check_sym_constants(c);
    const double factor = 1.0 + c.gamma_ub / c.alpha_lb;
    return factor * r1 / c.beta_br_lb + (c.gamma_ub / c.beta_br_lb) * factor * (r2 / c.beta_br_lb);
}

double delta_combined_general(double du, double dp) { return std::sqrt(du * du + dp * dp); }

double delta_babuska(double r1, double r2, double beta_ba_lb) {
    if (beta_ba_lb <= 0.0)
        throw NonpositiveConstant("combined-residual bound requires positive beta_ba_lb");
    return std::sqrt(r1 * r1 + r2 * r2) / beta_ba_lb;
}

std::pair<double, double> delta_tilde_beta_pair(double r1_energy, double r2, double tilde_beta) {
    if (tilde_beta <= 0.0)
        throw NonpositiveConstant("energy-residual bound requires positive tilde-beta");
    const double du = r1_energy + r2 / tilde_beta;
    const double dp = 2.0 * r1_energy / tilde_beta + r2 / (tilde_beta * tilde_beta);
    return {du, dp};
}

double effectivity(double delta, double error) {
    if (error < 1e-13) throw ZeroError("true error below 1e-13: effectivity is not a value");
    return delta / error;
}

TrueErrors true_errors(const TruthDiscretization& disc, const RBSpace& space, const Vector& mu,
                       const RBSolution& sol) {
    const TruthSolution truth = truth_solve(disc, mu);
    const Vector eu = truth.u - space.zu.leftCols(sol.n_x) * sol.u;
    const Vector ep = truth.p - space.zp.leftCols(sol.n_y) * sol.p;
    const SparseMatrix a_mu = assemble_at(disc.a, disc.domain, mu);

    TrueErrors e;
    e.eu_x = std::sqrt(std::max(0.0, eu.dot(disc.x_gram * eu)));
    e.eu_energy = std::sqrt(std::max(0.0, eu.dot(a_mu * eu)));
    e.ep_y = std::sqrt(std::max(0.0, ep.dot(disc.y_gram * ep)));
    e.e_z = std::sqrt(e.eu_x * e.eu_x + e.ep_y * e.ep_y);
    return e;
}

BoundReport bound_report(const ReducedModel& model, const Vector& mu, const RBSolution& sol,
                         const ConstantBounds& c, double r1_energy) {
    BoundReport rep;
    rep.mu = mu;
    rep.n_x = sol.n_x;
    rep.n_y = sol.n_y;
    rep.n_z = sol.n_x + sol.n_y;
    rep.constants = c;

    const auto [r1, r2] = residual_dual_norms(model, mu, sol);
    rep.r1 = r1;
    rep.r2 = r2;

    rep.du_sym = delta_u_sym(r1, r2, c);
    rep.dp_sym = delta_p_sym(r1, r2, c);
    rep.d_sym = delta_combined_sym(rep.du_sym, rep.dp_sym);
    rep.du_energy = delta_u_energy(r1, r2, c);
    rep.du_gen = delta_u_general(r1, r2, c);
    rep.dp_gen = delta_p_general(r1, r2, c);
    rep.d_br = delta_combined_general(rep.du_gen, rep.dp_gen);
    rep.d_ba = c.beta_ba_lb > 0.0 ? delta_babuska(r1, r2, c.beta_ba_lb) : -1.0;
    if (c.tilde_beta > 0.0 && std::isfinite(r1_energy))
        std::tie(rep.du_tilde, rep.dp_tilde) = delta_tilde_beta_pair(r1_energy, r2, c.tilde_beta);
    return rep;
}

namespace {

double safe_eff(double delta, double error) {
    if (error < 1e-13) return std::numeric_limits<double>::quiet_NaN();
    return delta / error;
}

} // namespace

void attach_errors(BoundReport& report, const TruthDiscretization& disc, const RBSpace& space,
                   const RBSolution& sol) {
    report.errors = true_errors(disc, space, report.mu, sol);
    report.has_errors = true;
    const TrueErrors& e = report.errors;
    report.eta_u_energy = safe_eff(report.du_energy, e.eu_energy);
    report.eta_u_sym = safe_eff(report.du_sym, e.eu_x);
    report.eta_p_sym = safe_eff(report.dp_sym, e.ep_y);
    report.eta_sym = safe_eff(report.d_sym, e.e_z);
    report.eta_u_br = safe_eff(report.du_gen, e.eu_x);
    report.eta_p_br = safe_eff(report.dp_gen, e.ep_y);
    report.eta_br = safe_eff(report.d_br, e.e_z);
    if (report.d_ba >= 0.0) {
        report.eta_u_ba = safe_eff(report.d_ba, e.eu_x);
        report.eta_p_ba = safe_eff(report.d_ba, e.ep_y);
        report.eta_ba = safe_eff(report.d_ba, e.e_z);
    }
}

AprioriRecord verify_apriori(const TruthDiscretization& disc, const RBSpace& space,
                             const Vector& mu, const RBSolution& sol, const ConstantBounds& c) {
    if (c.alpha_lb <= 0.0 || c.gamma_ub <= 0.0)
        throw NonpositiveConstant("a priori verification requires exact alpha, gamma");
    const Index nx = sol.n_x, ny = sol.n_y;
    const SparseMatrix b_mu = assemble_at(disc.b, disc.domain, mu);
    const Vector g_mu = assemble_at(disc.g, disc.domain, mu);
    const DenseMatrix zu = space.zu.leftCols(nx);
    const DenseMatrix zp = space.zp.leftCols(ny);
    const DenseMatrix bn = zp.transpose() * (b_mu * zu);
    const Vector gn = zp.transpose() * g_mu;

    const TruthSolution truth = truth_solve(disc, mu);

    // Pressure infimum: Y-Gram-orthogonal projection onto the pressure space.
    const Vector yp = disc.y_gram * truth.p;
    const Vector q_star = zp.transpose() * yp;
    const double p_norm_sq = truth.p.dot(yp);
    const double inf_p = std::sqrt(std::max(0.0, p_norm_sq - q_star.squaredNorm()));

    // Constrained velocity infimum: with an X-orthonormal basis the target is
    // min |v - v*|^2 subject to B_N v = g_N, where v* is the unconstrained
    // X-Gram projection of the truth velocity.
    const Vector xu = disc.x_gram * truth.u;
    const Vector v_star = zu.transpose() * xu;
    Vector v = v_star;
    if (ny > 0) {
        const DenseMatrix bbT = bn * bn.transpose();
        Eigen::FullPivLU<DenseMatrix> lu(bbT);
        if (!lu.isInvertible())
            throw InfeasibleConstraint("reduced constraint operator is rank deficient");
        const Vector lambda = lu.solve(gn - bn * v_star);
        v = v_star + bn.transpose() * lambda;
        const double feas = (bn * v - gn).norm();
        if (!(feas <= 1e-8 * std::max(1.0, gn.norm())))
            throw InfeasibleConstraint("constraint residual too large after projection");
    }
    const double u_norm_sq = truth.u.dot(xu);
    const double inf_u_sq = u_norm_sq - 2.0 * v.dot(v_star) + v.squaredNorm();
    const double inf_u = std::sqrt(std::max(0.0, inf_u_sq));

    AprioriRecord rec;
    rec.inf_u = inf_u;
    rec.inf_p = inf_p;
    rec.beta_n = rb_infsup(space, b_mu);

    const TrueErrors e = true_errors(disc, space, mu, sol);
    const double kappa = std::sqrt(c.gamma_ub / c.alpha_lb);
    rec.lhs_u = e.eu_x;
    rec.rhs_u = 2.0 * kappa * inf_u + (c.gamma_b_ub / c.alpha_lb) * inf_p;
    rec.lhs_p = e.ep_y;
    if (!(rec.beta_n > 0.0) || !std::isfinite(rec.beta_n))
        throw StabilityLoss("a priori pressure estimate needs a stable pair");
    rec.rhs_p = (1.0 + (c.gamma_b_ub / rec.beta_n) * (1.0 + kappa)) * inf_p +
                2.0 * (c.gamma_ub / rec.beta_n) * inf_u;
    // Small additive slack absorbs roundoff in the near-zero snapshot case.
    const double slack = 1e-11;
    rec.holds_u = rec.lhs_u <= rec.rhs_u + slack;
    rec.holds_p = rec.lhs_p <= rec.rhs_p + slack;
    return rec;
}

} // namespace rbs
