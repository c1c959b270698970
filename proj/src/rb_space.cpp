#include "rbsaddle/rb_space.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace rbs {

std::string role_name(BasisRole role) {
    switch (role) {
    case BasisRole::USnapshot: return "u-snapshot";
    case BasisRole::PSnapshot: return "p-snapshot";
    case BasisRole::Supremizer: return "supremizer";
    case BasisRole::ExtraSnapshot: return "extra-snapshot";
    }
    return "?";
}

BasisRole role_from_name(const std::string& name) {
    if (name == "u-snapshot") return BasisRole::USnapshot;
    if (name == "p-snapshot") return BasisRole::PSnapshot;
    if (name == "supremizer") return BasisRole::Supremizer;
    if (name == "extra-snapshot") return BasisRole::ExtraSnapshot;
    throw Error("unknown basis role: " + name);
}

InsertReport insert(RBSpace& space, const SparseMatrix& gram,
                    const std::vector<std::pair<Vector, BasisRole>>& vectors, WhichSpace which,
                    int generation, double rejection_tol) {
    DenseMatrix& z = (which == WhichSpace::X) ? space.zu : space.zp;
    auto& roles = (which == WhichSpace::X) ? space.u_roles : space.p_roles;
    auto& gens = (which == WhichSpace::X) ? space.u_generation : space.p_generation;

    InsertReport report;
    for (const auto& [vec, role] : vectors) {
        if (z.rows() == 0 && z.cols() == 0) z.resize(vec.size(), 0);
        Vector w = vec;
        const double pre_norm = std::sqrt(w.dot(gram * w));
        if (!(pre_norm > 0.0)) {
            ++report.rejected;
            continue;
        }
        // modified Gram-Schmidt, one extra pass
        for (int pass = 0; pass < 2; ++pass)
            for (Index j = 0; j < z.cols(); ++j) {
                const Vector gz = gram * z.col(j);
                w -= gz.dot(w) * z.col(j);
            }
        const double post_norm = std::sqrt(std::max(0.0, w.dot(gram * w)));
        if (post_norm < rejection_tol * pre_norm) {
            ++report.rejected;
            continue;
        }
        z.conservativeResize(Eigen::NoChange, z.cols() + 1);
        z.col(z.cols() - 1) = w / post_norm;
        roles.push_back(role);
        gens.push_back(generation);
        ++report.accepted;
    }
    return report;
}

Vector supremizer(const SpdSolver& x_solver, const SparseMatrix& b_mu, const Vector& q) {
    return x_solver.solve(SparseMatrix(b_mu.transpose()) * q);
}

Vector supremizer(const TruthDiscretization& disc, const Vector& mu, const Vector& q) {
    const SparseMatrix b = assemble_at(disc.b, disc.domain, mu);
    SpdSolver x_solver(disc.x_gram);
    return supremizer(x_solver, b, q);
}

double rb_infsup(const RBSpace& space, const SparseMatrix& b_mu) {
    if (space.n_y() == 0) return std::numeric_limits<double>::infinity();
    // more pressures than velocities: some pressure direction has no supremizer
    if (space.n_x() < space.n_y()) return 0.0;
    const DenseMatrix bn = space.zp.transpose() * (b_mu * space.zu);
    Eigen::JacobiSVD<DenseMatrix> svd(bn);
    return svd.singularValues().tail(1)[0];
}

double rb_infsup(const RBSpace& space, const TruthDiscretization& disc, const Vector& mu) {
    return rb_infsup(space, assemble_at(disc.b, disc.domain, mu));
}

} // namespace rbs
