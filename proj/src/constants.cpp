#include "rbsaddle/constants.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace rbs {

namespace {

// Extremal eigenvalue of the Schur pencil (B M^{-1} B^T, Y) with M SPD.
double schur_extreme(const SparseMatrix& m, const SparseMatrix& b, const SparseMatrix& y,
                     EigWhich which, const EigOptions& opts) {
    const Index nv = m.rows();
    const Index np = b.rows();
    if (np == 0) throw NoConvergence("schur_extreme: empty pressure space");
    if (b.nonZeros() == 0) {
        if (which == EigWhich::Max) return 0.0;
        throw StabilityLoss("schur pencil is identically zero");
    }
    if (nv <= opts.dense_threshold) {
        const Eigen::MatrixXd md(m), bd(b), yd(y);
        const Eigen::MatrixXd s = bd * md.ldlt().solve(bd.transpose());
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(s, yd);
        if (es.info() != Eigen::Success)
            throw NoConvergence("schur_extreme: dense solver failed");
        return (which == EigWhich::Max) ? es.eigenvalues()[np - 1] : es.eigenvalues()[0];
    }
    auto apply_y = [&](const Vector& q) { return Vector(y * q); };
    if (which == EigWhich::Max) {
        SpdSolver msolve(m);
        SpdSolver ysolve(y);
        const SparseMatrix bt = b.transpose();
        auto apply_t = [&](const Vector& q) { return ysolve.solve(b * msolve.solve(bt * q)); };
        return lanczos_extreme(apply_t, apply_y, np, EigWhich::Max, opts).value;
    }
    // shift-invert: largest eigenvalue of S^{-1} Y equals 1/lambda_min
    SaddleSolver ksolve(m, b);
    auto apply_t = [&](const Vector& q) {
        auto [u, yvec] = ksolve.solve(Vector::Zero(m.rows()), Vector(y * q));
        return Vector(-yvec);
    };
    const double theta = lanczos_extreme(apply_t, apply_y, np, EigWhich::Max, opts).value;
    if (!(theta > 0.0)) throw StabilityLoss("schur pencil has nonpositive spectrum");
    return 1.0 / theta;
}

SparseMatrix block_diag(const SparseMatrix& x, const SparseMatrix& y) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(x.nonZeros() + y.nonZeros()));
    for (int k = 0; k < x.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(x, k); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    const Index nx = x.rows();
    for (int k = 0; k < y.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(y, k); it; ++it)
            trips.emplace_back(nx + it.row(), nx + it.col(), it.value());
    SparseMatrix z(nx + y.rows(), nx + y.rows());
    z.setFromTriplets(trips.begin(), trips.end());
    return z;
}

} // namespace

double alpha_exact(const TruthDiscretization& disc, const Vector& mu, const EigOptions& opts) {
    const SparseMatrix a = assemble_at(disc.a, disc.domain, mu);
    return eig_extreme(a, disc.x_gram, EigWhich::Min, opts).value;
}

double gamma_exact(const TruthDiscretization& disc, const Vector& mu, const EigOptions& opts) {
    const SparseMatrix a = assemble_at(disc.a, disc.domain, mu);
    return eig_extreme(a, disc.x_gram, EigWhich::Max, opts).value;
}

double gamma_b_exact(const TruthDiscretization& disc, const Vector& mu, const EigOptions& opts) {
    const SparseMatrix b = assemble_at(disc.b, disc.domain, mu);
    const double lam = schur_extreme(disc.x_gram, b, disc.y_gram, EigWhich::Max, opts);
    return std::sqrt(std::max(0.0, lam));
}

double beta_brezzi_exact(const TruthDiscretization& disc, const Vector& mu,
                         const EigOptions& opts) {
    const SparseMatrix b = assemble_at(disc.b, disc.domain, mu);
    double lam;
    try {
        lam = schur_extreme(disc.x_gram, b, disc.y_gram, EigWhich::Min, opts);
    } catch (const SingularSystem&) {
        throw StabilityLoss("beta_brezzi: rank-deficient divergence operator");
    }
    if (lam <= 1e-10)
        throw StabilityLoss("beta_brezzi: inf-sup constant vanished (" + std::to_string(lam) + ")");
    return std::sqrt(lam);
}

double tilde_beta_exact(const TruthDiscretization& disc, const Vector& mu,
                        const EigOptions& opts) {
    const SparseMatrix a = assemble_at(disc.a, disc.domain, mu);
    const SparseMatrix b = assemble_at(disc.b, disc.domain, mu);
    double lam;
    try {
        lam = schur_extreme(a, b, disc.y_gram, EigWhich::Min, opts);
    } catch (const SingularSystem&) {
        throw StabilityLoss("tilde_beta: rank-deficient divergence operator");
    }
    if (!(lam > 0.0)) throw StabilityLoss("tilde_beta: nonpositive");
    return std::sqrt(lam);
}

double beta_babuska_exact(const TruthDiscretization& disc, const Vector& mu,
                          const EigOptions& opts) {
    const SparseMatrix a = assemble_at(disc.a, disc.domain, mu);
    const SparseMatrix b = assemble_at(disc.b, disc.domain, mu);
    const Index np = b.rows();
    if (np == 0 || b.nonZeros() == 0)
        return eig_extreme(a, disc.x_gram, EigWhich::Min, opts).value;

    const SparseMatrix z = block_diag(disc.x_gram, disc.y_gram);
    const Index nz = z.rows();
    if (nz <= opts.dense_threshold) {
        // dense route: lambda_min of (K Z^{-1} K, Z)
        Eigen::MatrixXd kd = Eigen::MatrixXd::Zero(nz, nz);
        kd.topLeftCorner(a.rows(), a.cols()) = Eigen::MatrixXd(a);
        kd.bottomLeftCorner(np, a.cols()) = Eigen::MatrixXd(b);
        kd.topRightCorner(a.rows(), np) = Eigen::MatrixXd(b).transpose();
        const Eigen::MatrixXd zd(z);
        const Eigen::MatrixXd m2 = kd * zd.ldlt().solve(kd);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(m2, zd);
        if (es.info() != Eigen::Success)
            throw NoConvergence("beta_babuska: dense solver failed");
        return std::sqrt(std::max(0.0, es.eigenvalues()[0]));
    }
    SaddleSolver ksolve(a, b);
    const Index nv = a.rows();
    auto apply_k_inv = [&](const Vector& x) {
        auto [u, p] = ksolve.solve(x.head(nv), x.tail(np));
        Vector out(nz);
        out.head(nv) = u;
        out.tail(np) = p;
        return out;
    };
    auto apply_z = [&](const Vector& x) { return Vector(z * x); };
    auto apply_t = [&](const Vector& x) { return apply_k_inv(apply_z(apply_k_inv(apply_z(x)))); };
    const double theta = lanczos_extreme(apply_t, apply_z, nz, EigWhich::Max, opts).value;
    if (!(theta > 0.0)) throw NoConvergence("beta_babuska: degenerate spectrum");
    return std::sqrt(1.0 / theta);
}

ConstantBounds exact_bounds(const TruthDiscretization& disc, const Vector& mu,
                            bool with_babuska, const EigOptions& opts) {
    ConstantBounds c;
    c.mode = ConstantsMode::Exact;
    const double alpha = alpha_exact(disc, mu, opts);
    const double gamma = gamma_exact(disc, mu, opts);
    const double beta = beta_brezzi_exact(disc, mu, opts);
    c.alpha_lb = c.alpha_ub = alpha;
    c.gamma_lb = c.gamma_ub = gamma;
    c.gamma_b_ub = gamma_b_exact(disc, mu, opts);
    c.beta_br_lb = c.beta_br_ub = beta;
    c.tilde_beta = tilde_beta_exact(disc, mu, opts);
    if (with_babuska) c.beta_ba_lb = beta_babuska_exact(disc, mu, opts);
    return c;
}

SurrogateModel build_surrogate(const TruthDiscretization& disc,
                               const std::vector<Vector>& training_mus, const EigOptions& opts) {
    if (training_mus.empty()) throw EmptyTrainingSet("build_surrogate: no training parameters");
    SurrogateModel model;
    model.samples.reserve(training_mus.size());
    for (const Vector& mu : training_mus) {
        TrainingSample s;
        s.mu = mu;
        s.alpha = alpha_exact(disc, mu, opts);
        s.gamma = gamma_exact(disc, mu, opts);
        s.beta_br = beta_brezzi_exact(disc, mu, opts);
        model.samples.push_back(std::move(s));
    }
    // per-term coercivity floors for the min-theta route; terms are typically
    // only positive semidefinite, in which case the floor is zero and the
    // nearest-sample fallback takes over
    model.a_term_min_eigs = Vector::Zero(disc.a.q());
    if (disc.x_gram.rows() <= opts.dense_threshold) {
        for (Index q = 0; q < disc.a.q(); ++q) {
            const double lam =
                eig_extreme(disc.a.terms[static_cast<size_t>(q)], disc.x_gram, EigWhich::Min, opts)
                    .value;
            model.a_term_min_eigs[q] = std::max(0.0, lam);
        }
    }
    return model;
}

namespace {

size_t nearest_index(const SurrogateModel& model, const Vector& mu) {
    if (model.samples.empty()) throw EmptyTrainingSet("surrogate: no training samples");
    size_t best = 0;
    double best_d = (model.samples[0].mu - mu).norm();
    for (size_t i = 1; i < model.samples.size(); ++i) {
        const double d = (model.samples[i].mu - mu).norm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

} // namespace

double nearest_sample_distance(const SurrogateModel& model, const Vector& mu) {
    return (model.samples[nearest_index(model, mu)].mu - mu).norm();
}

ConstantBounds surrogate_bounds(const TruthDiscretization& disc, const SurrogateModel& model,
                                const Vector& mu) {
    const TrainingSample& near = model.samples[nearest_index(model, mu)];
    ConstantBounds c;
    c.mode = ConstantsMode::Surrogate;

    // min-theta lower bound when the theta signs allow it
    const Vector thetas = eval_thetas(disc.a, disc.domain, mu);
    double min_theta = 0.0;
    bool applicable = thetas.minCoeff() >= 0.0;
    if (applicable) min_theta = thetas.dot(model.a_term_min_eigs);
    c.alpha_lb = (applicable && min_theta > 0.0) ? min_theta : model.safety_lb * near.alpha;
    c.alpha_ub = model.safety_ub * near.alpha;
    c.gamma_lb = model.safety_lb * near.gamma;
    c.gamma_ub = model.safety_ub * near.gamma;
    c.beta_br_lb = model.safety_lb * near.beta_br;
    c.beta_br_ub = model.safety_ub * near.beta_br;
    return c;
}

ConstantsCache::ConstantsCache(const TruthDiscretization& disc, ConstantsMode mode,
                               const SurrogateModel* surrogate, const EigOptions& opts)
    : disc_(disc), mode_(mode), surrogate_(surrogate), opts_(opts) {
    if (mode_ == ConstantsMode::Surrogate && surrogate_ == nullptr)
        throw EmptyTrainingSet("ConstantsCache: surrogate mode without a surrogate model");
}

const ConstantBounds& ConstantsCache::at(const Vector& mu, bool with_babuska) {
    std::vector<double> key(mu.data(), mu.data() + mu.size());
    auto it = cache_.find(key);
    if (it != cache_.end() && (!with_babuska || it->second.beta_ba_lb > 0.0)) return it->second;
    ConstantBounds c = (mode_ == ConstantsMode::Exact)
                           ? exact_bounds(disc_, mu, with_babuska, opts_)
                           : surrogate_bounds(disc_, *surrogate_, mu);
    auto [pos, inserted] = cache_.insert_or_assign(std::move(key), c);
    return pos->second;
}

void ConstantsCache::preload(const Vector& mu, const ConstantBounds& bounds) {
    std::vector<double> key(mu.data(), mu.data() + mu.size());
    cache_.insert_or_assign(std::move(key), bounds);
}

} // namespace rbs
