#include "rbsaddle/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <cmath>
#include <random>

namespace rbs {

Vector seeded_vector(Index n, unsigned seed) {
    std::mt19937_64 gen(seed);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        // explicit bit conversion keeps the stream platform-independent
        const double u = static_cast<double>(gen() >> 11) * 0x1p-53;
        v[i] = 2.0 * u - 1.0;
    }
    return v;
}

SpdSolver::SpdSolver(const SparseMatrix& M) : n_(M.rows()) {
    if (M.rows() != M.cols()) throw NotSPD("SpdSolver: matrix not square");
    ldlt_.compute(M);
    if (ldlt_.info() != Eigen::Success)
        throw NotSPD("SpdSolver: factorization failed");
    if (ldlt_.vectorD().minCoeff() <= 0.0)
        throw NotSPD("SpdSolver: nonpositive pivot");
}

Vector SpdSolver::solve(const Vector& rhs) const { return ldlt_.solve(rhs); }

Vector solve_spd(const SparseMatrix& M, const Vector& rhs, double rel_tol) {
    SpdSolver solver(M);
    Vector x = solver.solve(rhs);
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0) {
        const double res = (M * x - rhs).norm() / rhs_norm;
        if (!std::isfinite(res) || res > rel_tol)
            throw Singular("solve_spd: residual " + std::to_string(res));
    }
    return x;
}

namespace {

SparseMatrix saddle_block(const SparseMatrix& A, const SparseMatrix& B) {
    const Index nu = A.rows();
    const Index np = B.rows();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(A.nonZeros() + 2 * B.nonZeros()));
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(B, k); it; ++it) {
            trips.emplace_back(nu + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), nu + it.row(), it.value());
        }
    SparseMatrix K(nu + np, nu + np);
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

} // namespace

SaddleSolver::SaddleSolver(const SparseMatrix& A, const SparseMatrix& B)
    : nu_(A.rows()), np_(B.rows()) {
    if (A.rows() != A.cols() || B.cols() != A.rows())
        throw SingularSystem("SaddleSolver: inconsistent block dimensions");
    SparseMatrix K = saddle_block(A, B);
    lu_.compute(K);
    if (lu_.info() != Eigen::Success)
        throw SingularSystem("SaddleSolver: singular saddle system");
}

std::pair<Vector, Vector> SaddleSolver::solve(const Vector& f, const Vector& g) const {
    Vector rhs(nu_ + np_);
    rhs.head(nu_) = f;
    rhs.tail(np_) = g;
    Vector sol = lu_.solve(rhs);
    if (!sol.allFinite())
        throw SingularSystem("SaddleSolver: non-finite solution");
    return {sol.head(nu_), sol.tail(np_)};
}

std::pair<Vector, Vector> solve_saddle(const SparseMatrix& A, const SparseMatrix& B,
                                       const Vector& f, const Vector& g, double rel_tol) {
    SaddleSolver solver(A, B);
    auto [u, p] = solver.solve(f, g);
    const double rhs_norm = std::sqrt(f.squaredNorm() + g.squaredNorm());
    if (rhs_norm > 0.0) {
        const double ru = (A * u + SparseMatrix(B.transpose()) * p - f).norm();
        const double rp = (B * u - g).norm();
        const double res = std::sqrt(ru * ru + rp * rp) / rhs_norm;
        if (!std::isfinite(res) || res > rel_tol)
            throw SingularSystem("solve_saddle: residual " + std::to_string(res));
    }
    return {u, p};
}

EigenResult lanczos_extreme(const VecOp& apply_T, const VecOp& apply_B, Index n,
                            EigWhich which, const EigOptions& opts) {
    const int m_max = static_cast<int>(std::min<Index>(opts.max_dim, n));
    std::vector<Vector> V, BV;
    V.reserve(m_max);
    BV.reserve(m_max);

    Vector v = seeded_vector(n, opts.seed);
    Vector Bv = apply_B(v);
    double nrm = std::sqrt(v.dot(Bv));
    if (!(nrm > 0.0)) throw NoConvergence("lanczos: degenerate start vector");
    v /= nrm;
    Bv /= nrm;
    V.push_back(v);
    BV.push_back(Bv);

    std::vector<double> alpha, beta; // tridiagonal entries
    EigenResult best;
    double prev_beta = 0.0;
    bool breakdown = false;

    for (int j = 0; j < m_max; ++j) {
        Vector w = apply_T(V[j]);
        const double a = BV[j].dot(w);
        alpha.push_back(a);
        w -= a * V[j];
        if (j > 0) w -= prev_beta * V[j - 1];
        // two passes of full reorthogonalization in the B-inner product
        for (int pass = 0; pass < 2; ++pass)
            for (size_t i = 0; i < V.size(); ++i)
                w -= BV[i].dot(w) * V[i];

        Vector Bw = apply_B(w);
        double b = std::sqrt(std::max(0.0, w.dot(Bw)));

        const int m = j + 1;
        Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            Tm(i, i) = alpha[static_cast<size_t>(i)];
            if (i > 0) {
                Tm(i, i - 1) = beta[static_cast<size_t>(i - 1)];
                Tm(i - 1, i) = beta[static_cast<size_t>(i - 1)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
        const int idx = (which == EigWhich::Max) ? m - 1 : 0;
        const double theta = es.eigenvalues()[idx];
        const Eigen::VectorXd s = es.eigenvectors().col(idx);
        const double ritz_res = std::abs(b * s[m - 1]);

        best.value = theta;
        best.iterations = m;
        best.residual_norm = (theta != 0.0) ? ritz_res / std::abs(theta) : ritz_res;

        const bool converged = best.residual_norm <= opts.tol;
        breakdown = b <= 1e-14 * std::abs(a);
        if (converged || breakdown || m == m_max) {
            Vector ritz = Vector::Zero(n);
            for (int i = 0; i < m; ++i) ritz += s[i] * V[static_cast<size_t>(i)];
            best.vector = ritz;
            if (converged || breakdown) return best;
            break;
        }
        beta.push_back(b);
        prev_beta = b;
        v = w / b;
        Bv = apply_B(v);
        V.push_back(v);
        BV.push_back(Bv);
    }
    if (breakdown) return best;
    throw NoConvergence("lanczos: no convergence after " + std::to_string(best.iterations) +
                        " iterations (residual " + std::to_string(best.residual_norm) + ")");
}

namespace {

double pencil_residual(const SparseMatrix& M, const SparseMatrix& G, double lambda,
                       const Vector& v) {
    const Vector Mv = M * v;
    const Vector Gv = G * v;
    const double denom = Mv.norm() + std::abs(lambda) * Gv.norm();
    if (denom == 0.0) return 0.0;
    return (Mv - lambda * Gv).norm() / denom;
}

EigenResult dense_eig_extreme(const SparseMatrix& M, const SparseMatrix& G, EigWhich which) {
    Eigen::MatrixXd Md = Eigen::MatrixXd(M);
    Eigen::MatrixXd Gd = Eigen::MatrixXd(G);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Md, Gd);
    if (es.info() != Eigen::Success)
        throw NoConvergence("eig_extreme: dense solver failed");
    const Index idx = (which == EigWhich::Max) ? M.rows() - 1 : 0;
    EigenResult r;
    r.value = es.eigenvalues()[idx];
    r.vector = es.eigenvectors().col(idx);
    r.iterations = 1;
    r.residual_norm = pencil_residual(M, G, r.value, r.vector);
    return r;
}

EigenResult iterative_eig_extreme(const SparseMatrix& M, const SparseMatrix& G, EigWhich which,
                                  const EigOptions& opts);

} // namespace

EigenResult eig_extreme(const SparseMatrix& M, const SparseMatrix& G, EigWhich which,
                        const EigOptions& opts) {
    if (M.rows() != M.cols() || G.rows() != G.cols() || M.rows() != G.rows())
        throw NoConvergence("eig_extreme: dimension mismatch");
    const Index n = M.rows();
    if (n <= opts.dense_threshold) return dense_eig_extreme(M, G, which);
    try {
        return iterative_eig_extreme(M, G, which, opts);
    } catch (const NoConvergence&) {
        // tightly clustered extremes (e.g. the continuity constant at the
        // reference parameter) defeat Lanczos; fall back to the dense path
        // while the problem is still desk-sized
        if (n <= 8000) return dense_eig_extreme(M, G, which);
        throw;
    }
}

namespace {

EigenResult iterative_eig_extreme(const SparseMatrix& M, const SparseMatrix& G, EigWhich which,
                                  const EigOptions& opts) {
    const Index n = M.rows();
    EigOptions inner = opts;
    inner.tol = std::min(opts.tol, 1e-10);
    auto apply_G = [&](const Vector& x) { return Vector(G * x); };

    EigenResult result;
    if (which == EigWhich::Min) {
        // shift-invert at zero: largest eigenvalue of M^{-1} G equals 1/lambda_min;
        // requires M SPD, which covers the pencils used in this project
        SpdSolver msolve(M);
        auto apply_T = [&](const Vector& x) { return msolve.solve(G * x); };
        EigenResult lz = lanczos_extreme(apply_T, apply_G, n, EigWhich::Max, inner);
        result.value = 1.0 / lz.value;
        result.vector = lz.vector;
        result.iterations = lz.iterations;
    } else {
        SpdSolver gsolve(G);
        auto apply_T = [&](const Vector& x) { return gsolve.solve(M * x); };
        EigenResult lz = lanczos_extreme(apply_T, apply_G, n, EigWhich::Max, inner);
        result.value = lz.value;
        result.vector = lz.vector;
        result.iterations = lz.iterations;
    }
    const double vnorm = result.vector.norm();
    if (vnorm > 0.0) result.vector /= vnorm;
    result.residual_norm = pencil_residual(M, G, result.value, result.vector);
    if (result.residual_norm > 1e-8)
        throw NoConvergence("eig_extreme: pencil residual " +
                            std::to_string(result.residual_norm));
    return result;
}

} // namespace

} // namespace rbs
