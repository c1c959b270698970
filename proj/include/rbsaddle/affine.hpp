#pragma once

// Parameter domains and affine decompositions sum_q theta_q(mu) * term_q.
// Theta functions are explicit expression trees so they can travel inside
// the offline artifact.

#include "rbsaddle/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace rbs {

struct ParameterDomain {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }

    bool contains(const Vector& mu, double tol = 1e-12) const {
        if (mu.size() != dim()) return false;
        for (Index i = 0; i < dim(); ++i)
            if (mu[i] < lower[i] - tol || mu[i] > upper[i] + tol) return false;
        return true;
    }

    Vector center() const { return 0.5 * (lower + upper); }

    void require(const Vector& mu) const {
        if (!contains(mu)) throw OutOfDomain("parameter outside the domain box");
    }
};

// Rational expression in the parameter components.
class ThetaExpr {
public:
    enum class Kind { Const, Coord, Add, Sub, Mul, Div };
    using Ptr = std::shared_ptr<const ThetaExpr>;

    static Ptr constant(double c);
    static Ptr coord(int i);
    static Ptr add(Ptr a, Ptr b);
    static Ptr sub(Ptr a, Ptr b);
    static Ptr mul(Ptr a, Ptr b);
    static Ptr div(Ptr a, Ptr b);

    double eval(const Vector& mu) const;

    // Compact prefix serialization, e.g. "(/ (c 1.5) (- (c 1) (m 0)))".
    std::string serialize() const;
    static Ptr parse(const std::string& text);

    Kind kind() const { return kind_; }

private:
    ThetaExpr(Kind k, double value, int index, Ptr lhs, Ptr rhs)
        : kind_(k), value_(value), index_(index), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

    Kind kind_;
    double value_ = 0.0;
    int index_ = 0;
    Ptr lhs_, rhs_;
};

using Theta = ThetaExpr::Ptr;

template <typename Term>
struct AffineDecomposition {
    std::vector<Theta> thetas;
    std::vector<Term> terms;

    Index q() const { return static_cast<Index>(thetas.size()); }
};

using AffineMatrix = AffineDecomposition<SparseMatrix>;
using AffineVector = AffineDecomposition<Vector>;

template <typename Term>
Vector eval_thetas(const AffineDecomposition<Term>& dec, const ParameterDomain& domain,
                   const Vector& mu) {
    domain.require(mu);
    Vector coeffs(dec.q());
    for (Index q = 0; q < dec.q(); ++q) {
        coeffs[q] = dec.thetas[static_cast<size_t>(q)]->eval(mu);
        if (!std::isfinite(coeffs[q]))
            throw OutOfDomain("theta evaluated non-finite inside the domain");
    }
    return coeffs;
}

template <typename Term>
Term assemble_at(const AffineDecomposition<Term>& dec, const ParameterDomain& domain,
                 const Vector& mu) {
    const Vector coeffs = eval_thetas(dec, domain, mu);
    Term out = coeffs[0] * dec.terms[0];
    for (Index q = 1; q < dec.q(); ++q)
        out += coeffs[q] * dec.terms[static_cast<size_t>(q)];
    return out;
}

} // namespace rbs
