#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace rbs {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Index = Eigen::Index;

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotSPD : public Error {
public:
    explicit NotSPD(const std::string& what) : Error(what) {}
};

class Singular : public Error {
public:
    explicit Singular(const std::string& what) : Error(what) {}
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& what) : Error(what) {}
};

class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& what) : Error(what) {}
};

class OutOfDomain : public Error {
public:
    explicit OutOfDomain(const std::string& what) : Error(what) {}
};

class InvalidGeometry : public Error {
public:
    explicit InvalidGeometry(const std::string& what) : Error(what) {}
};

class StabilityLoss : public Error {
public:
    explicit StabilityLoss(const std::string& what) : Error(what) {}
};

class EmptyTrainingSet : public Error {
public:
    explicit EmptyTrainingSet(const std::string& what) : Error(what) {}
};

class SingularReducedSystem : public Error {
public:
    explicit SingularReducedSystem(const std::string& what) : Error(what) {}
};

class NegativeNormSquare : public Error {
public:
    explicit NegativeNormSquare(const std::string& what) : Error(what) {}
};

class NonpositiveConstant : public Error {
public:
    explicit NonpositiveConstant(const std::string& what) : Error(what) {}
};

class InfeasibleConstraint : public Error {
public:
    explicit InfeasibleConstraint(const std::string& what) : Error(what) {}
};

class ZeroError : public Error {
public:
    explicit ZeroError(const std::string& what) : Error(what) {}
};

inline bool is_symmetric(const SparseMatrix& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    SparseMatrix d = SparseMatrix(m.transpose()) - m;
    double scale = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    if (scale == 0.0) return true;
    double dev = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(d, k); it; ++it)
            dev = std::max(dev, std::abs(it.value()));
    return dev <= rel_tol * scale;
}

} // namespace rbs
