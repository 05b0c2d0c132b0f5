// linalg.hpp — the two dense eigenproblems we need: real symmetric, and
// unitary via complex Schur factorization. Both use Eigen's own kernels.

#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

#include "ripple/errors.hpp"

namespace ripple::linalg {

struct SymmetricEigen {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // orthonormal columns
};

inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols()) throw NumericalError("symmetric_eigen: matrix is not square");
    if (h.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

struct SchurEigen {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;  // Schur vectors; eigenvectors when the input is normal
    double off_diagonal{0.0};  // max |T_ij|, i < j, measures non-normality
};

/// Complex Schur decomposition A = Z T Z^H. For a unitary A the triangular
/// factor is diagonal up to rounding, so Z holds an orthonormal eigenbasis even
/// inside degenerate clusters.
inline SchurEigen schur_eigen(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols()) throw NumericalError("schur_eigen: matrix is not square");
    SchurEigen out;
    if (a.rows() == 0) return out;
    Eigen::ComplexSchur<Eigen::MatrixXcd> cs(a);
    if (cs.info() != Eigen::Success) throw NumericalError("complex Schur factorization did not converge");
    const auto& t = cs.matrixT();
    out.values = t.diagonal();
    out.vectors = cs.matrixU();
    for (Eigen::Index j = 1; j < t.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i) out.off_diagonal = std::max(out.off_diagonal, std::abs(t(i, j)));
    return out;
}

/// max |A^H A - I|.
inline double unitarity_defect(const Eigen::MatrixXcd& u) {
    Eigen::MatrixXcd g = u.adjoint() * u;
    g.diagonal().array() -= 1.0;
    return g.cwiseAbs().maxCoeff();
}

}  // namespace ripple::linalg
