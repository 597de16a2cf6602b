#ifndef GEOFLOW_SUBSPACE_HPP
#define GEOFLOW_SUBSPACE_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "geoflow/errors.hpp"

namespace geoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A point on the Grassmannian Gr(d, D): an orthonormal D x d basis.
struct Subspace {
    Matrix basis;
    int ambient_dim() const { return static_cast<int>(basis.rows()); }
    int sub_dim() const { return static_cast<int>(basis.cols()); }
};

/// Orthogonal completion of a subspace: q = [basis | r] with q orthogonal.
struct Completion {
    Matrix q; // D x D
    Matrix r; // D x (D - d)
};

/// Cosine-sine decomposition of a subspace pair. Reconstruction:
///   S1^T S2 = v1 diag(cos theta) v^T
///   R1^T S2 = -v2_tilde diag(sin theta) v^T
struct CsDecomposition {
    Matrix v1;       // d x d orthogonal
    Matrix v2_tilde; // (D-d) x d, orthonormal columns
    Matrix v;        // d x d orthogonal
    Vector angles;   // d principal angles in [0, pi/2], ascending
};

namespace detail {

// Flip each column so its largest-|entry| element is non-negative;
// ties broken by lowest row index.
inline void fix_column_signs(Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index best_row = 0;
        double best_abs = std::abs(m(0, j));
        for (Eigen::Index i = 1; i < m.rows(); ++i) {
            const double a = std::abs(m(i, j));
            if (a > best_abs) {
                best_abs = a;
                best_row = i;
            }
        }
        if (m(best_row, j) < 0.0) m.col(j) = -m.col(j);
    }
}

} // namespace detail

/// Top-d principal directions of column-centred data, deterministic sign
/// convention (largest-|entry| element of each column non-negative).
inline Subspace fit_pca(const Matrix& data, int d) {
    const auto n = data.rows();
    const auto dim = data.cols();
    if (n < 2) throw input_error("fit_pca: need at least 2 samples, got " + std::to_string(n));
    if (d < 1 || d > std::min<Eigen::Index>(dim, n - 1))
        throw input_error("fit_pca: d=" + std::to_string(d) + " outside [1, min(D, N-1)]");
    if (!data.allFinite()) throw input_error("fit_pca: non-finite input");

    Matrix centred = data.rowwise() - data.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(centred, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double tol = sv(0) * std::max(n, dim) * 1e-12;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    if (rank < d)
        throw rank_error("fit_pca: data rank " + std::to_string(rank) +
                             " below requested dimension " + std::to_string(d),
                         rank);

    Matrix basis = svd.matrixV().leftCols(d);
    detail::fix_column_signs(basis);
    return Subspace{std::move(basis)};
}

/// Orthogonal completion: q's first d columns equal the basis exactly,
/// remaining columns span the complement with the fit_pca sign convention.
inline Completion complete(const Subspace& s) {
    const int D = s.ambient_dim();
    const int d = s.sub_dim();
    // Householder QR of the basis; trailing columns of Q span the complement.
    Eigen::HouseholderQR<Matrix> qr(s.basis);
    Matrix q_full = qr.householderQ() * Matrix::Identity(D, D);
    Matrix r = q_full.rightCols(D - d);
    // Re-orthogonalise against the basis to wash out rounding, then fix signs.
    r -= s.basis * (s.basis.transpose() * r);
    Eigen::HouseholderQR<Matrix> qr2(r);
    r = qr2.householderQ() * Matrix::Identity(D, D - d);
    detail::fix_column_signs(r);

    Completion c;
    c.q.resize(D, D);
    c.q.leftCols(d) = s.basis;
    c.q.rightCols(D - d) = r;
    c.r = std::move(r);
    return c;
}

/// CS decomposition via SVD of S1^T S2; v2_tilde recovered from R1^T S2 on
/// angles above the floor and filled by orthonormal completion below it.
inline CsDecomposition cs_decompose(const Subspace& s1, const Subspace& s2,
                                    double angle_floor = 1e-7) {
    if (s1.ambient_dim() != s2.ambient_dim())
        throw dimension_error("cs_decompose: ambient dimensions differ");
    if (s1.sub_dim() != s2.sub_dim())
        throw dimension_error("cs_decompose: subspace dimensions differ");
    const int D = s1.ambient_dim();
    const int d = s1.sub_dim();
    if (d > D - d)
        throw unsupported_dimension_error(
            "cs_decompose: d=" + std::to_string(d) + " exceeds D-d=" +
            std::to_string(D - d) +
            "; GFK requires the subspace dimension to be at most half the ambient dimension");

    const Completion comp = complete(s1);

    Eigen::JacobiSVD<Matrix> svd(s1.basis.transpose() * s2.basis,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    // Singular values are descending, so angles come out ascending.
    CsDecomposition cs;
    cs.v1 = svd.matrixU();
    cs.v = svd.matrixV();
    cs.angles.resize(d);
    for (int i = 0; i < d; ++i) {
        const double c = std::clamp(svd.singularValues()(i), 0.0, 1.0);
        cs.angles(i) = std::acos(c);
    }

    // R1^T S2 = -v2_tilde diag(sin theta) v^T  =>  v2_tilde = -(R1^T S2) v / sin
    const Matrix b = comp.r.transpose() * s2.basis * cs.v;
    cs.v2_tilde.resize(D - d, d);
    for (int i = 0; i < d; ++i) {
        const double s = std::sin(cs.angles(i));
        if (cs.angles(i) > angle_floor) {
            cs.v2_tilde.col(i) = -b.col(i) / s;
        } else {
            cs.v2_tilde.col(i).setZero(); // filled below
        }
    }
    // Complete near-zero-angle columns to an orthonormal set.
    for (int i = 0; i < d; ++i) {
        if (cs.angles(i) > angle_floor) continue;
        Vector cand = Vector::Zero(D - d);
        for (int e = 0; e < D - d; ++e) {
            cand.setZero();
            cand(e) = 1.0;
            for (int j = 0; j < d; ++j) {
                if (j == i) continue;
                cand -= cs.v2_tilde.col(j).dot(cand) * cs.v2_tilde.col(j);
            }
            if (cand.norm() > 0.5) break;
        }
        cs.v2_tilde.col(i) = cand / cand.norm();
    }
    return cs;
}

/// |u1^T u2| for the leading basis columns: cosine of the angle between
/// the leading one-dimensional subspaces.
inline double leading_cosine(const Subspace& s1, const Subspace& s2) {
    if (s1.ambient_dim() != s2.ambient_dim())
        throw dimension_error("leading_cosine: ambient dimensions differ");
    return std::min(1.0, std::abs(s1.basis.col(0).dot(s2.basis.col(0))));
}

/// Principal angles between two (possibly different-dimension) subspaces,
/// ascending. Cosine/sine hybrid: acos of the cross-product singular
/// values loses half the working precision near zero angles, so small
/// angles are recovered from the residual (I - P1) B2 instead, whose
/// singular values are the sines.
inline Vector principal_angles(const Matrix& basis1, const Matrix& basis2) {
    Eigen::JacobiSVD<Matrix> svd_cos(basis1.transpose() * basis2);
    const Matrix residual = basis2 - basis1 * (basis1.transpose() * basis2);
    Eigen::JacobiSVD<Matrix> svd_sin(residual);
    const int k = static_cast<int>(svd_cos.singularValues().size());
    Vector angles(k);
    for (int i = 0; i < k; ++i) {
        const double c = std::clamp(svd_cos.singularValues()(i), 0.0, 1.0);
        // sines ascend where cosines descend: pair index i with k-1-i
        const double s =
            std::clamp(svd_sin.singularValues()(k - 1 - i), 0.0, 1.0);
        angles(i) = c * c > 0.5 ? std::asin(s) : std::acos(c);
    }
    return angles;
}

} // namespace geoflow

#endif
