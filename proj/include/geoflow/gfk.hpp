#ifndef GEOFLOW_GFK_HPP
#define GEOFLOW_GFK_HPP

#include <Eigen/Dense>
#include <cmath>

#include "geoflow/errors.hpp"
#include "geoflow/subspace.hpp"

namespace geoflow {

/// Geodesic flow kernel: g = integral over t in [0,1] of Phi(t) Phi(t)^T,
/// with a square-root embedding so x^T g y = (E x)^T (E y).
struct FlowKernel {
    Matrix g;         // D x D symmetric PSD
    Matrix embedding; // D x D, embedding^T embedding = g
    Vector angles;    // the d principal angles used
};

namespace detail {

// Stacked flow factor A = Q [V1 0; 0 -V2~]; Phi(t) = A [cos(t th); sin(t th)].
inline Matrix flow_factor(const CsDecomposition& cs, const Completion& comp) {
    const int D = static_cast<int>(comp.q.rows());
    const int d = static_cast<int>(cs.v1.rows());
    Matrix block = Matrix::Zero(D, 2 * d);
    block.topLeftCorner(d, d) = cs.v1;
    block.bottomRightCorner(D - d, d) = -cs.v2_tilde;
    return comp.q * block;
}

} // namespace detail

/// Phi(t): the geodesic flow subspace at time t. Phi(0) spans S1, Phi(1)
/// spans S2, and Phi(t) has orthonormal columns for every t.
inline Subspace flow_point(const CsDecomposition& cs, const Completion& comp, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw input_error("flow_point: t must lie in [0, 1]");
    const int d = static_cast<int>(cs.v1.rows());
    const Matrix a = detail::flow_factor(cs, comp);
    Matrix trig(2 * d, d);
    trig.setZero();
    for (int i = 0; i < d; ++i) {
        trig(i, i) = std::cos(t * cs.angles(i));
        trig(d + i, i) = std::sin(t * cs.angles(i));
    }
    return Subspace{a * trig};
}

/// Closed-form geodesic flow kernel. The diagonal entries are the exact
/// integrals of cos^2, cos*sin, and sin^2 over [0, 1]; the removable
/// singularity at theta = 0 is handled by its limit.
inline FlowKernel build_kernel(const Subspace& s1, const Subspace& s2,
                               double angle_floor = 1e-7) {
    const CsDecomposition cs = cs_decompose(s1, s2);
    const Completion comp = complete(s1);
    const int d = static_cast<int>(cs.angles.size());
    const Matrix a = detail::flow_factor(cs, comp);

    Matrix lambda = Matrix::Zero(2 * d, 2 * d);
    for (int i = 0; i < d; ++i) {
        const double th = cs.angles(i);
        double l1, l2, l3;
        if (th < angle_floor) {
            l1 = 1.0;
            l2 = 0.0;
            l3 = 0.0;
        } else {
            const double s2t = std::sin(2.0 * th);
            const double c2t = std::cos(2.0 * th);
            l1 = 0.5 + s2t / (4.0 * th);           // int cos^2(t th) dt
            l2 = (1.0 - c2t) / (4.0 * th);         // int cos(t th) sin(t th) dt
            l3 = 0.5 - s2t / (4.0 * th);           // int sin^2(t th) dt
        }
        lambda(i, i) = l1;
        lambda(i, d + i) = l2;
        lambda(d + i, i) = l2;
        lambda(d + i, d + i) = l3;
    }

    FlowKernel k;
    k.g = a * lambda * a.transpose();
    k.g = 0.5 * (k.g + k.g.transpose()); // symmetrise rounding residue
    k.angles = cs.angles;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(k.g);
    Vector w = eig.eigenvalues().cwiseMax(0.0);
    k.embedding = w.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    return k;
}

/// x^T g y.
inline double kernel_value(const FlowKernel& k, const Vector& x, const Vector& y) {
    if (x.size() != k.g.rows() || y.size() != k.g.rows())
        throw dimension_error("kernel_value: vector length does not match kernel dimension");
    return x.dot(k.g * y);
}

/// Maps each row x to embedding * x; inner products in the image equal
/// kernel values.
inline Matrix embed(const FlowKernel& k, const Matrix& data) {
    if (data.cols() != k.g.rows())
        throw dimension_error("embed: feature dimension does not match kernel dimension");
    if (!data.allFinite()) throw input_error("embed: non-finite input");
    return data * k.embedding.transpose();
}

} // namespace geoflow

#endif
