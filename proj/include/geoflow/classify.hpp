#ifndef GEOFLOW_CLASSIFY_HPP
#define GEOFLOW_CLASSIFY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/subspace.hpp"

namespace geoflow {

/// Linear soft-margin SVM. Binary problems store a single separating
/// function; multiclass problems store one function per class
/// (one-vs-rest).
struct SvmModel {
    Matrix weights;           // n_functions x d
    Vector bias;              // n_functions
    double c = 1.0;
    std::vector<int> classes; // ascending label list
};

struct SvmPrediction {
    std::vector<int> labels;
    Vector margins; // winning decision value per sample
};

namespace detail {

// Dual coordinate descent for the L2-regularised hinge-loss binary
// problem, bias handled via feature augmentation. The augmentation
// constant is the RMS row norm, which makes the solution equivariant
// under feature scaling (x -> a*x with c -> c/a^2 leaves predictions
// unchanged). Fixed visiting order, no shuffling, so the result is
// deterministic given input order.
inline std::pair<Vector, double> svm_binary(const Matrix& x, const Vector& y,
                                            double c) {
    const auto n = x.rows();
    const auto d = x.cols();
    double bias_scale = std::sqrt(x.squaredNorm() / static_cast<double>(n));
    if (bias_scale <= 0.0) bias_scale = 1.0;

    Vector w = Vector::Zero(d + 1); // last entry is the bias weight
    Vector alpha = Vector::Zero(n);
    Vector qdiag(n);
    for (Eigen::Index i = 0; i < n; ++i)
        qdiag(i) = x.row(i).squaredNorm() + bias_scale * bias_scale;

    constexpr int max_epochs = 10000;
    constexpr double gap_tol = 1e-6;
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double decision = w.head(d).dot(x.row(i)) + w(d) * bias_scale;
            const double grad = y(i) * decision - 1.0;
            const double old = alpha(i);
            const double next = std::clamp(old - grad / qdiag(i), 0.0, c);
            if (next != old) {
                const double delta = (next - old) * y(i);
                w.head(d) += delta * x.row(i);
                w(d) += delta * bias_scale;
                alpha(i) = next;
            }
        }
        double hinge = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            hinge += std::max(0.0, 1.0 - y(i) * (w.head(d).dot(x.row(i)) +
                                                 w(d) * bias_scale));
        const double primal = 0.5 * w.squaredNorm() + c * hinge;
        const double dual = alpha.sum() - 0.5 * w.squaredNorm();
        // relative gap keeps the stopping point invariant under the joint
        // rescaling x -> a*x, c -> c/a^2 (primal and dual both scale by 1/a^2)
        if (primal - dual <= gap_tol * std::abs(primal)) break;
    }
    return {w.head(d), w(d) * bias_scale};
}

} // namespace detail

inline SvmModel svm_train(const Matrix& features, const std::vector<int>& labels,
                          double c) {
    const auto n = features.rows();
    if (n < 2) throw input_error("svm_train: need at least 2 samples");
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw dimension_error("svm_train: label count does not match sample count");
    if (c <= 0.0) throw input_error("svm_train: c must be positive");

    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2)
        throw degenerate_training_error(
            "svm_train: all samples share one label (classifier collapse)");

    SvmModel model;
    model.c = c;
    model.classes = classes;
    const int n_funcs = classes.size() == 2 ? 1 : static_cast<int>(classes.size());
    model.weights.resize(n_funcs, features.cols());
    model.bias.resize(n_funcs);

    Vector y(n);
    if (classes.size() == 2) {
        for (Eigen::Index i = 0; i < n; ++i)
            y(i) = labels[i] == classes[1] ? 1.0 : -1.0;
        auto [w, b] = detail::svm_binary(features, y, c);
        model.weights.row(0) = w;
        model.bias(0) = b;
    } else {
        for (int k = 0; k < n_funcs; ++k) {
            for (Eigen::Index i = 0; i < n; ++i)
                y(i) = labels[i] == classes[k] ? 1.0 : -1.0;
            auto [w, b] = detail::svm_binary(features, y, c);
            model.weights.row(k) = w;
            model.bias(k) = b;
        }
    }
    return model;
}

/// Argmax of one-vs-rest decision values; ties broken by lowest class
/// index in `classes`.
inline SvmPrediction svm_predict(const SvmModel& m, const Matrix& features) {
    if (features.cols() != m.weights.cols())
        throw dimension_error("svm_predict: feature dimension does not match training");
    const auto n = features.rows();
    SvmPrediction pred;
    pred.labels.resize(n);
    pred.margins.resize(n);

    if (m.classes.size() == 2) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double f = m.weights.row(0).dot(features.row(i)) + m.bias(0);
            pred.labels[i] = f > 0.0 ? m.classes[1] : m.classes[0];
            pred.margins(i) = std::abs(f);
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_val = m.weights.row(0).dot(features.row(i)) + m.bias(0);
            for (std::size_t k = 1; k < m.classes.size(); ++k) {
                const double v = m.weights.row(k).dot(features.row(i)) + m.bias(k);
                if (v > best_val) {
                    best_val = v;
                    best = static_cast<int>(k);
                }
            }
            pred.labels[i] = m.classes[best];
            pred.margins(i) = best_val;
        }
    }
    return pred;
}

} // namespace geoflow

#endif
