#ifndef GEOFLOW_ALIGN_HPP
#define GEOFLOW_ALIGN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/rng.hpp"
#include "geoflow/subspace.hpp"

namespace geoflow {

/// Per-feature affine normalisation fitted on labelled healthy data only.
struct NcaTransform {
    Vector mean;
    Vector scale; // sample standard deviations, all > 0
};

/// Weighted-RMS FRF normalisation parameters. `mix` blends the row-wise
/// RMS against the dataset-level reference RMS.
struct WrmsConfig {
    double mix = 0.53;
    double epsilon = 1e-12;
};

/// Per-hop 2-Wasserstein distances along a chain, their sum, and the
/// direct first-to-last distance.
struct PathLengthReport {
    std::vector<double> hop_distances;
    double total = 0.0;
    double direct = 0.0;
};

/// Cosine-alignment curves: per hop, (a) current source vs current target
/// and (b) current source vs original source, final target as last point.
struct AlignmentCurves {
    std::vector<double> source_target;
    std::vector<double> source_origin;
};

inline NcaTransform nca_fit(const Matrix& healthy_labelled) {
    const auto m = healthy_labelled.rows();
    if (m < 2) throw input_error("nca_fit: need at least 2 samples");
    if (!healthy_labelled.allFinite()) throw input_error("nca_fit: non-finite input");
    NcaTransform t;
    t.mean = healthy_labelled.colwise().mean();
    t.scale.resize(healthy_labelled.cols());
    for (Eigen::Index j = 0; j < healthy_labelled.cols(); ++j) {
        const double var =
            (healthy_labelled.col(j).array() - t.mean(j)).square().sum() /
            static_cast<double>(m - 1);
        const double s = std::sqrt(var);
        if (s <= 0.0)
            throw degenerate_feature_error(
                "nca_fit: feature " + std::to_string(j) + " has zero variance",
                static_cast<int>(j));
        t.scale(j) = s;
    }
    return t;
}

inline Matrix nca_apply(const NcaTransform& t, const Matrix& data) {
    if (data.cols() != t.mean.size())
        throw dimension_error("nca_apply: feature dimension mismatch");
    if (!data.allFinite()) throw input_error("nca_apply: non-finite input");
    return (data.rowwise() - t.mean.transpose()).array().rowwise() /
           t.scale.transpose().array();
}

/// Each row H is divided by mix*RMS_row(H) + (1-mix)*RMS_ref + epsilon,
/// where RMS_ref is taken over the full input matrix. No class
/// information is consulted.
inline Matrix wrms_normalise(const WrmsConfig& cfg, const Matrix& frfs) {
    if (frfs.rows() == 0 || frfs.cols() == 0)
        throw input_error("wrms_normalise: empty matrix");
    if (!frfs.allFinite() || (frfs.array() < 0.0).any())
        throw input_error("wrms_normalise: magnitudes must be finite and non-negative");
    const double rms_ref = std::sqrt(frfs.array().square().mean());
    Matrix out(frfs.rows(), frfs.cols());
    for (Eigen::Index i = 0; i < frfs.rows(); ++i) {
        const double rms_row = std::sqrt(frfs.row(i).array().square().mean());
        out.row(i) = frfs.row(i) /
                     (cfg.mix * rms_row + (1.0 - cfg.mix) * rms_ref + cfg.epsilon);
    }
    return out;
}

/// Scans mix over {0.00, 0.01, ..., 1.00} and returns the smallest value
/// whose normalised leading PCA direction stays stable under bootstrap
/// resampling (mean |cos| against the full-data direction >= threshold).
inline double select_mix(const Matrix& frfs_source, double threshold, Rng& rng,
                         int n_bootstrap = 20, double epsilon = 1e-12) {
    const auto n = frfs_source.rows();
    if (n < 10) throw input_error("select_mix: need at least 10 samples");
    double best = -1.0;
    for (int step = 0; step <= 100; ++step) {
        const double mix = step / 100.0;
        const Matrix normed = wrms_normalise(WrmsConfig{mix, epsilon}, frfs_source);
        const Subspace full = fit_pca(normed, 1);
        double cos_sum = 0.0;
        for (int b = 0; b < n_bootstrap; ++b) {
            Matrix resampled(n, normed.cols());
            for (Eigen::Index i = 0; i < n; ++i)
                resampled.row(i) = normed.row(static_cast<Eigen::Index>(
                    rng.uniform_below(static_cast<std::uint64_t>(n))));
            cos_sum += leading_cosine(fit_pca(resampled, 1), full);
        }
        const double mean_cos = cos_sum / n_bootstrap;
        best = std::max(best, mean_cos);
        if (mean_cos >= threshold) return mix;
    }
    throw selection_failure_error(
        "select_mix: no grid point met threshold; best mean cosine " +
            std::to_string(best),
        best);
}

inline AlignmentCurves alignment_curve(const std::vector<Matrix>& chain_data, int d) {
    if (chain_data.size() < 2)
        throw input_error("alignment_curve: need at least 2 domains");
    std::vector<Subspace> subs;
    subs.reserve(chain_data.size());
    for (const auto& data : chain_data) subs.push_back(fit_pca(data, d));

    AlignmentCurves curves;
    for (std::size_t h = 0; h + 1 < subs.size(); ++h) {
        curves.source_target.push_back(leading_cosine(subs[h], subs[h + 1]));
        curves.source_origin.push_back(leading_cosine(subs[h + 1], subs[0]));
    }
    return curves;
}

namespace detail {

// Symmetric PSD square root with small negative eigenvalues clamped.
inline Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    Vector w = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * w.cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

inline void check_covariance(const Matrix& cov, const char* name) {
    if (cov.rows() != cov.cols())
        throw dimension_error(std::string("gaussian_w2: ") + name + " not square");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
        throw input_error(std::string("gaussian_w2: ") + name + " not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    const double max_eig = eig.eigenvalues().maxCoeff();
    if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, max_eig))
        throw input_error(std::string("gaussian_w2: ") + name + " indefinite");
}

} // namespace detail

/// Closed-form 2-Wasserstein distance between Gaussian fits:
/// W2^2 = |mu1-mu2|^2 + tr(c1 + c2 - 2 (c2^1/2 c1 c2^1/2)^1/2).
inline double gaussian_w2(const Vector& mu1, const Matrix& cov1,
                          const Vector& mu2, const Matrix& cov2) {
    if (mu1.size() != mu2.size() || cov1.rows() != mu1.size() ||
        cov2.rows() != mu2.size())
        throw dimension_error("gaussian_w2: dimension mismatch");
    detail::check_covariance(cov1, "cov1");
    detail::check_covariance(cov2, "cov2");
    const Matrix root2 = detail::psd_sqrt(cov2);
    const Matrix cross = detail::psd_sqrt(root2 * cov1 * root2);
    const double sq = (mu1 - mu2).squaredNorm() +
                      (cov1 + cov2 - 2.0 * cross).trace();
    return std::sqrt(std::max(0.0, sq));
}

/// Fits a Gaussian to each domain and accumulates per-hop W2 distances.
/// Covariances get a 1e-9 * trace/D diagonal ridge before square roots.
inline PathLengthReport path_length(const std::vector<Matrix>& chain_data) {
    if (chain_data.size() < 2)
        throw input_error("path_length: need at least 2 domains");
    std::vector<Vector> means;
    std::vector<Matrix> covs;
    for (const auto& data : chain_data) {
        if (data.rows() < 2) throw input_error("path_length: domain with < 2 samples");
        Vector mu = data.colwise().mean();
        Matrix centred = data.rowwise() - mu.transpose();
        Matrix cov = centred.transpose() * centred /
                     static_cast<double>(data.rows() - 1);
        const double ridge = 1e-9 * cov.trace() / static_cast<double>(cov.rows());
        cov.diagonal().array() += ridge;
        means.push_back(std::move(mu));
        covs.push_back(std::move(cov));
    }
    PathLengthReport report;
    for (std::size_t h = 0; h + 1 < means.size(); ++h) {
        report.hop_distances.push_back(
            gaussian_w2(means[h], covs[h], means[h + 1], covs[h + 1]));
        report.total += report.hop_distances.back();
    }
    report.direct = gaussian_w2(means.front(), covs.front(), means.back(), covs.back());
    return report;
}

} // namespace geoflow

#endif
