#ifndef GEOFLOW_STRUCTFAM_HPP
#define GEOFLOW_STRUCTFAM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/rng.hpp"
#include "geoflow/subspace.hpp"

namespace geoflow {

struct SupportSpec {
    double position = 0.5;  // fraction of span in [0, 1]
    double stiffness = 0.0; // N/m, spring to ground at nearest node
    double mass = 0.0;      // kg, lumped at the same node
};

struct PointMass {
    double position = 0.0; // fraction of span
    double mass = 0.0;     // kg
};

/// Parametric 1-D Euler-Bernoulli beam with elastic supports.
struct StructureParams {
    double deck_length = 32.0;    // m
    double deck_ei = 4.0016e10;   // N m^2
    double deck_rho_a = 38465.0;  // kg/m
    int n_elements = 200;
    std::vector<SupportSpec> supports;
    double boundary_spring = 1e12; // N/m at both end translations
    std::vector<PointMass> point_masses;
    double damping_ratio = 0.01;  // uniform modal damping for FRF synthesis
    // Per-element EI multipliers; empty means all ones. Damage writes here.
    std::vector<double> element_ei_scale;
};

/// Alpha-driven morph: a moving support translates from start to end while
/// its stiffness and mass grow linearly from zero to the full values.
struct MorphSpec {
    double moving_support_start = 0.5;
    double moving_support_end = 0.75;
    double full_stiffness = 1.14e10; // N/m
    double full_mass = 35880.0;      // kg
    double alpha_floor = 0.1;
};

struct DamageSpec {
    enum class Kind { deck_patch, support_cut };
    Kind kind = Kind::deck_patch;
    double centre = 0.85;       // fraction of span (deck_patch)
    double extent = 0.05;       // fraction of span (deck_patch)
    double ei_factor = 0.5352;  // (0, 1] multiplier inside the patch
    int support_index = 0;      // support_cut
    double stiffness_factor = 0.5;
};

/// Feature matrix with per-sample class labels and a labelled mask.
struct DomainDataset {
    Matrix features;
    std::vector<int> labels;        // 0 = healthy, 1 = d1, ...
    std::vector<char> labelled_mask;
    int structure_index = 0;        // 1-based, 1 = source
    int sensor_id = 0;
    std::string feature_kind;       // "frequency" or "frf"
};

struct ModalSolution {
    Vector frequencies_hz; // ascending
    Matrix shapes;         // n_dof x n_modes, mass-normalised
};

namespace detail {

inline void validate_params(const StructureParams& p) {
    if (p.deck_length <= 0 || p.deck_ei <= 0 || p.deck_rho_a <= 0)
        throw input_error("assemble: deck properties must be positive");
    if (p.n_elements < 10)
        throw input_error("assemble: need at least 10 elements");
    for (const auto& s : p.supports)
        if (s.position < 0 || s.position > 1 || s.stiffness < 0 || s.mass < 0)
            throw input_error("assemble: invalid support spec");
    for (const auto& m : p.point_masses)
        if (m.position < 0 || m.position > 1 || m.mass < 0)
            throw input_error("assemble: invalid point mass");
    if (!p.element_ei_scale.empty() &&
        static_cast<int>(p.element_ei_scale.size()) != p.n_elements)
        throw input_error("assemble: element_ei_scale length mismatch");
}

inline int nearest_node(double position, int n_elements) {
    return static_cast<int>(std::lround(position * n_elements));
}

} // namespace detail

/// EI ratio of a rectangular section after removing a cut of
/// width_frac x depth_frac from the top, via the parallel-axis theorem.
/// Scale-invariant, so unit width and height are used.
inline double deck_patch_ei_factor(double width_frac, double depth_frac) {
    if (width_frac <= 0 || width_frac > 1 || depth_frac <= 0 || depth_frac >= 1)
        throw input_error("deck_patch_ei_factor: fractions outside (0, 1)");
    const double a1 = (1.0 - width_frac) * 1.0;       // full-height strip
    const double y1 = 0.5;
    const double i1 = (1.0 - width_frac) / 12.0;
    const double h2 = 1.0 - depth_frac;               // reduced-height strip
    const double a2 = width_frac * h2;
    const double y2 = h2 / 2.0;
    const double i2 = width_frac * h2 * h2 * h2 / 12.0;
    const double ybar = (a1 * y1 + a2 * y2) / (a1 + a2);
    const double i_cut = i1 + a1 * (y1 - ybar) * (y1 - ybar) +
                         i2 + a2 * (y2 - ybar) * (y2 - ybar);
    return i_cut / (1.0 / 12.0);
}

/// Assembles the global stiffness and mass matrices (2 DOF per node:
/// translation, rotation) with Hermitian cubic elements, ground springs
/// at the deck ends, and supports/point masses lumped at nearest nodes.
inline std::pair<Matrix, Matrix> assemble(const StructureParams& p) {
    detail::validate_params(p);
    const int n = p.n_elements;
    const int n_dof = 2 * (n + 1);
    const double h = p.deck_length / n;
    Matrix k = Matrix::Zero(n_dof, n_dof);
    Matrix m = Matrix::Zero(n_dof, n_dof);

    Eigen::Matrix4d ke_base, me_base;
    ke_base << 12, 6 * h, -12, 6 * h,
               6 * h, 4 * h * h, -6 * h, 2 * h * h,
               -12, -6 * h, 12, -6 * h,
               6 * h, 2 * h * h, -6 * h, 4 * h * h;
    me_base << 156, 22 * h, 54, -13 * h,
               22 * h, 4 * h * h, 13 * h, -3 * h * h,
               54, 13 * h, 156, -22 * h,
               -13 * h, -3 * h * h, -22 * h, 4 * h * h;

    for (int e = 0; e < n; ++e) {
        const double ei = p.deck_ei * (p.element_ei_scale.empty()
                                           ? 1.0
                                           : p.element_ei_scale[e]);
        const Eigen::Matrix4d ke = ke_base * (ei / (h * h * h));
        const Eigen::Matrix4d me = me_base * (p.deck_rho_a * h / 420.0);
        const int base = 2 * e;
        k.block<4, 4>(base, base) += ke;
        m.block<4, 4>(base, base) += me;
    }

    k(0, 0) += p.boundary_spring;
    k(2 * n, 2 * n) += p.boundary_spring;

    for (const auto& s : p.supports) {
        const int dof = 2 * detail::nearest_node(s.position, n);
        k(dof, dof) += s.stiffness;
        m(dof, dof) += s.mass;
    }
    for (const auto& pm : p.point_masses) {
        const int dof = 2 * detail::nearest_node(pm.position, n);
        m(dof, dof) += pm.mass;
    }
    return {std::move(k), std::move(m)};
}

/// Generalised symmetric eigensolution via Cholesky reduction to standard
/// form. Shapes come back mass-normalised (phi^T M phi = I).
inline ModalSolution solve_modes(const Matrix& k_matrix, const Matrix& m_matrix,
                                 int n_modes) {
    if (k_matrix.rows() != k_matrix.cols() || m_matrix.rows() != m_matrix.cols() ||
        k_matrix.rows() != m_matrix.rows())
        throw dimension_error("solve_modes: K and M must be square and matched");
    if (n_modes < 1 || n_modes > k_matrix.rows())
        throw input_error("solve_modes: n_modes outside [1, n_dof]");
    Eigen::LLT<Matrix> llt(m_matrix);
    if (llt.info() != Eigen::Success)
        throw input_error("solve_modes: mass matrix is not positive definite");

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
        k_matrix, m_matrix, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
        throw input_error("solve_modes: eigensolver failed");

    ModalSolution sol;
    sol.frequencies_hz.resize(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        const double lambda = std::max(0.0, solver.eigenvalues()(i));
        sol.frequencies_hz(i) = std::sqrt(lambda) / (2.0 * std::numbers::pi);
    }
    sol.shapes = solver.eigenvectors().leftCols(n_modes);
    return sol;
}

/// Interpolates the moving support. Alpha = 0 is the exact two-support
/// structure (support absent); values in (0, alpha_floor) are rejected as
/// unrealisable geometry.
inline StructureParams morph(const StructureParams& base, const MorphSpec& spec,
                             double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw input_error("morph: alpha outside [0, 1]");
    if (alpha > 0.0 && alpha < spec.alpha_floor)
        throw excluded_configuration_error(
            "morph: alpha=" + std::to_string(alpha) + " below floor " +
            std::to_string(spec.alpha_floor) + " (excluded configuration)");
    StructureParams out = base;
    SupportSpec moving;
    moving.position = spec.moving_support_start +
                      alpha * (spec.moving_support_end - spec.moving_support_start);
    moving.stiffness = alpha * spec.full_stiffness;
    moving.mass = alpha * spec.full_mass;
    out.supports.push_back(moving);
    return out;
}

inline StructureParams apply_damage(const StructureParams& params,
                                    const DamageSpec& d) {
    StructureParams out = params;
    if (d.kind == DamageSpec::Kind::deck_patch) {
        if (d.ei_factor <= 0.0 || d.ei_factor > 1.0)
            throw input_error("apply_damage: ei_factor outside (0, 1]");
        const double lo = d.centre - d.extent / 2.0;
        const double hi = d.centre + d.extent / 2.0;
        if (lo < 0.0 || hi > 1.0)
            throw input_error("apply_damage: patch outside span");
        if (out.element_ei_scale.empty())
            out.element_ei_scale.assign(out.n_elements, 1.0);
        int hit = 0;
        for (int e = 0; e < out.n_elements; ++e) {
            const double centroid = (e + 0.5) / out.n_elements;
            if (centroid >= lo && centroid <= hi) {
                out.element_ei_scale[e] *= d.ei_factor;
                ++hit;
            }
        }
        if (hit == 0)
            throw empty_patch_error("apply_damage: no element centroid inside patch");
    } else {
        if (d.support_index < 0 ||
            d.support_index >= static_cast<int>(out.supports.size()))
            throw input_error("apply_damage: support index out of range");
        if (d.stiffness_factor <= 0.0 || d.stiffness_factor > 1.0)
            throw input_error("apply_damage: stiffness_factor outside (0, 1]");
        out.supports[d.support_index].stiffness *= d.stiffness_factor;
    }
    return out;
}

/// Clean natural-frequency vector replicated n_reps times with per-entry
/// Gaussian noise of sigma = noise_frac * clean value.
inline Matrix replicate_with_noise(const Vector& clean, int n_reps,
                                   double noise_frac, Rng& rng) {
    Matrix out(n_reps, clean.size());
    for (int r = 0; r < n_reps; ++r)
        for (Eigen::Index j = 0; j < clean.size(); ++j)
            out(r, j) = clean(j) + noise_frac * clean(j) * rng.normal();
    return out;
}

inline DomainDataset frequency_features(const StructureParams& params, int n_modes,
                                        int n_reps, double noise_frac,
                                        std::uint64_t seed) {
    if (n_modes < 1) throw input_error("frequency_features: n_modes must be >= 1");
    if (noise_frac < 0) throw input_error("frequency_features: negative noise");
    auto [k, m] = assemble(params);
    const ModalSolution sol = solve_modes(k, m, n_modes);
    Rng rng(seed);
    DomainDataset ds;
    ds.features = replicate_with_noise(sol.frequencies_hz, n_reps, noise_frac, rng);
    ds.labels.assign(n_reps, 0);
    ds.labelled_mask.assign(n_reps, 0);
    ds.feature_kind = "frequency";
    return ds;
}

/// Receptance FRF by modal superposition:
///   H(w) = sum_r phi_r(sensor) phi_r(drive) / (w_r^2 - w^2 + 2 i zeta w_r w)
/// using all modes up to 2 * f_hi. Magnitudes on a uniform band grid.
inline Matrix frf_magnitudes(const StructureParams& params,
                             const std::vector<double>& sensors, double drive,
                             double f_lo, double f_hi, int n_points) {
    if (n_points < 8) throw input_error("frf_magnitudes: need at least 8 points");
    if (f_lo < 0 || f_hi <= f_lo) throw input_error("frf_magnitudes: bad band");
    auto [k, m] = assemble(params);
    const int n_dof = static_cast<int>(k.rows());
    const ModalSolution all = solve_modes(k, m, n_dof);
    if (all.frequencies_hz(n_dof - 1) < f_hi)
        throw coverage_error("frf_magnitudes: band exceeds modal coverage");
    int n_modes = 0;
    while (n_modes < n_dof && all.frequencies_hz(n_modes) <= 2.0 * f_hi) ++n_modes;
    n_modes = std::max(n_modes, 1);

    const int drive_dof = 2 * detail::nearest_node(drive, params.n_elements);
    const double zeta = params.damping_ratio;

    Matrix out(static_cast<Eigen::Index>(sensors.size()), n_points);
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        const int sensor_dof = 2 * detail::nearest_node(sensors[s], params.n_elements);
        for (int p = 0; p < n_points; ++p) {
            const double f = f_lo + (f_hi - f_lo) * p / (n_points - 1);
            const double w = 2.0 * std::numbers::pi * f;
            std::complex<double> h(0.0, 0.0);
            for (int r = 0; r < n_modes; ++r) {
                const double wr = 2.0 * std::numbers::pi * all.frequencies_hz(r);
                const std::complex<double> denom(wr * wr - w * w, 2.0 * zeta * wr * w);
                h += all.shapes(sensor_dof, r) * all.shapes(drive_dof, r) / denom;
            }
            out(static_cast<Eigen::Index>(s), p) = std::abs(h);
        }
    }
    return out;
}

/// One dataset per sensor; additive Gaussian noise sized to the requested
/// SNR over the sensor's clean rows, magnitudes clamped at zero.
inline std::vector<DomainDataset> frf_features(
    const StructureParams& params, const std::vector<double>& sensors, double drive,
    double f_lo, double f_hi, int n_points, int n_reps, double noise_snr_db,
    std::uint64_t seed) {
    const Matrix clean = frf_magnitudes(params, sensors, drive, f_lo, f_hi, n_points);
    std::vector<DomainDataset> result;
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        const double p_sig = clean.row(static_cast<Eigen::Index>(s)).array().square().mean();
        const double sigma = std::sqrt(p_sig / std::pow(10.0, noise_snr_db / 10.0));
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(s)}));
        DomainDataset ds;
        ds.features.resize(n_reps, n_points);
        for (int r = 0; r < n_reps; ++r)
            for (int p = 0; p < n_points; ++p)
                ds.features(r, p) = std::max(
                    0.0, clean(static_cast<Eigen::Index>(s), p) + sigma * rng.normal());
        ds.labels.assign(n_reps, 0);
        ds.labelled_mask.assign(n_reps, 0);
        ds.sensor_id = static_cast<int>(s);
        ds.feature_kind = "frf";
        result.push_back(std::move(ds));
    }
    return result;
}

/// Feature generation recipe shared by build_chain and the harness.
struct FeatureConfig {
    std::string kind = "frequency"; // or "frf"
    int n_modes = 15;
    int n_reps = 100;
    double noise_frac = 0.008;
    // FRF-only settings
    std::vector<double> sensors = {0.25};
    double drive = 0.9;
    double band_lo = 1.0;
    double band_hi = 40.0;
    int n_points = 64;
    double snr_db = 35.0;
    double labelled_healthy_fraction = 0.2;
};

/// Clean per-class feature rows for one structure, one matrix per sensor
/// (row index = class). Frequency features use a single pseudo-sensor.
struct CleanStructure {
    int structure_index = 1; // 1-based
    double alpha = 0.0;
    std::vector<Matrix> per_sensor_clean; // n_classes x F each
};

/// Datasets for one structure, one per sensor, all classes stacked.
struct StructureData {
    int structure_index = 1;
    std::vector<DomainDataset> per_sensor;
};

/// Deterministic clean-feature synthesis for every (alpha, class) pair.
/// Class 0 is healthy; class 1+i applies damage_specs[i].
inline std::vector<CleanStructure> build_clean_chain(
    const StructureParams& base, const MorphSpec& spec,
    const std::vector<DamageSpec>& damage_specs, const std::vector<double>& alphas,
    const FeatureConfig& cfg) {
    if (alphas.size() < 2) throw input_error("build_chain: need at least 2 alphas");
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (alphas[i] <= alphas[i - 1])
            throw input_error("build_chain: alphas must be strictly ascending");

    const int n_classes = 1 + static_cast<int>(damage_specs.size());
    const int n_sensors =
        cfg.kind == "frf" ? static_cast<int>(cfg.sensors.size()) : 1;

    std::vector<CleanStructure> chain;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const StructureParams healthy = morph(base, spec, alphas[a]);
        CleanStructure cs;
        cs.structure_index = static_cast<int>(a) + 1;
        cs.alpha = alphas[a];
        cs.per_sensor_clean.assign(n_sensors, Matrix());

        for (int cls = 0; cls < n_classes; ++cls) {
            const StructureParams p =
                cls == 0 ? healthy : apply_damage(healthy, damage_specs[cls - 1]);
            if (cfg.kind == "frequency") {
                auto [k, m] = assemble(p);
                const Vector f = solve_modes(k, m, cfg.n_modes).frequencies_hz;
                if (cs.per_sensor_clean[0].size() == 0)
                    cs.per_sensor_clean[0].resize(n_classes, f.size());
                cs.per_sensor_clean[0].row(cls) = f;
            } else {
                const Matrix mags = frf_magnitudes(p, cfg.sensors, cfg.drive,
                                                   cfg.band_lo, cfg.band_hi,
                                                   cfg.n_points);
                for (int s = 0; s < n_sensors; ++s) {
                    if (cs.per_sensor_clean[s].size() == 0)
                        cs.per_sensor_clean[s].resize(n_classes, cfg.n_points);
                    cs.per_sensor_clean[s].row(cls) = mags.row(s);
                }
            }
        }
        chain.push_back(std::move(cs));
    }
    return chain;
}

/// Samples noisy replicated datasets from clean features. Structure 1 is
/// fully labelled; later structures get a random labelled-healthy subset
/// of the configured fraction. Per-structure generator state is derived
/// from (master seed, structure index, class index) so parallel and
/// serial sampling agree.
inline std::vector<StructureData> sample_chain(
    const std::vector<CleanStructure>& clean, const FeatureConfig& cfg,
    std::uint64_t master_seed) {
    std::vector<StructureData> out;
    for (const auto& cs : clean) {
        StructureData sd;
        sd.structure_index = cs.structure_index;
        const auto si = static_cast<std::uint64_t>(cs.structure_index);
        for (std::size_t s = 0; s < cs.per_sensor_clean.size(); ++s) {
            const Matrix& rows = cs.per_sensor_clean[s];
            const int n_classes = static_cast<int>(rows.rows());
            const int width = static_cast<int>(rows.cols());
            DomainDataset ds;
            ds.structure_index = cs.structure_index;
            ds.sensor_id = static_cast<int>(s);
            ds.feature_kind = cfg.kind;
            ds.features.resize(n_classes * cfg.n_reps, width);
            ds.labels.resize(n_classes * cfg.n_reps);
            ds.labelled_mask.assign(n_classes * cfg.n_reps, 0);

            double sigma_frf = 0.0;
            if (cfg.kind == "frf") {
                const double p_sig = rows.array().square().mean();
                sigma_frf = std::sqrt(p_sig / std::pow(10.0, cfg.snr_db / 10.0));
            }

            for (int cls = 0; cls < n_classes; ++cls) {
                Rng rng(derive_seed(master_seed,
                                    {si, static_cast<std::uint64_t>(s),
                                     static_cast<std::uint64_t>(cls)}));
                for (int r = 0; r < cfg.n_reps; ++r) {
                    const int row = cls * cfg.n_reps + r;
                    ds.labels[row] = cls;
                    for (int j = 0; j < width; ++j) {
                        if (cfg.kind == "frequency") {
                            ds.features(row, j) =
                                rows(cls, j) +
                                cfg.noise_frac * rows(cls, j) * rng.normal();
                        } else {
                            ds.features(row, j) = std::max(
                                0.0, rows(cls, j) + sigma_frf * rng.normal());
                        }
                    }
                }
            }

            if (cs.structure_index == 1) {
                std::fill(ds.labelled_mask.begin(), ds.labelled_mask.end(), 1);
            } else {
                // Labelled healthy subset: a deterministic random draw.
                Rng mask_rng(derive_seed(master_seed,
                                         {si, static_cast<std::uint64_t>(s), 1000}));
                const int n_label = std::max(
                    1, static_cast<int>(cfg.labelled_healthy_fraction * cfg.n_reps));
                std::vector<int> idx(cfg.n_reps);
                for (int i = 0; i < cfg.n_reps; ++i) idx[i] = i;
                for (int i = cfg.n_reps - 1; i > 0; --i) {
                    const int j = static_cast<int>(
                        mask_rng.uniform_below(static_cast<std::uint64_t>(i + 1)));
                    std::swap(idx[i], idx[j]);
                }
                for (int i = 0; i < n_label; ++i) ds.labelled_mask[idx[i]] = 1;
            }
            sd.per_sensor.push_back(std::move(ds));
        }
        out.push_back(std::move(sd));
    }
    return out;
}

inline std::vector<StructureData> build_chain(
    const StructureParams& base, const MorphSpec& spec,
    const std::vector<DamageSpec>& damage_specs, const std::vector<double>& alphas,
    const FeatureConfig& cfg, std::uint64_t master_seed) {
    return sample_chain(build_clean_chain(base, spec, damage_specs, alphas, cfg),
                        cfg, master_seed);
}

} // namespace geoflow

#endif
