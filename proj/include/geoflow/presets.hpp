#ifndef GEOFLOW_PRESETS_HPP
#define GEOFLOW_PRESETS_HPP

#include <vector>

#include "geoflow/structfam.hpp"

namespace geoflow {

// Default two-span bridge analog: 32 m steel deck (7 m x 0.7 m section,
// E = 2e11 Pa, rho = 7850 kg/m^3) on end springs of 1e12 N/m with one
// midspan support modelled by the axial stiffness and mass of the
// 3 m x 1 m x 5 m concrete column (E = 1.9e10 Pa, rho = 2392 kg/m^3).
inline StructureParams case1_base_params() {
    constexpr double deck_w = 7.0, deck_h = 0.7;
    constexpr double deck_e = 2e11, deck_rho = 7850.0;
    constexpr double col_w = 3.0, col_t = 1.0, col_h = 5.0;
    constexpr double col_e = 1.9e10, col_rho = 2392.0;

    StructureParams p;
    p.deck_length = 32.0;
    p.deck_ei = deck_e * deck_w * deck_h * deck_h * deck_h / 12.0;
    p.deck_rho_a = deck_rho * deck_w * deck_h;
    p.n_elements = 200;
    p.boundary_spring = 1e12;
    p.damping_ratio = 0.01;

    SupportSpec mid;
    mid.position = 0.5;
    mid.stiffness = col_e * col_w * col_t / col_h; // axial EA/L
    mid.mass = col_rho * col_w * col_t * col_h;
    p.supports.push_back(mid);
    return p;
}

inline MorphSpec case1_morph_spec() {
    constexpr double col_e = 1.9e10, col_rho = 2392.0;
    MorphSpec spec;
    spec.moving_support_start = 0.5;
    spec.moving_support_end = 0.75;
    spec.full_stiffness = col_e * 3.0 * 1.0 / 5.0;
    spec.full_mass = col_rho * 3.0 * 1.0 * 5.0;
    spec.alpha_floor = 0.1;
    return spec;
}

// Partial-depth material loss centred at 85% of span: 70%-width,
// 40%-depth cut, EI factor from the composite second moment of area.
inline DamageSpec case1_damage_spec() {
    DamageSpec d;
    d.kind = DamageSpec::Kind::deck_patch;
    d.centre = 0.85;
    d.extent = 0.05;
    d.ei_factor = deck_patch_ei_factor(0.7, 0.4);
    return d;
}

/// 18-structure alpha grid: source at 0, 16 interior values in
/// [alpha_floor + step, 1), target at 1.
inline std::vector<double> case1_alphas(double alpha_floor = 0.1,
                                        int n_intermediates = 16) {
    std::vector<double> alphas;
    alphas.push_back(0.0);
    for (int i = 1; i <= n_intermediates; ++i)
        alphas.push_back(alpha_floor +
                         (1.0 - alpha_floor) * i / (n_intermediates + 1));
    alphas.push_back(1.0);
    return alphas;
}

inline FeatureConfig case1_feature_config() {
    FeatureConfig cfg;
    cfg.kind = "frequency";
    cfg.n_modes = 15;
    cfg.n_reps = 100;
    cfg.noise_frac = 0.008;
    cfg.labelled_healthy_fraction = 0.2;
    return cfg;
}

} // namespace geoflow

#endif
