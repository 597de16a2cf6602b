#ifndef GEOFLOW_CONFIG_HPP
#define GEOFLOW_CONFIG_HPP

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geoflow/chain.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/harness.hpp"
#include "geoflow/presets.hpp"
#include "geoflow/structfam.hpp"

namespace geoflow {

/// Full experiment description assembled from a key=value document plus
/// command-line overrides. Field defaults reproduce the bridge preset.
struct RunConfig {
    StructureParams base = case1_base_params();
    MorphSpec morph = case1_morph_spec();
    std::vector<DamageSpec> damage = {case1_damage_spec()};
    std::vector<double> alphas = case1_alphas();
    FeatureConfig features = case1_feature_config();
    ChainSpec chain;
    ExperimentConfig harness;
    std::vector<int> search_k_values = {0, 1, 2, 3, 4};
    int search_n_chains = 60;
    int search_n_realisations = 10;
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    RunConfig() {
        chain.structure_indices = {}; // empty means source..target direct
        harness.fixed_realisations = 100;
    }
};

namespace config_detail {

struct Entry {
    std::string value;
    int line = 0; // 0 when injected via --set
};

using Tree = std::map<std::string, Entry>;

inline std::string where(const std::string& key, const Entry& e) {
    if (e.line > 0) return "line " + std::to_string(e.line) + " (" + key + ")";
    return "--set " + key;
}

inline double to_double(const std::string& key, const Entry& e) {
    try {
        std::size_t used = 0;
        const double v = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw config_error(where(key, e) + ": expected a number, got '" +
                           e.value + "'");
    }
}

inline int to_int(const std::string& key, const Entry& e) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw config_error(where(key, e) + ": expected an integer, got '" +
                           e.value + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const Entry& e) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw config_error(where(key, e) + ": expected an unsigned integer, got '" +
                           e.value + "'");
    }
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const Entry& e, F&& convert) {
    std::vector<T> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto begin = item.find_first_not_of(" \t");
        const auto end = item.find_last_not_of(" \t");
        if (begin == std::string::npos)
            throw config_error(where(key, e) + ": empty list element");
        out.push_back(convert(key, Entry{item.substr(begin, end - begin + 1),
                                         e.line}));
    }
    if (out.empty()) throw config_error(where(key, e) + ": empty list");
    return out;
}

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

} // namespace config_detail

/// Parses `key = value` lines (dotted key paths, '#' comments). Later
/// occurrences of a key override earlier ones.
inline config_detail::Tree parse_config_text(const std::string& text) {
    config_detail::Tree tree;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string trimmed = config_detail::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) +
                               ": expected 'key = value', got '" + trimmed + "'");
        const std::string key = config_detail::trim(trimmed.substr(0, eq));
        const std::string value = config_detail::trim(trimmed.substr(eq + 1));
        if (key.empty())
            throw config_error("line " + std::to_string(line_no) + ": empty key");
        if (value.empty())
            throw config_error("line " + std::to_string(line_no) + ": empty value for '" +
                               key + "'");
        tree[key] = config_detail::Entry{value, line_no};
    }
    return tree;
}

/// Applies one `--set key=value` override on top of a parsed tree.
inline void apply_override(config_detail::Tree& tree, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw config_error("--set expects key=value, got '" + assignment + "'");
    const std::string key = config_detail::trim(assignment.substr(0, eq));
    const std::string value = config_detail::trim(assignment.substr(eq + 1));
    if (key.empty() || value.empty())
        throw config_error("--set expects key=value, got '" + assignment + "'");
    tree[key] = config_detail::Entry{value, 0};
}

/// Validates the tree against the full schema (unknown keys rejected with
/// their line) and materialises a RunConfig.
inline RunConfig build_run_config(const config_detail::Tree& tree) {
    namespace cd = config_detail;
    RunConfig cfg;
    std::set<std::string> seen;
    auto take = [&](const std::string& key) -> const cd::Entry* {
        const auto it = tree.find(key);
        if (it == tree.end()) return nullptr;
        seen.insert(key);
        return &it->second;
    };
    auto set_double = [&](const std::string& key, double& slot) {
        if (const auto* e = take(key)) slot = cd::to_double(key, *e);
    };
    auto set_int = [&](const std::string& key, int& slot) {
        if (const auto* e = take(key)) slot = cd::to_int(key, *e);
    };
    auto set_string = [&](const std::string& key, std::string& slot) {
        if (const auto* e = take(key)) slot = e->value;
    };

    set_double("structure.deck_length", cfg.base.deck_length);
    set_double("structure.deck_ei", cfg.base.deck_ei);
    set_double("structure.deck_rho_a", cfg.base.deck_rho_a);
    set_int("structure.n_elements", cfg.base.n_elements);
    set_double("structure.boundary_spring", cfg.base.boundary_spring);
    set_double("structure.damping_ratio", cfg.base.damping_ratio);
    if (!cfg.base.supports.empty()) {
        set_double("structure.mid_support.position", cfg.base.supports[0].position);
        set_double("structure.mid_support.stiffness", cfg.base.supports[0].stiffness);
        set_double("structure.mid_support.mass", cfg.base.supports[0].mass);
    }

    set_double("morph.start", cfg.morph.moving_support_start);
    set_double("morph.end", cfg.morph.moving_support_end);
    set_double("morph.full_stiffness", cfg.morph.full_stiffness);
    set_double("morph.full_mass", cfg.morph.full_mass);
    set_double("morph.alpha_floor", cfg.morph.alpha_floor);
    if (const auto* e = take("morph.alphas"))
        cfg.alphas = cd::to_list<double>("morph.alphas", *e, cd::to_double);
    else if (const auto* e2 = take("morph.n_intermediates"))
        cfg.alphas = case1_alphas(cfg.morph.alpha_floor,
                                  cd::to_int("morph.n_intermediates", *e2));

    if (const auto* e = take("damage.kind")) {
        if (e->value == "deck_patch")
            cfg.damage[0].kind = DamageSpec::Kind::deck_patch;
        else if (e->value == "support_cut")
            cfg.damage[0].kind = DamageSpec::Kind::support_cut;
        else
            throw config_error(cd::where("damage.kind", *e) +
                               ": expected deck_patch or support_cut");
    }
    set_double("damage.centre", cfg.damage[0].centre);
    set_double("damage.extent", cfg.damage[0].extent);
    set_double("damage.ei_factor", cfg.damage[0].ei_factor);
    set_int("damage.support_index", cfg.damage[0].support_index);
    set_double("damage.stiffness_factor", cfg.damage[0].stiffness_factor);

    set_string("features.kind", cfg.features.kind);
    set_int("features.n_modes", cfg.features.n_modes);
    set_int("features.n_reps", cfg.features.n_reps);
    set_double("features.noise_frac", cfg.features.noise_frac);
    if (const auto* e = take("features.sensors"))
        cfg.features.sensors =
            cd::to_list<double>("features.sensors", *e, cd::to_double);
    set_double("features.drive", cfg.features.drive);
    set_double("features.band_lo", cfg.features.band_lo);
    set_double("features.band_hi", cfg.features.band_hi);
    set_int("features.n_points", cfg.features.n_points);
    set_double("features.snr_db", cfg.features.snr_db);
    set_double("features.labelled_healthy_fraction",
               cfg.features.labelled_healthy_fraction);
    if (cfg.features.kind != "frequency" && cfg.features.kind != "frf")
        throw config_error("features.kind: expected frequency or frf, got '" +
                           cfg.features.kind + "'");

    if (const auto* e = take("chain.indices")) {
        if (e->value == "direct") {
            cfg.chain.structure_indices = {};
        } else if (e->value == "all") {
            cfg.chain.structure_indices.clear();
            for (std::size_t i = 1; i <= cfg.alphas.size(); ++i)
                cfg.chain.structure_indices.push_back(static_cast<int>(i));
        } else {
            cfg.chain.structure_indices =
                cd::to_list<int>("chain.indices", *e, cd::to_int);
        }
    }
    set_string("chain.method", cfg.chain.method);
    set_int("chain.dim_fixed", cfg.chain.dim.fixed);
    set_double("chain.dim_variance_threshold", cfg.chain.dim.variance_threshold);
    set_int("chain.dim_cap", cfg.chain.dim.cap);
    set_string("chain.aligner", cfg.chain.aligner);
    set_double("chain.svm_c", cfg.chain.svm_c);
    set_double("chain.wrms_mix", cfg.chain.wrms_mix);
    set_double("chain.wrms_epsilon", cfg.chain.wrms_epsilon);
    set_double("chain.pseudo_margin_threshold", cfg.chain.pseudo_margin_threshold);
    cfg.chain.labelled_healthy_fraction = cfg.features.labelled_healthy_fraction;

    set_int("harness.fixed_realisations", cfg.harness.fixed_realisations);
    set_double("harness.sem_target", cfg.harness.sem_target);
    set_int("harness.min_realisations", cfg.harness.min_realisations);
    set_int("harness.max_realisations", cfg.harness.max_realisations);
    set_int("harness.batch", cfg.harness.batch);
    set_int("harness.jobs", cfg.harness.jobs);
    if (cfg.harness.sem_target > 0.0) cfg.harness.fixed_realisations = -1;

    if (const auto* e = take("search.k_values"))
        cfg.search_k_values = cd::to_list<int>("search.k_values", *e, cd::to_int);
    set_int("search.n_chains", cfg.search_n_chains);
    set_int("search.n_realisations", cfg.search_n_realisations);

    if (const auto* e = take("seed")) cfg.seed = cd::to_u64("seed", *e);
    set_string("out_dir", cfg.out_dir);

    for (const auto& [key, entry] : tree)
        if (!seen.contains(key))
            throw config_error(cd::where(key, entry) + ": unknown key '" + key +
                               "'");

    // default chain: direct source -> target over the alpha grid
    if (cfg.chain.structure_indices.empty())
        cfg.chain.structure_indices = {1, static_cast<int>(cfg.alphas.size())};
    cfg.harness.master_seed = cfg.seed;
    return cfg;
}

} // namespace geoflow

#endif
