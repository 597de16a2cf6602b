#ifndef GEOFLOW_CHAIN_HPP
#define GEOFLOW_CHAIN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geoflow/align.hpp"
#include "geoflow/classify.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/gfk.hpp"
#include "geoflow/rng.hpp"
#include "geoflow/structfam.hpp"
#include "geoflow/subspace.hpp"

namespace geoflow {

/// Subspace dimension rule: explicit d when fixed >= 0, otherwise the
/// smallest d explaining variance_threshold of the source variance,
/// capped. The GFK d <= D/2 constraint is enforced last.
struct SubspaceDim {
    int fixed = 5;
    double variance_threshold = 0.95;
    int cap = 30;
};

struct ChainSpec {
    std::vector<int> structure_indices; // 1-based positions, ascending
    std::string method = "gfk";         // "linear" or "gfk"
    SubspaceDim dim;
    std::string aligner = "nca";        // "nca", "wrms", or "none"
    double labelled_healthy_fraction = 0.2;
    double svm_c = 1.0;
    double wrms_mix = 0.53;
    double wrms_epsilon = 1e-12;
    // Pseudo-label confidence hook; 0 propagates every prediction.
    double pseudo_margin_threshold = 0.0;
};

struct HopRecord {
    int source_index = 0;
    int target_index = 0;
    double cosine_to_target = 0.0;
    double cosine_to_origin = 0.0;
    std::map<int, int> pseudo_label_counts;
    bool classifier_collapsed = false;
};

struct ChainResult {
    double final_accuracy = 0.0; // fraction over unlabelled target samples
    Matrix confusion;            // true class x predicted class counts
    std::vector<HopRecord> hops;
    std::uint64_t realisation_seed = 0;
};

namespace detail {

inline void validate_spec(const ChainSpec& spec) {
    if (spec.structure_indices.size() < 2)
        throw input_error("chain: need at least source and target indices");
    for (std::size_t i = 1; i < spec.structure_indices.size(); ++i)
        if (spec.structure_indices[i] <= spec.structure_indices[i - 1])
            throw input_error("chain: structure indices must be strictly ascending");
    if (spec.method != "linear" && spec.method != "gfk")
        throw input_error("chain: unknown method '" + spec.method + "'");
    if (spec.aligner != "nca" && spec.aligner != "wrms" && spec.aligner != "none")
        throw input_error("chain: unknown aligner '" + spec.aligner + "'");
}

inline int resolve_dim(const ChainSpec& spec, const Matrix& source_features) {
    const int dim_d = static_cast<int>(source_features.cols());
    const int n = static_cast<int>(source_features.rows());
    int d;
    if (spec.dim.fixed >= 1) {
        d = spec.dim.fixed;
    } else {
        Matrix centred = source_features.rowwise() - source_features.colwise().mean();
        Eigen::JacobiSVD<Matrix> svd(centred);
        const Vector sv = svd.singularValues().array().square();
        const double total = sv.sum();
        double acc = 0.0;
        d = static_cast<int>(sv.size());
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            acc += sv(i);
            if (acc >= spec.dim.variance_threshold * total) {
                d = static_cast<int>(i) + 1;
                break;
            }
        }
        d = std::min(d, spec.dim.cap);
    }
    d = std::min({d, n - 1, dim_d});
    if (spec.method == "gfk") d = std::min(d, dim_d / 2);
    return std::max(d, 1);
}

inline int majority_class(const std::vector<int>& labels) {
    std::map<int, int> counts;
    for (int l : labels) ++counts[l];
    int best = labels.front();
    int best_count = -1;
    for (const auto& [cls, count] : counts)
        if (count > best_count) { // map order ties to the lowest class
            best = cls;
            best_count = count;
        }
    return best;
}

} // namespace detail

struct HopOutput {
    std::vector<int> predicted;
    HopRecord record;
    Subspace target_subspace; // for the origin-cosine bookkeeping
};

/// One transfer step. Linear: source PCA, both domains projected, SVM on
/// the projected source. GFK: separate source/target PCA (transductive),
/// kernel built, SVM in the embedded space. Labelled-healthy target rows
/// retain their labels regardless of prediction.
inline HopOutput run_hop(const DomainDataset& source,
                         const std::vector<int>& source_labels,
                         const DomainDataset& target, const ChainSpec& spec) {
    if (source.features.cols() != target.features.cols())
        throw dimension_error("run_hop: feature dimensions differ");
    const int d = detail::resolve_dim(spec, source.features);

    const Subspace src_sub = fit_pca(source.features, d);
    const Subspace tgt_sub = fit_pca(target.features, d);

    HopOutput out;
    out.record.source_index = source.structure_index;
    out.record.target_index = target.structure_index;
    out.record.cosine_to_target = leading_cosine(src_sub, tgt_sub);
    out.target_subspace = tgt_sub;

    Matrix train_feats, test_feats;
    if (spec.method == "linear") {
        const Vector mu = source.features.colwise().mean();
        train_feats = (source.features.rowwise() - mu.transpose()) * src_sub.basis;
        test_feats = (target.features.rowwise() - mu.transpose()) * src_sub.basis;
    } else {
        const FlowKernel kernel = build_kernel(src_sub, tgt_sub);
        train_feats = embed(kernel, source.features);
        test_feats = embed(kernel, target.features);
    }

    std::vector<int> predicted(target.features.rows());
    bool collapsed_training = false;
    try {
        const SvmModel model = svm_train(train_feats, source_labels, spec.svm_c);
        const SvmPrediction pred = svm_predict(model, test_feats);
        predicted = pred.labels;
        if (spec.pseudo_margin_threshold > 0.0) {
            // Low-confidence predictions fall back to the majority class.
            const int fallback = detail::majority_class(source_labels);
            for (Eigen::Index i = 0; i < pred.margins.size(); ++i)
                if (pred.margins(i) < spec.pseudo_margin_threshold)
                    predicted[i] = fallback;
        }
    } catch (const degenerate_training_error&) {
        // Single-class source: constant prediction keeps the chain running
        // and is surfaced as a collapse, not hidden.
        collapsed_training = true;
        std::fill(predicted.begin(), predicted.end(),
                  detail::majority_class(source_labels));
    }

    // Labelled target samples keep their true labels.
    std::set<int> unlabelled_classes;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (target.labelled_mask[i])
            predicted[i] = target.labels[i];
        else
            unlabelled_classes.insert(predicted[i]);
    }
    out.record.classifier_collapsed =
        collapsed_training || unlabelled_classes.size() <= 1;
    for (int l : predicted) ++out.record.pseudo_label_counts[l];
    out.predicted = std::move(predicted);
    return out;
}

/// Aligns each domain independently per the spec's aligner. NCA fits on
/// the domain's labelled healthy rows; WRMS normalises per dataset.
inline DomainDataset align_domain(const DomainDataset& ds, const ChainSpec& spec) {
    DomainDataset out = ds;
    if (spec.aligner == "nca") {
        std::vector<Eigen::Index> healthy;
        for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
            if (ds.labelled_mask[i] && ds.labels[i] == 0) healthy.push_back(i);
        if (healthy.size() < 2)
            throw input_error("align_domain: NCA needs >= 2 labelled healthy samples");
        Matrix subset(healthy.size(), ds.features.cols());
        for (std::size_t i = 0; i < healthy.size(); ++i)
            subset.row(i) = ds.features.row(healthy[i]);
        out.features = nca_apply(nca_fit(subset), ds.features);
    } else if (spec.aligner == "wrms") {
        out.features = wrms_normalise(WrmsConfig{spec.wrms_mix, spec.wrms_epsilon},
                                      ds.features);
    }
    return out;
}

/// Sequential pseudo-label propagation over the selected chain. The final
/// accuracy and confusion are computed over unlabelled target samples
/// only.
inline ChainResult propagate(const std::vector<DomainDataset>& chain_data,
                             const ChainSpec& spec,
                             std::uint64_t realisation_seed = 0) {
    detail::validate_spec(spec);
    for (int idx : spec.structure_indices)
        if (idx < 1 || idx > static_cast<int>(chain_data.size()))
            throw input_error("propagate: structure index out of range");

    std::vector<DomainDataset> domains;
    for (int idx : spec.structure_indices)
        domains.push_back(align_domain(chain_data[idx - 1], spec));

    for (char labelled : domains.front().labelled_mask)
        if (!labelled)
            throw input_error("propagate: source must be fully labelled");

    int n_classes = 0;
    for (const auto& d : domains)
        for (int l : d.labels) n_classes = std::max(n_classes, l + 1);

    const Subspace origin_sub =
        fit_pca(domains.front().features,
                detail::resolve_dim(spec, domains.front().features));

    ChainResult result;
    result.realisation_seed = realisation_seed;
    std::vector<int> working_labels = domains.front().labels;
    for (std::size_t h = 0; h + 1 < domains.size(); ++h) {
        HopOutput hop = run_hop(domains[h], working_labels, domains[h + 1], spec);
        hop.record.cosine_to_origin = leading_cosine(hop.target_subspace, origin_sub);
        result.hops.push_back(hop.record);
        working_labels = std::move(hop.predicted);
    }

    const DomainDataset& target = domains.back();
    result.confusion = Matrix::Zero(n_classes, n_classes);
    int correct = 0, total = 0;
    for (Eigen::Index i = 0; i < target.features.rows(); ++i) {
        if (target.labelled_mask[i]) continue; // labelled healthy excluded
        ++total;
        result.confusion(target.labels[i], working_labels[i]) += 1.0;
        if (working_labels[i] == target.labels[i]) ++correct;
    }
    result.final_accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
    return result;
}

/// Distinct sorted k-subsets of the intermediate pool, each wrapped as
/// source + subset + target. Exhaustive when C(pool, k) <= n_chains,
/// otherwise uniform sampling without replacement among subsets.
inline std::vector<std::vector<int>> enumerate_chains(
    const std::vector<int>& intermediate_pool, int k, int n_chains,
    std::uint64_t seed, int source_index, int target_index) {
    const int pool_size = static_cast<int>(intermediate_pool.size());
    if (k < 0 || k > pool_size)
        throw input_error("enumerate_chains: k exceeds pool size");

    std::vector<int> pool(intermediate_pool);
    std::sort(pool.begin(), pool.end());

    auto wrap = [&](const std::vector<int>& subset) {
        std::vector<int> chain;
        chain.push_back(source_index);
        chain.insert(chain.end(), subset.begin(), subset.end());
        chain.push_back(target_index);
        return chain;
    };

    // C(pool, k) with saturation.
    double n_subsets = 1.0;
    for (int i = 0; i < k; ++i)
        n_subsets *= static_cast<double>(pool_size - i) / (i + 1);

    std::vector<std::vector<int>> chains;
    if (k == 0) {
        chains.push_back(wrap({}));
        return chains;
    }

    if (n_subsets <= static_cast<double>(n_chains) + 0.5) {
        // Exhaustive lexicographic enumeration.
        std::vector<int> comb(k);
        for (int i = 0; i < k; ++i) comb[i] = i;
        while (true) {
            std::vector<int> subset(k);
            for (int i = 0; i < k; ++i) subset[i] = pool[comb[i]];
            chains.push_back(wrap(subset));
            int i = k - 1;
            while (i >= 0 && comb[i] == pool_size - k + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
        }
        return chains;
    }

    Rng rng(seed);
    std::set<std::vector<int>> seen;
    while (static_cast<int>(chains.size()) < n_chains) {
        std::vector<int> picks(pool);
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(rng.uniform_below(
                                  static_cast<std::uint64_t>(pool_size - i)));
            std::swap(picks[i], picks[j]);
        }
        std::vector<int> subset(picks.begin(), picks.begin() + k);
        std::sort(subset.begin(), subset.end());
        if (seen.insert(subset).second) chains.push_back(wrap(subset));
    }
    return chains;
}

/// Produces the full ordered dataset pool for one realisation seed.
using ChainSampler =
    std::function<std::vector<DomainDataset>(std::uint64_t realisation_seed)>;

struct ChainScore {
    std::vector<int> indices;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    int n_realisations = 0;
};

struct SearchResult {
    int k = 0;
    ChainScore best;
    bool exhaustive = false;
    // This search consults target labels and is an exploratory upper
    // bound, not a deployable selection procedure.
    static constexpr const char* caveat =
        "label-informed chain search; not intended as deployable in practice";
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var)};
}

} // namespace detail

/// Evaluates candidate chains per k over Monte-Carlo realisations and
/// returns the best by mean accuracy (ties: smaller std, then
/// lexicographic index order).
inline std::vector<SearchResult> search_chains(
    const ChainSampler& sampler, int n_structures, const ChainSpec& base_spec,
    const std::vector<int>& k_values, int n_chains, int n_realisations,
    std::uint64_t seed) {
    std::vector<int> pool;
    for (int i = 2; i < n_structures; ++i) pool.push_back(i);

    std::vector<SearchResult> results;
    for (int k : k_values) {
        const auto candidates = enumerate_chains(
            pool, k, n_chains, derive_seed(seed, {static_cast<std::uint64_t>(k)}),
            1, n_structures);
        SearchResult sr;
        sr.k = k;
        double n_subsets = 1.0;
        for (int i = 0; i < k; ++i)
            n_subsets *= static_cast<double>(pool.size() - i) / (i + 1);
        sr.exhaustive = n_subsets <= static_cast<double>(n_chains) + 0.5;

        bool have_best = false;
        for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
            ChainSpec spec = base_spec;
            spec.structure_indices = candidates[ci];
            std::vector<double> accs;
            for (int r = 0; r < n_realisations; ++r) {
                const std::uint64_t rs = derive_seed(
                    seed, {static_cast<std::uint64_t>(k), ci,
                           static_cast<std::uint64_t>(r)});
                accs.push_back(propagate(sampler(rs), spec, rs).final_accuracy);
            }
            const auto [mean, sd] = detail::mean_std(accs);
            const bool better =
                !have_best || mean > sr.best.accuracy_mean ||
                (mean == sr.best.accuracy_mean &&
                 (sd < sr.best.accuracy_std ||
                  (sd == sr.best.accuracy_std &&
                   candidates[ci] < sr.best.indices)));
            if (better) {
                sr.best = ChainScore{candidates[ci], mean, sd, n_realisations};
                have_best = true;
            }
        }
        results.push_back(std::move(sr));
    }
    return results;
}

} // namespace geoflow

#endif
