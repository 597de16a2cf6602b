#ifndef GEOFLOW_HARNESS_HPP
#define GEOFLOW_HARNESS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "geoflow/align.hpp"
#include "geoflow/chain.hpp"
#include "geoflow/errors.hpp"

namespace geoflow {

/// Monte-Carlo driver settings. Exactly one of fixed_realisations /
/// sem_target drives the stopping decision.
struct ExperimentConfig {
    int fixed_realisations = -1;   // > 0 means fixed count
    double sem_target = -1.0;      // > 0 means adaptive SEM stop
    int min_realisations = 25;
    int max_realisations = 1000;
    int batch = 25;
    std::uint64_t master_seed = 0;
    int jobs = 1;
};

struct SummaryRow {
    int k = 0;
    std::string method;
    double accuracy_mean_pct = 0.0;
    double accuracy_std_pct = 0.0;
    std::vector<int> chain_indices;
    int n_realisations = 0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;
};

/// Aggregated outcome for one chain spec.
struct ChainReport {
    ChainSpec spec;
    std::vector<HopRecord> per_hop; // from the first realisation
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    double sem = 0.0;
    int n_realisations = 0;
    bool converged = true;
    Matrix confusion_mean;
    std::vector<double> accuracies;
    AlignmentCurves curves;
};

struct ConfusionReport {
    Matrix mean_counts;             // element-wise mean over realisations
    std::vector<double> row_totals; // true-class totals (mean)
    std::vector<double> recall;     // diagonal / row sum
};

/// Number of realisations consumed by the batched SEM rule on a given
/// accuracy stream: the first multiple of `batch` (at least
/// min_realisations) where std/sqrt(n) < sem_target, capped at the
/// stream length. Second member reports convergence.
inline std::pair<int, bool> sem_stop_index(const std::vector<double>& stream,
                                           double sem_target, int batch,
                                           int min_realisations,
                                           int max_realisations) {
    const int limit = std::min<int>(static_cast<int>(stream.size()), max_realisations);
    int n = 0;
    while (n < limit) {
        n = std::min(n + batch, limit);
        if (n < min_realisations) continue;
        std::vector<double> prefix(stream.begin(), stream.begin() + n);
        const auto [mean, sd] = detail::mean_std(prefix);
        (void)mean;
        if (sd / std::sqrt(static_cast<double>(n)) < sem_target) return {n, true};
    }
    return {n, false};
}

namespace detail {

// Runs realisations [start, start+count) of one chain spec in parallel,
// writing results by index so the output is order-independent.
inline void run_batch(const ChainSampler& sampler, const ChainSpec& spec,
                      std::uint64_t master_seed, std::uint64_t chain_id, int start,
                      int count, int jobs, std::vector<ChainResult>& results) {
    results.resize(start + count);
    auto work = [&](int begin, int end) {
        for (int r = begin; r < end; ++r) {
            const std::uint64_t rs = derive_seed(
                master_seed, {chain_id, static_cast<std::uint64_t>(r)});
            results[r] = propagate(sampler(rs), spec, rs);
        }
    };
    if (jobs <= 1 || count <= 1) {
        work(start, start + count);
        return;
    }
    std::vector<std::thread> threads;
    const int per = (count + jobs - 1) / jobs;
    for (int t = 0; t < jobs; ++t) {
        const int begin = start + t * per;
        const int end = std::min(start + count, begin + per);
        if (begin >= end) break;
        threads.emplace_back(work, begin, end);
    }
    for (auto& t : threads) t.join();
}

} // namespace detail

inline ConfusionReport confusion_report(const std::vector<ChainResult>& results) {
    if (results.empty()) throw input_error("confusion_report: no results");
    const auto rows = results.front().confusion.rows();
    const auto cols = results.front().confusion.cols();
    ConfusionReport report;
    report.mean_counts = Matrix::Zero(rows, cols);
    for (const auto& r : results) {
        if (r.confusion.rows() != rows || r.confusion.cols() != cols)
            throw input_error("confusion_report: inconsistent class sets");
        report.mean_counts += r.confusion;
    }
    report.mean_counts /= static_cast<double>(results.size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double total = report.mean_counts.row(i).sum();
        report.row_totals.push_back(total);
        report.recall.push_back(total > 0 ? report.mean_counts(i, i) / total : 0.0);
    }
    return report;
}

/// Runs one chain spec until the fixed count or the batched SEM stop.
/// A chain that cannot reach the SEM target within max_realisations is
/// reported with converged = false, never silently passed.
inline ChainReport run_chain_experiment(const ChainSampler& sampler,
                                        const ChainSpec& spec,
                                        const ExperimentConfig& cfg,
                                        std::uint64_t chain_id = 0) {
    const bool adaptive = cfg.sem_target > 0.0;
    if (adaptive == (cfg.fixed_realisations > 0))
        throw input_error(
            "run_experiment: exactly one of fixed count / sem_target required");
    if (adaptive && (cfg.min_realisations < 2 ||
                     cfg.max_realisations < cfg.min_realisations))
        throw input_error("run_experiment: need max >= min >= 2 for adaptive stop");

    std::vector<ChainResult> results;
    int n = 0;
    bool converged = true;
    if (!adaptive) {
        detail::run_batch(sampler, spec, cfg.master_seed, chain_id, 0,
                          cfg.fixed_realisations, cfg.jobs, results);
        n = cfg.fixed_realisations;
    } else {
        converged = false;
        while (n < cfg.max_realisations) {
            const int count = std::min(cfg.batch, cfg.max_realisations - n);
            detail::run_batch(sampler, spec, cfg.master_seed, chain_id, n, count,
                              cfg.jobs, results);
            n += count;
            if (n < cfg.min_realisations) continue;
            std::vector<double> accs;
            for (int i = 0; i < n; ++i) accs.push_back(results[i].final_accuracy);
            const auto [mean, sd] = detail::mean_std(accs);
            (void)mean;
            if (sd / std::sqrt(static_cast<double>(n)) < cfg.sem_target) {
                converged = true;
                break;
            }
        }
    }
    results.resize(n);

    ChainReport report;
    report.spec = spec;
    report.n_realisations = n;
    report.converged = converged;
    for (const auto& r : results) report.accuracies.push_back(r.final_accuracy);
    const auto [mean, sd] = detail::mean_std(report.accuracies);
    report.accuracy_mean = mean;
    report.accuracy_std = sd;
    report.sem = sd / std::sqrt(static_cast<double>(n));
    report.per_hop = results.front().hops;
    report.confusion_mean = confusion_report(results).mean_counts;

    // Alignment curves from the first realisation's aligned chain.
    const std::uint64_t rs0 = derive_seed(cfg.master_seed, {chain_id, 0});
    const auto pool = sampler(rs0);
    std::vector<Matrix> aligned;
    for (int idx : spec.structure_indices)
        aligned.push_back(align_domain(pool[idx - 1], spec).features);
    report.curves =
        alignment_curve(aligned, detail::resolve_dim(spec, aligned.front()));
    return report;
}

inline SummaryTable summarise(const std::vector<ChainReport>& reports) {
    SummaryTable table;
    for (const auto& r : reports) {
        SummaryRow row;
        row.k = static_cast<int>(r.spec.structure_indices.size()) - 2;
        row.method = r.spec.method;
        row.accuracy_mean_pct = 100.0 * r.accuracy_mean;
        row.accuracy_std_pct = 100.0 * r.accuracy_std;
        row.chain_indices = r.spec.structure_indices;
        row.n_realisations = r.n_realisations;
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace geoflow

#endif
