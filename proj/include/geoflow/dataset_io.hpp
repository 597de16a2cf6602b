#ifndef GEOFLOW_DATASET_IO_HPP
#define GEOFLOW_DATASET_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoflow/errors.hpp"
#include "geoflow/harness.hpp"
#include "geoflow/structfam.hpp"

namespace geoflow {

namespace io {

/// Round-trip float serialisation: 17 significant digits.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Accuracy fractions in report JSON carry 6 decimal places.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline std::string class_name(int cls) {
    if (cls == 0) return "healthy";
    return "d" + std::to_string(cls);
}

inline int class_index(const std::string& name) {
    if (name == "healthy") return 0;
    if (name.size() >= 2 && name[0] == 'd') {
        try {
            const int idx = std::stoi(name.substr(1));
            if (idx >= 1) return idx;
        } catch (...) {
        }
    }
    throw data_error("unknown class name '" + name + "'");
}

/// Writes content to a temporary sibling file, then renames into place so
/// an interrupted run never leaves a partially-written artifact.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.flush()) throw data_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string chain_notation(const std::vector<int>& indices) {
    std::string s = "[";
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(indices[i]);
    }
    return s + "]";
}

} // namespace io

/// CSV dataset contract: header then one row per sample,
/// `structure_index,sample_id,class,labelled,feat_0..feat_{D-1}`,
/// floats at 17 significant digits. One file per (structure, sensor).
inline std::string dataset_to_csv(const DomainDataset& ds) {
    const auto n = ds.features.rows();
    const auto width = ds.features.cols();
    if (static_cast<Eigen::Index>(ds.labels.size()) != n ||
        static_cast<Eigen::Index>(ds.labelled_mask.size()) != n)
        throw input_error("dataset_to_csv: label/mask size mismatch");

    std::string out = "structure_index,sample_id,class,labelled";
    for (Eigen::Index j = 0; j < width; ++j)
        out += ",feat_" + std::to_string(j);
    out += '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        out += std::to_string(ds.structure_index);
        out += ',' + std::to_string(i);
        out += ',' + io::class_name(ds.labels[i]);
        out += ',' + std::string(ds.labelled_mask[i] ? "1" : "0");
        for (Eigen::Index j = 0; j < width; ++j)
            out += ',' + io::format_double(ds.features(i, j));
        out += '\n';
    }
    return out;
}

inline DomainDataset dataset_from_csv(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line))
        throw data_error(name + ": empty dataset file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 5 || header[0] != "structure_index" ||
        header[1] != "sample_id" || header[2] != "class" || header[3] != "labelled")
        throw data_error(name + ": malformed dataset header");
    const int width = static_cast<int>(header.size()) - 4;
    for (int j = 0; j < width; ++j)
        if (header[4 + j] != "feat_" + std::to_string(j))
            throw data_error(name + ": malformed feature column " + header[4 + j]);

    std::vector<std::vector<double>> rows;
    DomainDataset ds;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) != width + 4)
            throw data_error(name + ":" + std::to_string(line_no) +
                             ": wrong column count");
        try {
            ds.structure_index = std::stoi(cells[0]);
            ds.labels.push_back(io::class_index(cells[2]));
            if (cells[3] != "0" && cells[3] != "1")
                throw data_error(name + ":" + std::to_string(line_no) +
                                 ": labelled flag must be 0 or 1");
            ds.labelled_mask.push_back(cells[3] == "1" ? 1 : 0);
            std::vector<double> feats(width);
            for (int j = 0; j < width; ++j) {
                std::size_t used = 0;
                feats[j] = std::stod(cells[4 + j], &used);
                if (used != cells[4 + j].size())
                    throw data_error(name + ":" + std::to_string(line_no) +
                                     ": bad float '" + cells[4 + j] + "'");
            }
            rows.push_back(std::move(feats));
        } catch (const data_error&) {
            throw;
        } catch (const std::exception&) {
            throw data_error(name + ":" + std::to_string(line_no) +
                             ": unparseable row");
        }
    }
    if (rows.empty()) throw data_error(name + ": dataset has no samples");
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < width; ++j)
            ds.features(static_cast<Eigen::Index>(i), j) = rows[i][j];
    return ds;
}

inline DomainDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open dataset file " + path.string());
    return dataset_from_csv(in, path.filename().string());
}

inline nlohmann::ordered_json spec_to_json(const ChainSpec& spec) {
    nlohmann::ordered_json j;
    j["chain"] = io::chain_notation(spec.structure_indices);
    j["structure_indices"] = spec.structure_indices;
    j["method"] = spec.method;
    j["dim_fixed"] = spec.dim.fixed;
    j["dim_variance_threshold"] = spec.dim.variance_threshold;
    j["dim_cap"] = spec.dim.cap;
    j["aligner"] = spec.aligner;
    j["labelled_healthy_fraction"] = spec.labelled_healthy_fraction;
    j["svm_c"] = spec.svm_c;
    j["wrms_mix"] = spec.wrms_mix;
    j["pseudo_margin_threshold"] = spec.pseudo_margin_threshold;
    return j;
}

/// Chain report JSON: {spec, per_hop, accuracy_mean, accuracy_std,
/// n_realisations, confusion_mean}; accuracies as 6-decimal fractions.
inline std::string chain_report_to_json(const ChainReport& report) {
    nlohmann::ordered_json j;
    j["spec"] = spec_to_json(report.spec);
    j["per_hop"] = nlohmann::ordered_json::array();
    for (const auto& hop : report.per_hop) {
        nlohmann::ordered_json h;
        h["source_index"] = hop.source_index;
        h["target_index"] = hop.target_index;
        h["cosine_to_target"] = io::round6(hop.cosine_to_target);
        h["cosine_to_origin"] = io::round6(hop.cosine_to_origin);
        nlohmann::ordered_json counts = nlohmann::ordered_json::object();
        for (const auto& [cls, count] : hop.pseudo_label_counts)
            counts[io::class_name(cls)] = count;
        h["pseudo_label_counts"] = counts;
        h["classifier_collapsed"] = hop.classifier_collapsed;
        j["per_hop"].push_back(h);
    }
    j["accuracy_mean"] = io::round6(report.accuracy_mean);
    j["accuracy_std"] = io::round6(report.accuracy_std);
    j["sem"] = io::round6(report.sem);
    j["n_realisations"] = report.n_realisations;
    j["converged"] = report.converged;
    j["confusion_mean"] = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < report.confusion_mean.rows(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < report.confusion_mean.cols(); ++c)
            row.push_back(io::round6(report.confusion_mean(i, c)));
        j["confusion_mean"].push_back(row);
    }
    return j.dump(2) + "\n";
}

/// Summary CSV: `k,method,acc_mean_pct,acc_std_pct,chain,n_real` with
/// percentages at two decimals and Table-2-style chain notation.
inline std::string summary_to_csv(const SummaryTable& table) {
    std::string out = "k,method,acc_mean_pct,acc_std_pct,chain,n_real\n";
    char buf[64];
    for (const auto& row : table.rows) {
        out += std::to_string(row.k) + ',' + row.method + ',';
        std::snprintf(buf, sizeof(buf), "%.2f", row.accuracy_mean_pct);
        out += buf;
        out += ',';
        std::snprintf(buf, sizeof(buf), "%.2f", row.accuracy_std_pct);
        out += buf;
        out += ",\"" + io::chain_notation(row.chain_indices) + "\",";
        out += std::to_string(row.n_realisations) + '\n';
    }
    return out;
}

/// Column-aligned plain-text rendering of the summary table.
inline std::string summary_to_text(const SummaryTable& table) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"k", "method", "acc_mean_pct", "acc_std_pct", "chain", "n_real"});
    char buf[64];
    for (const auto& row : table.rows) {
        std::vector<std::string> line;
        line.push_back(std::to_string(row.k));
        line.push_back(row.method);
        std::snprintf(buf, sizeof(buf), "%.2f", row.accuracy_mean_pct);
        line.push_back(buf);
        std::snprintf(buf, sizeof(buf), "%.2f", row.accuracy_std_pct);
        line.push_back(buf);
        line.push_back(io::chain_notation(row.chain_indices));
        line.push_back(std::to_string(row.n_realisations));
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> widths(cells[0].size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c)
            widths[c] = std::max(widths[c], line[c].size());
    std::string out;
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out += line[c];
            if (c + 1 < line.size())
                out += std::string(widths[c] - line[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

/// Alignment-curve CSV: `hop,cos_src_tgt,cos_src_origin`, one row per hop.
inline std::string curves_to_csv(const AlignmentCurves& curves) {
    if (curves.source_target.size() != curves.source_origin.size())
        throw input_error("curves_to_csv: curve length mismatch");
    std::string out = "hop,cos_src_tgt,cos_src_origin\n";
    char buf[64];
    for (std::size_t h = 0; h < curves.source_target.size(); ++h) {
        out += std::to_string(h + 1);
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", curves.source_target[h],
                      curves.source_origin[h]);
        out += buf;
    }
    return out;
}

} // namespace geoflow

#endif
