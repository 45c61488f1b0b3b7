#pragma once

// Traffic speed series: T x n matrix of per-section speeds at a fixed
// interval, with optional min-max normalization bounds.

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace kstgcn {

struct NormBounds {
    double lo = 0.0;
    double hi = 1.0;
    bool operator==(const NormBounds&) const = default;
};

struct SpeedTensor {
    Mat values;  // T x n
    std::vector<std::string> time_ids;
    std::vector<std::string> node_ids;
    int interval_minutes = 15;
    std::optional<NormBounds> bounds;  // set when values are normalized

    int n_steps() const { return static_cast<int>(values.rows()); }
    int n_nodes() const { return static_cast<int>(values.cols()); }
};

inline void validate(const SpeedTensor& t) {
    require(t.values.rows() >= 1, "speed tensor needs at least one step");
    require(t.time_ids.size() == static_cast<size_t>(t.values.rows()),
            "speed tensor: time ids must match row count");
    require(t.node_ids.size() == static_cast<size_t>(t.values.cols()),
            "speed tensor: node ids must match column count");
    require(t.values.allFinite(), "speed tensor: values must be finite");
}

// Bounds over a leading slice of rows (the training portion).
inline NormBounds speed_bounds(const SpeedTensor& t, int n_rows = -1) {
    if (n_rows < 0) n_rows = t.n_steps();
    require(n_rows >= 1 && n_rows <= t.n_steps(), "speed_bounds: row count out of range");
    auto block = t.values.topRows(n_rows);
    NormBounds b{block.minCoeff(), block.maxCoeff()};
    require(b.hi > b.lo, "speed_bounds: degenerate range (all values equal)");
    return b;
}

inline SpeedTensor normalize(const SpeedTensor& t, const NormBounds& b) {
    require(!t.bounds.has_value(), "normalize: tensor already normalized");
    require(b.hi > b.lo, "normalize: degenerate bounds");
    SpeedTensor out = t;
    out.values = (t.values.array() - b.lo) / (b.hi - b.lo);
    out.bounds = b;
    return out;
}

inline Mat denormalize_values(const Mat& values, const NormBounds& b) {
    return (values.array() * (b.hi - b.lo) + b.lo).matrix();
}

inline SpeedTensor denormalize(const SpeedTensor& t) {
    require(t.bounds.has_value(), "denormalize: tensor has no bounds");
    SpeedTensor out = t;
    out.values = denormalize_values(t.values, *t.bounds);
    out.bounds.reset();
    return out;
}

inline void save_speed_tensor(const SpeedTensor& t, const std::string& path) {
    validate(t);
    csv::Writer w(path);
    std::vector<std::string> header = {"time_id"};
    header.insert(header.end(), t.node_ids.begin(), t.node_ids.end());
    w.row(header);
    for (int i = 0; i < t.n_steps(); ++i) {
        std::vector<std::string> cells = {t.time_ids[i]};
        for (int j = 0; j < t.n_nodes(); ++j) cells.push_back(csv::format_double(t.values(i, j)));
        w.row(cells);
    }
    const std::string sidecar = path + ".bounds.json";
    if (t.bounds) {
        nlohmann::json j = {{"lo", t.bounds->lo},
                            {"hi", t.bounds->hi},
                            {"interval_minutes", t.interval_minutes}};
        std::ofstream out(sidecar);
        out << j.dump(2) << "\n";
    } else {
        std::filesystem::remove(sidecar);
    }
}

inline SpeedTensor load_speed_tensor(const std::string& path) {
    csv::Table tab = csv::read_file(path);
    require(tab.header.size() >= 2, path + ": expected time_id plus node columns");
    if (tab.header[0] != "time_id")
        throw std::runtime_error(path + " line 1: first column must be time_id");
    SpeedTensor t;
    t.node_ids.assign(tab.header.begin() + 1, tab.header.end());
    const int n = static_cast<int>(t.node_ids.size());
    t.values.resize(static_cast<int>(tab.rows.size()), n);
    for (size_t i = 0; i < tab.rows.size(); ++i) {
        const auto& row = tab.rows[i];
        if (row.size() != static_cast<size_t>(n) + 1)
            throw std::runtime_error(path + " line " + std::to_string(tab.line_numbers[i]) +
                                     ": expected " + std::to_string(n + 1) + " fields");
        t.time_ids.push_back(row[0]);
        for (int j = 0; j < n; ++j) t.values(static_cast<int>(i), j) = csv::parse_double(
            row[j + 1], path + " line " + std::to_string(tab.line_numbers[i]));
    }
    const std::string sidecar = path + ".bounds.json";
    if (std::filesystem::exists(sidecar)) {
        std::ifstream in(sidecar);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error(sidecar + ": " + e.what());
        }
        t.bounds = NormBounds{j.at("lo").get<double>(), j.at("hi").get<double>()};
        if (j.contains("interval_minutes")) t.interval_minutes = j["interval_minutes"].get<int>();
    }
    validate(t);
    return t;
}

}  // namespace kstgcn
