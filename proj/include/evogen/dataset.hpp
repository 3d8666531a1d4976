#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evogen/rng.hpp"

namespace evogen {

// Labeled tabular data. Features are stored row-major; labels are 0-based
// class indices. norm_params holds the per-attribute (min, max) recorded by
// min_max_normalize, and is absent for data in original units.
struct Dataset {
    std::vector<double> features;  // n_instances x n_attributes, row-major
    std::vector<int> labels;
    int n_attributes = 0;
    int n_classes = 0;
    std::vector<std::string> attribute_names;
    std::optional<std::vector<std::pair<double, double>>> norm_params;

    int n_instances() const { return static_cast<int>(labels.size()); }

    const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * n_attributes; }
    double* row(int i) { return features.data() + static_cast<std::size_t>(i) * n_attributes; }

    double at(int i, int j) const { return features[static_cast<std::size_t>(i) * n_attributes + j]; }

    std::vector<int> class_counts() const {
        std::vector<int> counts(n_classes, 0);
        for (int y : labels) counts[y]++;
        return counts;
    }
};

// Training/testing batch plus held-out validating batch. The parts partition
// the source instances and share all metadata.
struct DataSplit {
    Dataset train_test;
    Dataset validate;
};

namespace detail {

inline double parse_double_field(const std::string& field, const std::string& file, int line_no) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::runtime_error(file + ": line " + std::to_string(line_no) +
                                 ": not a numeric attribute: '" + field + "'");
    }
    return value;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

// Reads all lines, strips \r, drops trailing blank lines.
inline std::vector<std::string> read_data_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
    return lines;
}

inline Dataset subset(const Dataset& d, const std::vector<int>& idx) {
    Dataset out;
    out.n_attributes = d.n_attributes;
    out.n_classes = d.n_classes;
    out.attribute_names = d.attribute_names;
    out.norm_params = d.norm_params;
    out.features.reserve(idx.size() * d.n_attributes);
    out.labels.reserve(idx.size());
    for (int i : idx) {
        const double* r = d.row(i);
        out.features.insert(out.features.end(), r, r + d.n_attributes);
        out.labels.push_back(d.labels[i]);
    }
    return out;
}

inline long long round_half_away(double x) { return std::llround(x); }

}  // namespace detail

// UCI iris.data: 4 numeric fields then one of the three class strings.
inline Dataset load_iris(const std::string& path) {
    static const std::vector<std::string> kClasses = {"Iris-setosa", "Iris-versicolor", "Iris-virginica"};
    Dataset d;
    d.n_attributes = 4;
    d.n_classes = 3;
    d.attribute_names = {"sepal_length", "sepal_width", "petal_length", "petal_width"};
    const auto lines = detail::read_data_lines(path);
    int line_no = 0;
    for (const auto& line : lines) {
        line_no++;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 5) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected 5 fields, got " +
                                     std::to_string(fields.size()));
        }
        for (int j = 0; j < 4; ++j) d.features.push_back(detail::parse_double_field(fields[j], path, line_no));
        auto it = std::find(kClasses.begin(), kClasses.end(), fields[4]);
        if (it == kClasses.end()) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": unknown class string: '" +
                                     fields[4] + "'");
        }
        d.labels.push_back(static_cast<int>(it - kClasses.begin()));
    }
    return d;
}

// UCI wdbc.data: ID field, diagnosis M/B, then 30 numeric attributes.
// The ID column is discarded; M maps to 0, B to 1.
inline Dataset load_wdbc(const std::string& path) {
    Dataset d;
    d.n_attributes = 30;
    d.n_classes = 2;
    static const char* kBase[] = {"radius",      "texture",   "perimeter",      "area",     "smoothness",
                                  "compactness", "concavity", "concave_points", "symmetry", "fractal_dimension"};
    for (const char* group : {"mean_", "se_", "worst_"}) {
        for (const char* base : kBase) d.attribute_names.push_back(std::string(group) + base);
    }
    const auto lines = detail::read_data_lines(path);
    int line_no = 0;
    for (const auto& line : lines) {
        line_no++;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 32) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected 32 fields, got " +
                                     std::to_string(fields.size()));
        }
        if (fields[1] == "M") {
            d.labels.push_back(0);
        } else if (fields[1] == "B") {
            d.labels.push_back(1);
        } else {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": unknown class symbol: '" +
                                     fields[1] + "'");
        }
        for (int j = 0; j < 30; ++j) d.features.push_back(detail::parse_double_field(fields[j + 2], path, line_no));
    }
    return d;
}

// Per-attribute min-max scaling to [0,1]; records the (min, max) pairs.
// A constant attribute maps to 0.0 and is reported through `warnings`.
inline Dataset min_max_normalize(const Dataset& d, std::vector<std::string>* warnings = nullptr) {
    if (d.n_instances() == 0) throw std::runtime_error("min_max_normalize: empty dataset");
    if (d.norm_params) throw std::runtime_error("min_max_normalize: dataset already normalized");
    Dataset out = d;
    std::vector<std::pair<double, double>> params(d.n_attributes);
    for (int j = 0; j < d.n_attributes; ++j) {
        double lo = d.at(0, j), hi = d.at(0, j);
        for (int i = 1; i < d.n_instances(); ++i) {
            lo = std::min(lo, d.at(i, j));
            hi = std::max(hi, d.at(i, j));
        }
        params[j] = {lo, hi};
        if (lo == hi) {
            std::string msg = "attribute " + std::to_string(j) + " is constant (" + std::to_string(lo) +
                              "); normalized values set to 0";
            if (warnings) warnings->push_back(msg);
            else std::fprintf(stderr, "warning: %s\n", msg.c_str());
            for (int i = 0; i < out.n_instances(); ++i) out.row(i)[j] = 0.0;
        } else {
            for (int i = 0; i < out.n_instances(); ++i) out.row(i)[j] = (d.at(i, j) - lo) / (hi - lo);
        }
    }
    out.norm_params = std::move(params);
    return out;
}

// Normalizes with previously recorded (min, max) pairs, e.g. to map data back
// into the gene frame of a run.
inline Dataset normalize_with(const Dataset& d, const std::vector<std::pair<double, double>>& params) {
    if (static_cast<int>(params.size()) != d.n_attributes) {
        throw std::runtime_error("normalize_with: parameter count does not match attribute count");
    }
    Dataset out = d;
    for (int j = 0; j < d.n_attributes; ++j) {
        const auto [lo, hi] = params[j];
        for (int i = 0; i < out.n_instances(); ++i) {
            out.row(i)[j] = hi == lo ? 0.0 : (d.at(i, j) - lo) / (hi - lo);
        }
    }
    out.norm_params = params;
    return out;
}

inline Dataset denormalize(const Dataset& d) {
    if (!d.norm_params) throw std::runtime_error("denormalize: dataset has no normalization parameters");
    Dataset out = d;
    const auto& params = *d.norm_params;
    for (int j = 0; j < d.n_attributes; ++j) {
        const auto [lo, hi] = params[j];
        for (int i = 0; i < out.n_instances(); ++i) out.row(i)[j] = d.at(i, j) * (hi - lo) + lo;
    }
    out.norm_params.reset();
    return out;
}

// Stratified random split. Per class, round(train_fraction * count) instances
// go to train_test (half away from zero), then the largest class is adjusted
// by one when that reaches the exact global target. Deterministic in `seed`.
inline DataSplit split_random(const Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::runtime_error("split_random: train_fraction must be in (0,1)");
    }
    const auto counts = d.class_counts();
    std::vector<long long> take(d.n_classes);
    long long total_take = 0;
    for (int c = 0; c < d.n_classes; ++c) {
        take[c] = detail::round_half_away(train_fraction * counts[c]);
        total_take += take[c];
    }
    const long long global_target = detail::round_half_away(train_fraction * d.n_instances());
    if (std::llabs(total_take - global_target) == 1) {
        int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        take[largest] += global_target - total_take;
    }
    for (int c = 0; c < d.n_classes; ++c) {
        if (take[c] < 1) {
            throw std::runtime_error("split_random: train_fraction leaves class " + std::to_string(c) +
                                     " empty; use split_scarce for per-class sampling");
        }
        if (take[c] > counts[c]) take[c] = counts[c];
    }

    rng::Stream stream(rng::mix(seed, rng::kTagSplit));
    std::vector<int> train_idx, validate_idx;
    for (int c = 0; c < d.n_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < d.n_instances(); ++i) {
            if (d.labels[i] == c) members.push_back(i);
        }
        stream.shuffle(members);
        train_idx.insert(train_idx.end(), members.begin(), members.begin() + take[c]);
        validate_idx.insert(validate_idx.end(), members.begin() + take[c], members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(validate_idx.begin(), validate_idx.end());
    return {detail::subset(d, train_idx), detail::subset(d, validate_idx)};
}

// Extreme-scarcity split: exactly per_class instances of every class go to
// train_test, everything else validates.
inline DataSplit split_scarce(const Dataset& d, int per_class, std::uint64_t seed) {
    if (per_class < 1) throw std::runtime_error("split_scarce: per_class must be positive");
    const auto counts = d.class_counts();
    for (int c = 0; c < d.n_classes; ++c) {
        if (per_class > counts[c]) {
            throw std::runtime_error("split_scarce: per_class " + std::to_string(per_class) + " exceeds class " +
                                     std::to_string(c) + " count " + std::to_string(counts[c]));
        }
    }
    rng::Stream stream(rng::mix(seed, rng::kTagSplit));
    std::vector<int> train_idx, validate_idx;
    for (int c = 0; c < d.n_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < d.n_instances(); ++i) {
            if (d.labels[i] == c) members.push_back(i);
        }
        stream.shuffle(members);
        train_idx.insert(train_idx.end(), members.begin(), members.begin() + per_class);
        validate_idx.insert(validate_idx.end(), members.begin() + per_class, members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(validate_idx.begin(), validate_idx.end());
    return {detail::subset(d, train_idx), detail::subset(d, validate_idx)};
}

// Exported-CSV format: header `attr_0,...,attr_{k-1},label`, full precision.
inline void write_csv(const Dataset& d, std::ostream& out) {
    for (int j = 0; j < d.n_attributes; ++j) out << "attr_" << j << ",";
    out << "label\n";
    char buf[40];
    for (int i = 0; i < d.n_instances(); ++i) {
        for (int j = 0; j < d.n_attributes; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", d.at(i, j));
            out << buf << ",";
        }
        out << d.labels[i] << "\n";
    }
}

inline void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    write_csv(d, out);
}

// Reads a dataset in the exported-CSV format. n_classes is inferred from the
// labels unless a positive override is given.
inline Dataset load_csv(const std::string& path, int n_classes = 0) {
    const auto lines = detail::read_data_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty file");
    const auto header = detail::split_fields(lines[0]);
    if (header.size() < 2 || header.back() != "label") {
        throw std::runtime_error(path + ": line 1: expected header ending in 'label'");
    }
    Dataset d;
    d.n_attributes = static_cast<int>(header.size()) - 1;
    d.attribute_names.assign(header.begin(), header.end() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        const auto fields = detail::split_fields(lines[li]);
        if (fields.size() != header.size()) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        for (int j = 0; j < d.n_attributes; ++j) {
            d.features.push_back(detail::parse_double_field(fields[j], path, line_no));
        }
        const double label = detail::parse_double_field(fields.back(), path, line_no);
        if (label < 0 || label != std::floor(label)) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": label must be a class index");
        }
        d.labels.push_back(static_cast<int>(label));
    }
    int max_label = -1;
    for (int y : d.labels) max_label = std::max(max_label, y);
    d.n_classes = n_classes > 0 ? n_classes : max_label + 1;
    if (max_label >= d.n_classes) throw std::runtime_error(path + ": label exceeds declared class count");
    return d;
}

}  // namespace evogen
