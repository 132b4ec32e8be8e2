#include "scenfuse/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "scenfuse/common.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/exposure.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

namespace {

void require_finite(const std::vector<double>& values, std::string_view what) {
    for (size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            fail_validation("NonFiniteValue", std::string(what) + " value at index " + std::to_string(i) +
                                                  " is not finite");
        }
    }
}

void require_edges(const std::vector<double>& edges, std::string_view what) {
    if (edges.size() < 2) {
        fail_validation("BadBinEdges", std::string(what) + ": need at least two bin edges");
    }
    for (size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            fail_validation("BadBinEdges", std::string(what) + ": bin edges must be strictly increasing");
        }
    }
    require_finite(edges, what);
}

// Right-open bins with a closed final bin; npos-style sentinels for outside.
enum class BinSide { Under, In, Over };

BinSide locate_bin(const std::vector<double>& edges, double v, size_t& bin) {
    if (v < edges.front()) return BinSide::Under;
    if (v > edges.back()) return BinSide::Over;
    if (v == edges.back()) {
        bin = edges.size() - 2;
        return BinSide::In;
    }
    // First edge strictly greater than v; v falls in the bin to its left.
    size_t hi = static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    bin = hi - 1;
    return BinSide::In;
}

struct Moments {
    std::int64_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
};

Moments two_pass_moments(const std::vector<double>& values) {
    Moments m;
    m.n = static_cast<std::int64_t>(values.size());
    CompensatedSum total;
    m.min_value = values.front();
    m.max_value = values.front();
    for (double v : values) {
        total.add(v);
        m.min_value = std::min(m.min_value, v);
        m.max_value = std::max(m.max_value, v);
    }
    m.mean = total.value() / static_cast<double>(m.n);
    CompensatedSum sq;
    for (double v : values) {
        double d = v - m.mean;
        sq.add(d * d);
    }
    m.sd = std::sqrt(std::max(0.0, sq.value() / static_cast<double>(m.n)));
    return m;
}

}  // namespace

ParameterDistribution fit_histogram(const std::vector<double>& values, std::vector<double> bin_edges,
                                    std::string variable, std::string units) {
    if (values.empty()) fail_validation("EmptyInput", "no values for histogram of " + variable);
    require_finite(values, variable);
    require_edges(bin_edges, variable);

    ParameterDistribution dist;
    dist.variable = std::move(variable);
    dist.units = std::move(units);
    dist.bin_edges = std::move(bin_edges);
    dist.counts.assign(dist.bin_edges.size() - 1, 0);
    for (double v : values) {
        size_t bin = 0;
        switch (locate_bin(dist.bin_edges, v, bin)) {
            case BinSide::Under: ++dist.underflow; break;
            case BinSide::Over: ++dist.overflow; break;
            case BinSide::In: ++dist.counts[bin]; break;
        }
    }

    Moments m = two_pass_moments(values);
    dist.n = m.n;
    dist.mean = m.mean;
    dist.sd = m.sd;
    dist.min_value = m.min_value;
    dist.max_value = m.max_value;
    dist.lo_2sigma = m.mean - 2.0 * m.sd;
    dist.hi_2sigma = m.mean + 2.0 * m.sd;
    return dist;
}

ParameterDistribution fit_histogram(const std::vector<double>& values, int bin_count, std::string variable,
                                    std::string units) {
    if (values.empty()) fail_validation("EmptyInput", "no values for histogram of " + variable);
    if (bin_count < 1) fail_validation("BadBinEdges", "bin count must be at least 1");
    require_finite(values, variable);
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
        bin_count = 1;
    }
    std::vector<double> edges(static_cast<size_t>(bin_count) + 1);
    for (size_t i = 0; i < edges.size(); ++i) {
        double f = static_cast<double>(i) / static_cast<double>(bin_count);
        edges[i] = lo + f * (hi - lo);
    }
    edges.front() = lo;
    edges.back() = hi;
    return fit_histogram(values, std::move(edges), std::move(variable), std::move(units));
}

ParameterDistribution ParameterDistribution::from_config(const Config& cfg) {
    cfg.check_sections({"", "distribution"});
    cfg.check_keys("distribution", {"variable", "units", "n", "mean", "sd", "underflow", "overflow", "min",
                                    "max", "edges", "counts"});
    ParameterDistribution dist;
    dist.variable = cfg.require("distribution", "variable");
    dist.units = cfg.require("distribution", "units");
    dist.n = require_int(cfg.require("distribution", "n"), "n");
    dist.mean = require_double(cfg.require("distribution", "mean"), "mean");
    dist.sd = require_double(cfg.require("distribution", "sd"), "sd");
    dist.underflow = require_int(cfg.require("distribution", "underflow"), "underflow");
    dist.overflow = require_int(cfg.require("distribution", "overflow"), "overflow");
    dist.min_value = require_double(cfg.require("distribution", "min"), "min");
    dist.max_value = require_double(cfg.require("distribution", "max"), "max");
    for (const auto& edge : split_list(cfg.require("distribution", "edges"))) {
        dist.bin_edges.push_back(require_double(edge, "edges"));
    }
    for (const auto& count : split_list(cfg.require("distribution", "counts"))) {
        dist.counts.push_back(require_int(count, "counts"));
    }
    require_edges(dist.bin_edges, dist.variable);
    if (dist.counts.size() + 1 != dist.bin_edges.size()) {
        fail_validation("BadBinEdges", "counts and edges disagree in length");
    }
    std::int64_t total = dist.underflow + dist.overflow;
    for (auto c : dist.counts) {
        if (c < 0) fail_validation("NegativeCount", "negative bin count");
        total += c;
    }
    if (total != dist.n) fail_validation("CountMismatch", "bin counts do not total n");
    dist.lo_2sigma = dist.mean - 2.0 * dist.sd;
    dist.hi_2sigma = dist.mean + 2.0 * dist.sd;
    return dist;
}

void ParameterDistribution::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + path);
    out << "[distribution]\n";
    out << "variable = " << variable << "\n";
    out << "units = " << units << "\n";
    out << "n = " << n << "\n";
    out << "mean = " << format_double(mean) << "\n";
    out << "sd = " << format_double(sd) << "\n";
    out << "underflow = " << underflow << "\n";
    out << "overflow = " << overflow << "\n";
    out << "min = " << format_double(min_value) << "\n";
    out << "max = " << format_double(max_value) << "\n";
    out << "edges = ";
    for (size_t i = 0; i < bin_edges.size(); ++i) {
        if (i) out << ", ";
        out << format_double(bin_edges[i]);
    }
    out << "\n";
    out << "counts = ";
    for (size_t i = 0; i < counts.size(); ++i) {
        if (i) out << ", ";
        out << counts[i];
    }
    out << "\n";
    if (!out) fail_io("FileNotWritable", "error writing " + path);
}

ParameterDistribution ParameterDistribution::load(const std::string& path) {
    return from_config(Config::load(path));
}

namespace {

CsvTable histogram_to_csv(const ParameterDistribution& dist) {
    CsvTable csv;
    csv.header = {"bin_lo", "bin_hi", "count"};
    for (size_t i = 0; i + 1 < dist.bin_edges.size(); ++i) {
        csv.rows.push_back({format_double(dist.bin_edges[i]), format_double(dist.bin_edges[i + 1]),
                            std::to_string(dist.counts[i])});
    }
    return csv;
}

}  // namespace

void write_histogram_csv(std::ostream& out, const ParameterDistribution& dist) {
    write_csv(out, histogram_to_csv(dist));
}

void write_histogram_csv_file(const std::string& path, const ParameterDistribution& dist) {
    write_csv_file(path, histogram_to_csv(dist));
}

BivariateDensity fit_bivariate(const std::vector<double>& x, const std::vector<double>& y,
                               std::vector<double> x_edges, std::vector<double> y_edges,
                               std::optional<int> smoothing_radius, std::string x_variable,
                               std::string y_variable) {
    if (x.size() != y.size()) {
        fail_validation("LengthMismatch", "x and y differ in length (" + std::to_string(x.size()) + " vs " +
                                              std::to_string(y.size()) + ")");
    }
    if (x.empty()) fail_validation("EmptyInput", "no points for bivariate fit");
    require_finite(x, x_variable);
    require_finite(y, y_variable);
    require_edges(x_edges, x_variable);
    require_edges(y_edges, y_variable);
    if (smoothing_radius && *smoothing_radius < 0) {
        fail_validation("BadSmoothing", "smoothing radius must be non-negative");
    }

    BivariateDensity grid;
    grid.x_variable = std::move(x_variable);
    grid.y_variable = std::move(y_variable);
    grid.x_edges = std::move(x_edges);
    grid.y_edges = std::move(y_edges);
    grid.n = static_cast<std::int64_t>(x.size());
    size_t nx = grid.x_edges.size() - 1;
    size_t ny = grid.y_edges.size() - 1;
    grid.counts.assign(nx, std::vector<std::int64_t>(ny, 0));

    for (size_t i = 0; i < x.size(); ++i) {
        size_t xi = 0;
        size_t yi = 0;
        switch (locate_bin(grid.x_edges, x[i], xi)) {
            case BinSide::Under: xi = 0; break;
            case BinSide::Over: xi = nx - 1; break;
            case BinSide::In: break;
        }
        switch (locate_bin(grid.y_edges, y[i], yi)) {
            case BinSide::Under: yi = 0; break;
            case BinSide::Over: yi = ny - 1; break;
            case BinSide::In: break;
        }
        ++grid.counts[xi][yi];
    }

    if (smoothing_radius) {
        int r = *smoothing_radius;
        // Separable triangular kernel, truncated at the grid border; the
        // final renormalization restores unit mass exactly.
        std::vector<double> kernel(static_cast<size_t>(2 * r + 1));
        for (int k = -r; k <= r; ++k) {
            kernel[static_cast<size_t>(k + r)] = static_cast<double>(r + 1 - std::abs(k));
        }
        std::vector<std::vector<double>> base(nx, std::vector<double>(ny, 0.0));
        for (size_t xi = 0; xi < nx; ++xi) {
            for (size_t yi = 0; yi < ny; ++yi) {
                base[xi][yi] = static_cast<double>(grid.counts[xi][yi]);
            }
        }
        std::vector<std::vector<double>> pass_x(nx, std::vector<double>(ny, 0.0));
        for (size_t xi = 0; xi < nx; ++xi) {
            for (int k = -r; k <= r; ++k) {
                long long sx = static_cast<long long>(xi) + k;
                if (sx < 0 || sx >= static_cast<long long>(nx)) continue;
                double w = kernel[static_cast<size_t>(k + r)];
                for (size_t yi = 0; yi < ny; ++yi) {
                    pass_x[xi][yi] += w * base[static_cast<size_t>(sx)][yi];
                }
            }
        }
        grid.density.assign(nx, std::vector<double>(ny, 0.0));
        CompensatedSum total;
        for (size_t xi = 0; xi < nx; ++xi) {
            for (size_t yi = 0; yi < ny; ++yi) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) {
                    long long sy = static_cast<long long>(yi) + k;
                    if (sy < 0 || sy >= static_cast<long long>(ny)) continue;
                    acc += kernel[static_cast<size_t>(k + r)] * pass_x[xi][static_cast<size_t>(sy)];
                }
                grid.density[xi][yi] = acc;
                total.add(acc);
            }
        }
        double norm = total.value();
        for (auto& col : grid.density) {
            for (auto& cell : col) cell /= norm;
        }
    }
    return grid;
}

namespace {

CsvTable bivariate_to_csv(const BivariateDensity& density) {
    CsvTable csv;
    bool with_density = !density.density.empty();
    csv.header = {"x_lo", "x_hi", "y_lo", "y_hi", "count"};
    if (with_density) csv.header.push_back("density");
    for (size_t xi = 0; xi + 1 < density.x_edges.size(); ++xi) {
        for (size_t yi = 0; yi + 1 < density.y_edges.size(); ++yi) {
            std::vector<std::string> row = {
                format_double(density.x_edges[xi]), format_double(density.x_edges[xi + 1]),
                format_double(density.y_edges[yi]), format_double(density.y_edges[yi + 1]),
                std::to_string(density.counts[xi][yi])};
            if (with_density) row.push_back(format_double(density.density[xi][yi]));
            csv.rows.push_back(std::move(row));
        }
    }
    return csv;
}

}  // namespace

void write_bivariate_csv(std::ostream& out, const BivariateDensity& density) {
    write_csv(out, bivariate_to_csv(density));
}

void write_bivariate_csv_file(const std::string& path, const BivariateDensity& density) {
    write_csv_file(path, bivariate_to_csv(density));
}

CategoricalBreakdown categorical_breakdown(const std::vector<RecordSet>& datasets, std::string_view variable,
                                           const ScenarioDefinition& def, bool weighted) {
    CategoricalBreakdown breakdown;
    breakdown.variable = std::string(variable);
    for (const auto& set : datasets) {
        if (std::find(set.schema.coded_variables.begin(), set.schema.coded_variables.end(), variable) ==
            set.schema.coded_variables.end()) {
            fail_validation("UndeclaredVariable", "variable '" + breakdown.variable +
                                                      "' is not declared for dataset '" + set.label + "'");
        }
        if (set.records.size() != set.flags.size()) {
            fail_validation("LengthMismatch", "records and derived flags differ in length for dataset '" +
                                                  set.label + "'");
        }
        DatasetBreakdown entry;
        entry.label = set.label;
        std::map<std::string, double> match_levels;
        std::map<std::string, double> other_levels;
        for (size_t i = 0; i < set.records.size(); ++i) {
            Verdict v = evaluate_record(def.record_predicate, set.records[i], set.flags[i], set.schema);
            if (v == Verdict::Unknown) continue;
            auto code = set.records[i].code(variable);
            std::string level = code ? std::string(*code) : "Unknown";
            double w = weighted ? set.records[i].sample_weight : 1.0;
            (v == Verdict::Match ? match_levels : other_levels)[level] += w;
        }
        auto build = [](const std::map<std::string, double>& levels) {
            SubsetBreakdown subset;
            double total = 0.0;
            for (const auto& [level, weight] : levels) {
                (void)level;
                total += weight;
            }
            if (total <= 0.0) return subset;
            subset.present = true;
            for (const auto& [level, weight] : levels) {
                subset.levels.push_back({level, weight, weight / total});
            }
            return subset;
        };
        entry.match = build(match_levels);
        entry.non_match = build(other_levels);
        breakdown.datasets.push_back(std::move(entry));
    }
    return breakdown;
}

namespace {

CsvTable breakdown_to_csv(const CategoricalBreakdown& breakdown) {
    CsvTable csv;
    csv.header = {"dataset", "subset", "level", "weight", "proportion"};
    for (const auto& dataset : breakdown.datasets) {
        auto emit = [&](const SubsetBreakdown& subset, const char* name) {
            if (!subset.present) return;
            for (const auto& share : subset.levels) {
                csv.rows.push_back({dataset.label, name, share.level, format_double(share.weight),
                                    format_double(share.proportion)});
            }
        };
        emit(dataset.match, "match");
        emit(dataset.non_match, "non_match");
    }
    return csv;
}

}  // namespace

void write_breakdown_csv(std::ostream& out, const CategoricalBreakdown& breakdown) {
    write_csv(out, breakdown_to_csv(breakdown));
}

void write_breakdown_csv_file(const std::string& path, const CategoricalBreakdown& breakdown) {
    write_csv_file(path, breakdown_to_csv(breakdown));
}

std::vector<std::size_t> select_outliers(const std::vector<double>& values, double k) {
    if (values.size() < 2) {
        fail_validation("EmptyInput", "outlier selection needs at least two values");
    }
    if (!(k > 0.0)) fail_validation("BadThreshold", "k must be positive");
    require_finite(values, "outlier");
    Moments m = two_pass_moments(values);
    std::vector<std::size_t> selected;
    for (size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i] - m.mean) > k * m.sd) selected.push_back(i);
    }
    return selected;
}

}  // namespace scenfuse
