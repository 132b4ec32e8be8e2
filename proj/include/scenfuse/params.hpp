#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scenfuse/config.hpp"
#include "scenfuse/records.hpp"
#include "scenfuse/scenario.hpp"

namespace scenfuse {

// Empirical univariate distribution: histogram plus two-pass moments. Bins
// are right-open [lo, hi) with a closed final bin; values outside the edges
// land in the underflow/overflow counters, never dropped. sd is the
// population (divide-by-n) definition.
struct ParameterDistribution {
    std::string variable;
    std::string units;
    std::int64_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::vector<double> bin_edges;      // strictly increasing, size >= 2
    std::vector<std::int64_t> counts;   // size = bin_edges.size() - 1
    std::int64_t underflow = 0;
    std::int64_t overflow = 0;
    double lo_2sigma = 0.0;  // mean - 2 sd
    double hi_2sigma = 0.0;  // mean + 2 sd
    double min_value = 0.0;  // observed support
    double max_value = 0.0;

    static ParameterDistribution from_config(const Config& cfg);
    void save(const std::string& path) const;
    static ParameterDistribution load(const std::string& path);
};

ParameterDistribution fit_histogram(const std::vector<double>& values, std::vector<double> bin_edges,
                                    std::string variable, std::string units);
// Equal-width binning over the observed range; a degenerate range widens to
// one unit bin around the constant value.
ParameterDistribution fit_histogram(const std::vector<double>& values, int bin_count, std::string variable,
                                    std::string units);

// Plot-ready delimited form: bin_lo, bin_hi, count.
void write_histogram_csv(std::ostream& out, const ParameterDistribution& dist);
void write_histogram_csv_file(const std::string& path, const ParameterDistribution& dist);

// 2-D histogram over a rectangular grid. Out-of-range values clamp into the
// boundary cells so the counts matrix always totals n. Smoothing applies a
// separable triangular kernel of the given cell radius to the normalized
// density, which then sums to 1 over the grid.
struct BivariateDensity {
    std::string x_variable;
    std::string y_variable;
    std::string x_units;
    std::string y_units;
    std::int64_t n = 0;
    std::vector<double> x_edges;
    std::vector<double> y_edges;
    std::vector<std::vector<std::int64_t>> counts;  // [x bin][y bin]
    std::vector<std::vector<double>> density;       // same shape; empty without smoothing
};

BivariateDensity fit_bivariate(const std::vector<double>& x, const std::vector<double>& y,
                               std::vector<double> x_edges, std::vector<double> y_edges,
                               std::optional<int> smoothing_radius, std::string x_variable,
                               std::string y_variable);

// Plot-ready delimited form: x_lo, x_hi, y_lo, y_hi, count[, density].
void write_bivariate_csv(std::ostream& out, const BivariateDensity& density);
void write_bivariate_csv_file(const std::string& path, const BivariateDensity& density);

// A labelled record dataset bundled with its derived flags and schema.
struct RecordSet {
    std::string label;
    RecordSchema schema;
    std::vector<VehicleRecord> records;
    std::vector<DerivedFlags> flags;
};

// Per-level shares of one coded variable, split match vs non-match per
// dataset. Records whose scenario verdict is Unknown belong to neither
// subset; missing codes within a subset appear as the "Unknown" level so
// each present subset still sums to 1.
struct LevelShare {
    std::string level;
    double weight = 0.0;
    double proportion = 0.0;
};

struct SubsetBreakdown {
    bool present = false;  // false when the subset is empty, instead of zero-filling
    std::vector<LevelShare> levels;
};

struct DatasetBreakdown {
    std::string label;
    SubsetBreakdown match;
    SubsetBreakdown non_match;
};

struct CategoricalBreakdown {
    std::string variable;
    std::vector<DatasetBreakdown> datasets;
};

CategoricalBreakdown categorical_breakdown(const std::vector<RecordSet>& datasets, std::string_view variable,
                                           const ScenarioDefinition& def, bool weighted);

// Delimited form: dataset, subset, level, weight, proportion.
void write_breakdown_csv(std::ostream& out, const CategoricalBreakdown& breakdown);
void write_breakdown_csv_file(const std::string& path, const CategoricalBreakdown& breakdown);

// Indices (ascending) of values farther than k population standard
// deviations from the mean. A constant list has sd 0 and selects nothing.
std::vector<std::size_t> select_outliers(const std::vector<double>& values, double k);

}  // namespace scenfuse
