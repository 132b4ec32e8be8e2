#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "scenfuse/records.hpp"

namespace scenfuse {

enum class RateScale { Per100MVMT, PerMVMT };

// 1e8 for Per100MVMT, 1e6 for PerMVMT.
double scale_factor(RateScale scale);
std::string_view to_string(RateScale scale);
RateScale rate_scale_from_string(std::string_view text);

struct RateEstimate {
    double numerator = 0.0;    // weighted event or vehicle count
    double denominator = 0.0;  // miles
    RateScale scale = RateScale::Per100MVMT;
    double value = 0.0;  // numerator / denominator * scale_factor
};

// Sum of sample weights; every weight must be strictly positive.
double weighted_count(const std::vector<double>& weights);
double weighted_count(const std::vector<VehicleRecord>& records);

RateEstimate rate(double numerator, double denominator_miles, RateScale scale);

// Fixed-decimal rendering of the rate value for summary tables.
std::string display(const RateEstimate& estimate, int decimals);

// One line of a rate summary: a labelled population with its mileage
// denominator and its total and scenario-qualified counts. Counts are reals
// so weighted tallies pass through unchanged.
struct RateRow {
    std::string category;
    double mileage_miles = 0.0;
    double total_count = 0.0;
    double scenario_count = 0.0;
    RateScale scale = RateScale::Per100MVMT;
    RateEstimate overall;   // filled by compute_rates
    RateEstimate scenario;  // filled by compute_rates
};

std::vector<RateRow> compute_rates(std::vector<RateRow> rows);

// CSV with columns category, mileage_miles, total_count, scenario_count,
// scale; compute_rates + write append overall_rate and scenario_rate.
std::vector<RateRow> load_rate_rows(std::istream& in, std::string_view source_name);
std::vector<RateRow> load_rate_rows_file(const std::string& path);
void write_rate_summary(std::ostream& out, const std::vector<RateRow>& rows);
void write_rate_summary_file(const std::string& path, const std::vector<RateRow>& rows);

}  // namespace scenfuse
