#include "scenfuse/rates.hpp"

#include <cmath>
#include <ostream>

#include "scenfuse/common.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

double scale_factor(RateScale scale) { return scale == RateScale::Per100MVMT ? 1e8 : 1e6; }

std::string_view to_string(RateScale scale) {
    return scale == RateScale::Per100MVMT ? "Per100MVMT" : "PerMVMT";
}

RateScale rate_scale_from_string(std::string_view text) {
    if (text == "Per100MVMT") return RateScale::Per100MVMT;
    if (text == "PerMVMT") return RateScale::PerMVMT;
    fail_parse("BadRateScale", "unknown rate scale '" + std::string(text) + "'");
}

double weighted_count(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) {
            fail_validation("NonPositiveWeight", "weight " + format_double(w) + " is not positive");
        }
        total += w;
    }
    return total;
}

double weighted_count(const std::vector<VehicleRecord>& records) {
    double total = 0.0;
    for (const auto& rec : records) {
        if (!(rec.sample_weight > 0.0)) {
            fail_validation("NonPositiveWeight", "record '" + rec.case_id + "' has non-positive weight " +
                                                     format_double(rec.sample_weight));
        }
        total += rec.sample_weight;
    }
    return total;
}

RateEstimate rate(double numerator, double denominator_miles, RateScale scale) {
    if (!(numerator >= 0.0)) {
        fail_validation("NegativeCount", "rate numerator " + format_double(numerator) + " is negative");
    }
    if (!(denominator_miles > 0.0)) {
        fail_validation("ZeroDenominator",
                        "mileage denominator " + format_double(denominator_miles) + " is not positive");
    }
    RateEstimate est;
    est.numerator = numerator;
    est.denominator = denominator_miles;
    est.scale = scale;
    est.value = numerator / denominator_miles * scale_factor(scale);
    return est;
}

std::string display(const RateEstimate& estimate, int decimals) {
    return format_fixed(estimate.value, decimals);
}

std::vector<RateRow> compute_rates(std::vector<RateRow> rows) {
    for (auto& row : rows) {
        row.overall = rate(row.total_count, row.mileage_miles, row.scale);
        row.scenario = rate(row.scenario_count, row.mileage_miles, row.scale);
    }
    return rows;
}

namespace {

std::vector<RateRow> rows_from_csv(const CsvTable& csv) {
    size_t category = csv.require_column("category");
    size_t mileage = csv.require_column("mileage_miles");
    size_t total = csv.require_column("total_count");
    size_t scenario = csv.require_column("scenario_count");
    size_t scale = csv.require_column("scale");
    std::vector<RateRow> rows;
    for (const auto& cells : csv.rows) {
        RateRow row;
        row.category = cells[category];
        row.mileage_miles = require_double(cells[mileage], "mileage_miles");
        row.total_count = require_double(cells[total], "total_count");
        row.scenario_count = require_double(cells[scenario], "scenario_count");
        row.scale = rate_scale_from_string(cells[scale]);
        rows.push_back(std::move(row));
    }
    return rows;
}

CsvTable summary_to_csv(const std::vector<RateRow>& rows) {
    CsvTable csv;
    csv.header = {"category", "mileage_miles", "total_count", "scenario_count",
                  "scale",    "overall_rate",  "scenario_rate"};
    for (const auto& row : rows) {
        csv.rows.push_back({row.category, format_double(row.mileage_miles), format_double(row.total_count),
                            format_double(row.scenario_count), std::string(to_string(row.scale)),
                            format_double(row.overall.value), format_double(row.scenario.value)});
    }
    return csv;
}

}  // namespace

std::vector<RateRow> load_rate_rows(std::istream& in, std::string_view source_name) {
    return rows_from_csv(read_csv(in, source_name));
}

std::vector<RateRow> load_rate_rows_file(const std::string& path) {
    return rows_from_csv(read_csv_file(path));
}

void write_rate_summary(std::ostream& out, const std::vector<RateRow>& rows) {
    write_csv(out, summary_to_csv(rows));
}

void write_rate_summary_file(const std::string& path, const std::vector<RateRow>& rows) {
    write_csv_file(path, summary_to_csv(rows));
}

}  // namespace scenfuse
