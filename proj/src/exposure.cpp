#include "scenfuse/exposure.hpp"

#include <cmath>
#include <set>

#include "scenfuse/common.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

void VioTable::validate() const {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : entries) {
        if (e.count < 0) {
            fail_validation("NegativeCount", "VIO count for CY " + std::to_string(e.calendar_year) +
                                                 " MY " + std::to_string(e.model_year) + " is negative");
        }
        if (e.model_year > e.calendar_year + 1) {
            fail_validation("BadModelYear", "VIO MY " + std::to_string(e.model_year) +
                                                " exceeds CY + 1 for CY " + std::to_string(e.calendar_year));
        }
        if (!seen.insert({e.calendar_year, e.model_year}).second) {
            fail_validation("DuplicateEntry", "duplicate VIO entry for CY " +
                                                  std::to_string(e.calendar_year) + " MY " +
                                                  std::to_string(e.model_year));
        }
    }
}

std::int64_t VioTable::count(int calendar_year, int model_year) const {
    for (const auto& e : entries) {
        if (e.calendar_year == calendar_year && e.model_year == model_year) return e.count;
    }
    return 0;
}

VioTable VioTable::load(const std::string& path) {
    CsvTable csv = read_csv_file(path);
    size_t cy = csv.require_column("calendar_year");
    size_t my = csv.require_column("model_year");
    size_t count = csv.require_column("count");
    VioTable table;
    for (const auto& row : csv.rows) {
        Entry e;
        e.calendar_year = static_cast<int>(require_int(row[cy], "calendar_year"));
        e.model_year = static_cast<int>(require_int(row[my], "model_year"));
        e.count = require_int(row[count], "count");
        table.entries.push_back(e);
    }
    table.validate();
    return table;
}

void AamTable::validate() const {
    if (miles_by_age.empty()) {
        fail_validation("MissingAamAge", "AAM table is empty");
    }
    for (size_t age = 0; age < miles_by_age.size(); ++age) {
        if (!(miles_by_age[age] >= 0.0)) {
            fail_validation("NegativeMiles", "AAM at age " + std::to_string(age) + " is negative");
        }
    }
    if (!(terminal_miles >= 0.0)) {
        fail_validation("NegativeMiles", "terminal AAM value is negative");
    }
}

double AamTable::miles(int age) const {
    if (miles_by_age.empty()) {
        fail_validation("MissingAamAge", "AAM table is empty");
    }
    if (age < 0) age = 0;  // MY = CY + 1 vehicles
    if (static_cast<size_t>(age) < miles_by_age.size()) return miles_by_age[static_cast<size_t>(age)];
    return terminal_miles;
}

AamTable AamTable::load(const std::string& path) {
    CsvTable csv = read_csv_file(path);
    size_t age_col = csv.require_column("age");
    size_t miles_col = csv.require_column("miles_per_year");
    std::map<int, double> by_age;
    for (const auto& row : csv.rows) {
        int age = static_cast<int>(require_int(row[age_col], "age"));
        if (age < 0) fail_validation("MissingAamAge", path + ": negative age " + std::to_string(age));
        if (!by_age.emplace(age, require_double(row[miles_col], "miles_per_year")).second) {
            fail_validation("DuplicateEntry", path + ": duplicate AAM age " + std::to_string(age));
        }
    }
    if (by_age.empty()) fail_parse("EmptyFile", path + ": no AAM rows");
    AamTable table;
    int expected = 0;
    for (const auto& [age, miles] : by_age) {
        if (age != expected) {
            fail_validation("MissingAamAge", path + ": AAM ages must be contiguous from 0; missing age " +
                                                 std::to_string(expected));
        }
        table.miles_by_age.push_back(miles);
        ++expected;
    }
    table.terminal_miles = table.miles_by_age.back();
    table.validate();
    return table;
}

double vmt_estimate(const VioTable& vio, const AamTable& aam, int cy_from, int cy_to, int my_min) {
    if (cy_from > cy_to) {
        fail_validation("InvalidRange", "cy_from " + std::to_string(cy_from) + " > cy_to " +
                                            std::to_string(cy_to));
    }
    aam.validate();
    vio.validate();

    // Index VIO once; the sum below walks (CY, MY) in the declared order.
    std::map<std::pair<int, int>, std::int64_t> counts;
    for (const auto& e : vio.entries) counts[{e.calendar_year, e.model_year}] = e.count;

    CompensatedSum total;
    for (int cy = cy_from; cy <= cy_to; ++cy) {
        for (int my = my_min; my <= cy + 1; ++my) {
            auto it = counts.find({cy, my});
            if (it == counts.end()) continue;
            total.add(static_cast<double>(it->second) * aam.miles(cy - my));
        }
    }
    return total.value();
}

std::string format_trillions(double miles) { return format_fixed(miles / 1e12, 3); }

}  // namespace scenfuse
