#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace scenfuse {

// Registration counts by (calendar year, model year).
struct VioTable {
    struct Entry {
        int calendar_year = 0;
        int model_year = 0;
        std::int64_t count = 0;
    };
    std::vector<Entry> entries;

    // Validates: count >= 0, MY <= CY + 1, no duplicate (CY, MY).
    void validate() const;
    std::int64_t count(int calendar_year, int model_year) const;

    static VioTable load(const std::string& path);  // columns calendar_year,model_year,count
};

// Miles per year by vehicle age; ages beyond the table reuse the value at the
// max age, and age -1 (next-model-year vehicles) clamps to age 0.
struct AamTable {
    std::vector<double> miles_by_age;  // index = age, contiguous from 0
    double terminal_miles = 0.0;

    void validate() const;
    double miles(int age) const;

    static AamTable load(const std::string& path);  // columns age,miles_per_year
};

// Registration-weighted mileage: for CY in [cy_from, cy_to], MY in
// [my_min, CY+1], sum VIO(CY,MY) x AAM(CY-MY). Fixed CY-major/MY-minor order
// with Neumaier compensation so the result is identical on every platform.
double vmt_estimate(const VioTable& vio, const AamTable& aam, int cy_from, int cy_to, int my_min);

// "25.991" given 25.991e12 miles; 3 decimals.
std::string format_trillions(double miles);

// Running compensated accumulator (Neumaier variant of Kahan summation).
class CompensatedSum {
public:
    void add(double value) {
        double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value)) {
            comp_ += (sum_ - t) + value;
        } else {
            comp_ += (value - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace scenfuse
