#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scenfuse {

// Inclusive sample index range [first, last].
struct SampleWindow {
    size_t first = 0;
    size_t last = 0;

    size_t length() const { return last - first + 1; }
};

// Uniformly sampled drive. Yaw rate is left/counterclockwise positive;
// gps_heading is compass degrees in [0, 360) (clockwise from north), so a left
// turn raises the yaw integral and lowers the unwrapped heading.
struct Trip {
    std::string trip_id;
    double sample_rate_hz = 10.0;
    std::vector<double> t;          // s, strictly increasing
    std::vector<double> speed;      // m/s, >= 0
    std::vector<double> yaw_rate;   // deg/s
    std::vector<double> lat_accel;  // m/s^2, left positive
    std::vector<double> gps_heading;  // deg, [0, 360)
    std::vector<std::optional<std::int64_t>> matched_segment;

    size_t size() const { return t.size(); }
    // Channel lengths, monotone time within 10% of nominal spacing, speed >= 0.
    void validate() const;
};

// Trapezoidal integral of yaw rate over the window, in degrees.
double integrate_yaw(const Trip& trip, SampleWindow window);

// Net compass heading change end minus start, unwrapping each step into
// (-180, 180] so a 350 -> 20 transition reads +30.
double gps_heading_change(const Trip& trip, SampleWindow window);

double mean_speed(const Trip& trip, SampleWindow window);
double max_abs_lat_accel(const Trip& trip, SampleWindow window);

// Columnar trip file: t,speed,yaw_rate,lat_accel,gps_heading,matched_segment
// with trip_id and sample_rate_hz in a leading comment-style header row pair.
void write_trip_file(const std::string& path, const Trip& trip);
Trip load_trip_file(const std::string& path);

}  // namespace scenfuse
