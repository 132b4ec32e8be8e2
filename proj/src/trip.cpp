#include "scenfuse/trip.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "scenfuse/angles.hpp"
#include "scenfuse/common.hpp"
#include "scenfuse/config.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

void Trip::validate() const {
    const size_t n = t.size();
    if (n < 2) fail_validation("ShortTrip", "trip '" + trip_id + "' has fewer than 2 samples");
    if (speed.size() != n || yaw_rate.size() != n || lat_accel.size() != n || gps_heading.size() != n ||
        matched_segment.size() != n) {
        fail_validation("ChannelLengthMismatch", "trip '" + trip_id + "' channels differ in length");
    }
    if (!(sample_rate_hz > 0.0)) {
        fail_validation("BadSampleRate", "trip '" + trip_id + "' sample rate must be > 0");
    }
    const double nominal = 1.0 / sample_rate_hz;
    for (size_t i = 1; i < n; ++i) {
        double dt = t[i] - t[i - 1];
        if (!(dt > 0.0)) {
            fail_validation("NonMonotoneTime",
                            "trip '" + trip_id + "' time not strictly increasing at sample " +
                                std::to_string(i));
        }
        if (std::abs(dt - nominal) > 0.10 * nominal + 1e-12) {
            fail_validation("IrregularSampling", "trip '" + trip_id + "' spacing " + format_double(dt) +
                                                      " deviates more than 10% from nominal " +
                                                      format_double(nominal) + " at sample " +
                                                      std::to_string(i));
        }
    }
    for (size_t i = 0; i < n; ++i) {
        if (speed[i] < 0.0) {
            fail_validation("NegativeSpeed",
                            "trip '" + trip_id + "' speed < 0 at sample " + std::to_string(i));
        }
    }
}

namespace {

void check_window(const Trip& trip, SampleWindow window) {
    if (window.first > window.last || window.last >= trip.size() || window.length() < 2) {
        fail_validation("WindowOutOfBounds",
                        "window [" + std::to_string(window.first) + ", " + std::to_string(window.last) +
                            "] invalid for trip of " + std::to_string(trip.size()) + " samples");
    }
}

}  // namespace

double integrate_yaw(const Trip& trip, SampleWindow window) {
    check_window(trip, window);
    double total = 0.0;
    for (size_t i = window.first; i < window.last; ++i) {
        total += 0.5 * (trip.yaw_rate[i] + trip.yaw_rate[i + 1]) * (trip.t[i + 1] - trip.t[i]);
    }
    return total;
}

double gps_heading_change(const Trip& trip, SampleWindow window) {
    check_window(trip, window);
    double total = 0.0;
    for (size_t i = window.first; i < window.last; ++i) {
        total += wrap_degrees(trip.gps_heading[i + 1] - trip.gps_heading[i]);
    }
    return total;
}

double mean_speed(const Trip& trip, SampleWindow window) {
    check_window(trip, window);
    double total = 0.0;
    for (size_t i = window.first; i <= window.last; ++i) total += trip.speed[i];
    return total / static_cast<double>(window.length());
}

double max_abs_lat_accel(const Trip& trip, SampleWindow window) {
    check_window(trip, window);
    double best = 0.0;
    for (size_t i = window.first; i <= window.last; ++i) {
        best = std::max(best, std::abs(trip.lat_accel[i]));
    }
    return best;
}

void write_trip_file(const std::string& path, const Trip& trip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + path);
    out << "#trip_id=" << trip.trip_id << ",sample_rate_hz=" << format_double(trip.sample_rate_hz) << "\n";
    CsvTable table;
    table.header = {"t", "speed", "yaw_rate", "lat_accel", "gps_heading", "matched_segment"};
    table.rows.reserve(trip.size());
    for (size_t i = 0; i < trip.size(); ++i) {
        table.rows.push_back({format_double(trip.t[i]), format_double(trip.speed[i]),
                              format_double(trip.yaw_rate[i]), format_double(trip.lat_accel[i]),
                              format_double(trip.gps_heading[i]),
                              trip.matched_segment[i] ? std::to_string(*trip.matched_segment[i])
                                                      : std::string()});
    }
    write_csv(out, table);
    out.flush();
    if (!out) fail_io("WriteFailed", "error writing " + path);
}

Trip load_trip_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("FileNotFound", "cannot open " + path);

    Trip trip;
    trip.trip_id = path;
    std::string first_line;
    if (in.peek() == '#') {
        std::getline(in, first_line);
        for (const auto& item : split_list(first_line.substr(1))) {
            size_t eq = item.find('=');
            if (eq == std::string::npos) continue;
            std::string key = item.substr(0, eq);
            std::string value = item.substr(eq + 1);
            if (key == "trip_id") trip.trip_id = value;
            if (key == "sample_rate_hz") trip.sample_rate_hz = require_double(value, "sample_rate_hz");
        }
    }

    CsvTable table = read_csv(in, path);
    size_t c_t = table.require_column("t");
    size_t c_speed = table.require_column("speed");
    size_t c_yaw = table.require_column("yaw_rate");
    size_t c_lat = table.require_column("lat_accel");
    size_t c_head = table.require_column("gps_heading");
    size_t c_seg = table.require_column("matched_segment");
    for (const auto& row : table.rows) {
        trip.t.push_back(require_double(row[c_t], "t"));
        trip.speed.push_back(require_double(row[c_speed], "speed"));
        trip.yaw_rate.push_back(require_double(row[c_yaw], "yaw_rate"));
        trip.lat_accel.push_back(require_double(row[c_lat], "lat_accel"));
        trip.gps_heading.push_back(require_double(row[c_head], "gps_heading"));
        std::string_view seg = trim(row[c_seg]);
        if (seg.empty()) {
            trip.matched_segment.push_back(std::nullopt);
        } else {
            trip.matched_segment.push_back(require_int(seg, "matched_segment"));
        }
    }
    trip.validate();
    return trip;
}

}  // namespace scenfuse
