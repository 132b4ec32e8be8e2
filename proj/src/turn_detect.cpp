#include "scenfuse/turn_detect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "scenfuse/common.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

std::string_view to_string(TurnDirection d) { return d == TurnDirection::Left ? "Left" : "Right"; }

TurnDetectParams TurnDetectParams::from_config(const Config& cfg, std::string_view section) {
    cfg.check_keys(section, {"window_half_width_s", "yaw_min_deg", "yaw_max_deg", "min_segment_angle_deg",
                             "max_yaw_gps_gap_deg", "min_mean_speed_mps", "min_map_match_coverage",
                             "remove_yaw_bias", "bias_speed_ceiling_mps"});
    TurnDetectParams p;
    p.window_half_width_s = cfg.get_double(section, "window_half_width_s", p.window_half_width_s);
    p.yaw_min_deg = cfg.get_double(section, "yaw_min_deg", p.yaw_min_deg);
    p.yaw_max_deg = cfg.get_double(section, "yaw_max_deg", p.yaw_max_deg);
    p.min_segment_angle_deg = cfg.get_double(section, "min_segment_angle_deg", p.min_segment_angle_deg);
    p.max_yaw_gps_gap_deg = cfg.get_double(section, "max_yaw_gps_gap_deg", p.max_yaw_gps_gap_deg);
    p.min_mean_speed_mps = cfg.get_double(section, "min_mean_speed_mps", p.min_mean_speed_mps);
    p.min_map_match_coverage = cfg.get_double(section, "min_map_match_coverage", p.min_map_match_coverage);
    p.remove_yaw_bias = cfg.get_bool(section, "remove_yaw_bias", p.remove_yaw_bias);
    p.bias_speed_ceiling_mps = cfg.get_double(section, "bias_speed_ceiling_mps", p.bias_speed_ceiling_mps);
    if (p.yaw_min_deg > p.yaw_max_deg) {
        fail_validation("BadYawBand", "yaw_min_deg exceeds yaw_max_deg");
    }
    return p;
}

std::vector<JunctionPassage> junction_passages(const Trip& trip, const RoadGraph& graph, double min_coverage) {
    trip.validate();
    size_t matched = 0;
    for (const auto& seg : trip.matched_segment) {
        if (seg) ++matched;
    }
    double coverage = static_cast<double>(matched) / static_cast<double>(trip.size());
    if (coverage < min_coverage) {
        fail_validation("NoMapMatch", "trip '" + trip.trip_id + "' matched-segment coverage " +
                                          format_fixed(coverage, 3) + " below threshold " +
                                          format_fixed(min_coverage, 3));
    }

    std::vector<JunctionPassage> passages;
    std::optional<std::int64_t> current;
    for (size_t i = 0; i < trip.size(); ++i) {
        const auto& seg = trip.matched_segment[i];
        if (!seg) continue;
        if (!graph.has_segment(*seg)) {
            fail_validation("UnknownSegment", "trip '" + trip.trip_id + "' references segment " +
                                                  std::to_string(*seg) + " absent from the road graph");
        }
        if (current && *current != *seg) {
            auto via = graph.shared_node(*current, *seg);
            if (via && graph.degree(*via) >= 3) {
                passages.push_back({*via, i, *current, *seg});
            }
        }
        current = *seg;
    }
    return passages;
}

namespace {

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

std::vector<TurnEvent> detect_turns(const Trip& trip, const RoadGraph& graph, const TurnDetectParams& params) {
    auto passages = junction_passages(trip, graph, params.min_map_match_coverage);
    if (passages.empty()) return {};

    const Trip* source = &trip;
    Trip debiased;
    if (params.remove_yaw_bias) {
        std::vector<double> stationary;
        for (size_t i = 0; i < trip.size(); ++i) {
            if (trip.speed[i] < params.bias_speed_ceiling_mps) stationary.push_back(trip.yaw_rate[i]);
        }
        double bias = median_of(std::move(stationary));
        debiased = trip;
        for (auto& w : debiased.yaw_rate) w -= bias;
        source = &debiased;
    }

    const size_t n = source->size();
    const auto half = static_cast<size_t>(std::llround(params.window_half_width_s * source->sample_rate_hz));

    std::vector<TurnEvent> events;
    for (const auto& passage : passages) {
        size_t first = passage.sample_idx > half ? passage.sample_idx - half : 0;
        size_t last = std::min(passage.sample_idx + half, n - 1);
        if (last - first + 1 < 2) continue;
        SampleWindow window{first, last};

        double net_yaw = integrate_yaw(*source, window);
        double abs_yaw = std::abs(net_yaw);
        if (abs_yaw < params.yaw_min_deg || abs_yaw > params.yaw_max_deg) continue;

        double angle = segment_angle(graph, passage.seg_in, passage.seg_out, passage.node);
        if (angle < params.min_segment_angle_deg) continue;

        // Compass heading decreases during a left (CCW) turn, so consistency
        // means net_yaw and the compass change cancel.
        double compass_change = gps_heading_change(*source, window);
        if (std::abs(net_yaw + compass_change) > params.max_yaw_gps_gap_deg) continue;

        double speed = mean_speed(*source, window);
        if (speed < params.min_mean_speed_mps) continue;

        TurnEvent event;
        event.trip_id = source->trip_id;
        event.start_idx = first;
        event.end_idx = last;
        event.direction = net_yaw > 0.0 ? TurnDirection::Left : TurnDirection::Right;
        event.net_yaw = net_yaw;
        event.gps_heading_change = compass_change;
        event.segment_angle = angle;
        event.junction_node = passage.node;
        event.max_abs_lat_accel = max_abs_lat_accel(*source, window);
        event.mean_speed = speed;
        event.duration = source->t[last] - source->t[first];

        // Matched-segment flicker around one node re-reports the same turn;
        // keep the earliest event when windows at the same junction overlap.
        bool duplicate = false;
        for (auto it = events.rbegin(); it != events.rend(); ++it) {
            if (it->end_idx < event.start_idx) break;
            if (it->junction_node == event.junction_node) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) events.push_back(std::move(event));
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const TurnEvent& a, const TurnEvent& b) { return a.start_idx < b.start_idx; });
    return events;
}

bool passes_gates(const TurnEvent& event, const TurnDetectParams& params) {
    double abs_yaw = std::abs(event.net_yaw);
    return abs_yaw >= params.yaw_min_deg && abs_yaw <= params.yaw_max_deg &&
           event.segment_angle >= params.min_segment_angle_deg &&
           std::abs(event.net_yaw + event.gps_heading_change) <= params.max_yaw_gps_gap_deg &&
           event.mean_speed >= params.min_mean_speed_mps;
}

std::vector<TurnEvent> detect_turns_many(const std::vector<Trip>& trips, const RoadGraph& graph,
                                         const TurnDetectParams& params, int jobs) {
    std::vector<std::vector<TurnEvent>> per_trip(trips.size());
    int workers = std::max(1, jobs);
    workers = static_cast<int>(std::min<size_t>(workers, trips.size()));

    if (workers <= 1) {
        for (size_t i = 0; i < trips.size(); ++i) per_trip[i] = detect_turns(trips[i], graph, params);
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= trips.size()) return;
                try {
                    per_trip[i] = detect_turns(trips[i], graph, params);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    // Fixed merge order keeps output independent of the job count.
    std::vector<TurnEvent> all;
    for (auto& events : per_trip) {
        all.insert(all.end(), std::make_move_iterator(events.begin()), std::make_move_iterator(events.end()));
    }
    return all;
}

CsvTable serialize_events(const std::vector<TurnEvent>& events) {
    CsvTable table;
    table.header = {"trip_id",       "start_idx",    "end_idx",           "direction",
                    "net_yaw",       "gps_heading_change", "segment_angle",
                    "junction_node", "max_abs_lat_accel",  "mean_speed",   "duration"};
    for (const auto& e : events) {
        table.rows.push_back({e.trip_id, std::to_string(e.start_idx), std::to_string(e.end_idx),
                              std::string(to_string(e.direction)), format_double(e.net_yaw),
                              format_double(e.gps_heading_change), format_double(e.segment_angle),
                              std::to_string(e.junction_node), format_double(e.max_abs_lat_accel),
                              format_double(e.mean_speed), format_double(e.duration)});
    }
    return table;
}

std::vector<TurnEvent> parse_events(const CsvTable& table) {
    size_t c_trip = table.require_column("trip_id");
    size_t c_start = table.require_column("start_idx");
    size_t c_end = table.require_column("end_idx");
    size_t c_dir = table.require_column("direction");
    size_t c_yaw = table.require_column("net_yaw");
    size_t c_gps = table.require_column("gps_heading_change");
    size_t c_angle = table.require_column("segment_angle");
    size_t c_node = table.require_column("junction_node");
    size_t c_lat = table.require_column("max_abs_lat_accel");
    size_t c_speed = table.require_column("mean_speed");
    size_t c_dur = table.require_column("duration");

    std::vector<TurnEvent> events;
    for (const auto& row : table.rows) {
        TurnEvent e;
        e.trip_id = row[c_trip];
        e.start_idx = static_cast<size_t>(require_int(row[c_start], "start_idx"));
        e.end_idx = static_cast<size_t>(require_int(row[c_end], "end_idx"));
        std::string_view dir = trim(row[c_dir]);
        if (dir == "Left") {
            e.direction = TurnDirection::Left;
        } else if (dir == "Right") {
            e.direction = TurnDirection::Right;
        } else {
            fail_parse("BadDirection", "unknown turn direction '" + std::string(dir) + "'");
        }
        e.net_yaw = require_double(row[c_yaw], "net_yaw");
        e.gps_heading_change = require_double(row[c_gps], "gps_heading_change");
        e.segment_angle = require_double(row[c_angle], "segment_angle");
        e.junction_node = require_int(row[c_node], "junction_node");
        e.max_abs_lat_accel = require_double(row[c_lat], "max_abs_lat_accel");
        e.mean_speed = require_double(row[c_speed], "mean_speed");
        e.duration = require_double(row[c_dur], "duration");
        events.push_back(std::move(e));
    }
    return events;
}

void write_events_file(const std::string& path, const std::vector<TurnEvent>& events) {
    write_csv_file(path, serialize_events(events));
}

std::vector<TurnEvent> load_events_file(const std::string& path) {
    return parse_events(read_csv_file(path));
}

}  // namespace scenfuse
