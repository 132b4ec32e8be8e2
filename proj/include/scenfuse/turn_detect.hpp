#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenfuse/config.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/road_graph.hpp"
#include "scenfuse/trip.hpp"

namespace scenfuse {

enum class TurnDirection { Left, Right };
std::string_view to_string(TurnDirection d);

// A detected turn through a junction. net_yaw is left-positive;
// gps_heading_change keeps the raw compass convention (a left turn shows a
// negative compass change of roughly -net_yaw).
struct TurnEvent {
    std::string trip_id;
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;
    TurnDirection direction = TurnDirection::Left;
    double net_yaw = 0.0;             // deg, signed
    double gps_heading_change = 0.0;  // deg, signed compass delta
    double segment_angle = 0.0;       // deg, (0, 180]
    std::int64_t junction_node = 0;
    double max_abs_lat_accel = 0.0;  // m/s^2
    double mean_speed = 0.0;         // m/s
    double duration = 0.0;           // s
};

struct TurnDetectParams {
    double window_half_width_s = 8.0;  // evaluation window either side of the passage
    double yaw_min_deg = 45.0;         // |net yaw| acceptance band
    double yaw_max_deg = 135.0;
    double min_segment_angle_deg = 45.0;
    double max_yaw_gps_gap_deg = 30.0;  // yaw vs GPS-derived yaw consistency
    double min_mean_speed_mps = 2.24;   // ~5 mph
    double min_map_match_coverage = 0.5;
    // Off by default: subtract the median yaw rate over near-stationary
    // samples before integrating (gyro bias removal).
    bool remove_yaw_bias = false;
    double bias_speed_ceiling_mps = 0.5;

    static TurnDetectParams from_config(const Config& cfg, std::string_view section = "detector");
};

// A transition between distinct matched segments meeting at a node of degree
// >= 3; sample_idx is the first sample on seg_out.
struct JunctionPassage {
    std::int64_t node = 0;
    std::size_t sample_idx = 0;
    std::int64_t seg_in = 0;
    std::int64_t seg_out = 0;
};

// Raises NoMapMatch when matched-segment coverage is below the threshold.
std::vector<JunctionPassage> junction_passages(const Trip& trip, const RoadGraph& graph,
                                               double min_coverage = 0.5);

std::vector<TurnEvent> detect_turns(const Trip& trip, const RoadGraph& graph, const TurnDetectParams& params);

// Re-checks the four acceptance gates for an already-built event (post-hoc audit).
bool passes_gates(const TurnEvent& event, const TurnDetectParams& params);

// Detects over many trips; `jobs` bounds worker threads, results are merged in
// trip order so the output is identical for any job count.
std::vector<TurnEvent> detect_turns_many(const std::vector<Trip>& trips, const RoadGraph& graph,
                                         const TurnDetectParams& params, int jobs = 1);

CsvTable serialize_events(const std::vector<TurnEvent>& events);
std::vector<TurnEvent> parse_events(const CsvTable& table);
void write_events_file(const std::string& path, const std::vector<TurnEvent>& events);
std::vector<TurnEvent> load_events_file(const std::string& path);

}  // namespace scenfuse
