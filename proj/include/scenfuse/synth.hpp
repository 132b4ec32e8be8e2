#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenfuse/config.hpp"
#include "scenfuse/records.hpp"
#include "scenfuse/road_graph.hpp"
#include "scenfuse/trip.hpp"
#include "scenfuse/turn_detect.hpp"

namespace scenfuse {

// Deterministic fixture generators: a grid road network, trips with planted
// turns, and record datasets with planted scenario matches and cohort
// violations, each paired with machine-readable ground truth.

struct GridSpec {
    int rows = 4;
    int cols = 4;
    double spacing_m = 150.0;
};

struct RecordsSpec {
    std::int64_t count = 1000;
    double match_fraction = 0.3;
    std::int64_t cohort_violations = 10;
    DatasetId dataset = DatasetId::FatalNcd;
};

struct TripsSpec {
    std::int64_t count = 200;
    int legs_per_trip = 6;
    double sample_rate_hz = 10.0;
    double speed_mps = 10.0;
    double yaw_noise_sd = 0.5;      // deg/s
    double heading_noise_sd = 2.0;  // deg
};

struct SynthSpec {
    std::uint64_t seed = 1;
    GridSpec grid;
    RecordsSpec records;
    TripsSpec trips;

    void validate() const;  // errors: InvalidSpec
    static SynthSpec from_config(const Config& cfg);
    static SynthSpec load(const std::string& path);
};

// rows x cols nodes, id = row * cols + col, at (col * spacing, row * spacing);
// axis-aligned segments between grid neighbours.
RoadGraph make_grid_graph(const GridSpec& grid);

struct RoutePlan {
    std::string trip_id;
    std::vector<std::int64_t> nodes;  // consecutive nodes must share a segment
};

// Non-backtracking random walk of legs_per_trip legs, avoiding degree-2 nodes
// whenever another continuation exists. Deterministic per (seed, trip_index).
RoutePlan random_route(const SynthSpec& spec, const RoadGraph& graph, std::int64_t trip_index);

struct SynthTrip {
    Trip trip;
    std::vector<TurnEvent> truth;
};

// Constant-speed drive along the route. Each direction change is a raised-
// cosine yaw pulse whose integral equals the planted net yaw; the heading
// channel follows the clean yaw integral, and configured sensor noise is added
// to the yaw-rate and heading channels independently. Ground truth lists one
// event per planted turn of at least 45 degrees at a node of degree >= 3.
// Errors: IllegalRoute (unknown or non-adjacent nodes, fewer than two nodes,
// legs shorter than the turn profile).
SynthTrip gen_trip(const SynthSpec& spec, const RoadGraph& graph, const RoutePlan& route);

// trips.count random-route trips; trip streams are independent, so any subset
// regenerates identically.
std::vector<SynthTrip> gen_trips(const SynthSpec& spec, const RoadGraph& graph);

struct RecordGroundTruth {
    std::string scenario;  // definition name the planted matches target
    std::int64_t count = 0;
    std::int64_t match_count = 0;
    std::int64_t violation_count = 0;
    std::int64_t survivor_count = 0;        // records left after the cohort filter
    std::int64_t survivor_match_count = 0;  // planted matches among survivors
    std::vector<std::int64_t> match_indices;
    std::vector<std::int64_t> violation_indices;

    void save(const std::string& path) const;
    static RecordGroundTruth load(const std::string& path);
};

struct SynthRecords {
    std::vector<VehicleRecord> records;
    RecordGroundTruth truth;
};

// Plants match_fraction matches (the leading block of indices) and
// cohort_violations body-class violations (evenly strided), pre-computing the
// survivor counts in the ground truth.
SynthRecords gen_records(const SynthSpec& spec);

}  // namespace scenfuse
