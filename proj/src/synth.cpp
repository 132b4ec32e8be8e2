#include "scenfuse/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

#include "scenfuse/angles.hpp"
#include "scenfuse/common.hpp"
#include "scenfuse/numfmt.hpp"
#include "scenfuse/rng.hpp"

namespace scenfuse {

namespace {

constexpr double kTurnDurationS = 6.0;

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

// Fresh child stream keyed by (seed, stream_id); independent of the order in
// which streams are requested.
Rng stream_for(std::uint64_t seed, std::uint64_t stream_id) {
    Rng parent(seed);
    return parent.fork(stream_id);
}

std::string trip_name(std::int64_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "trip" + digits;
}

[[noreturn]] void bad_spec(const std::string& message) { fail_validation("InvalidSpec", message); }

[[noreturn]] void bad_route(const std::string& message) { fail_validation("IllegalRoute", message); }

}  // namespace

void SynthSpec::validate() const {
    if (grid.rows < 2 || grid.cols < 2) bad_spec("grid needs at least 2x2 nodes");
    if (!(grid.spacing_m > 0.0)) bad_spec("grid spacing must be positive");
    if (records.count < 0) bad_spec("record count must be non-negative");
    if (!(records.match_fraction >= 0.0 && records.match_fraction <= 1.0)) {
        bad_spec("match fraction must lie in [0, 1]");
    }
    if (records.cohort_violations < 0 || records.cohort_violations > records.count) {
        bad_spec("cohort violations must lie in [0, record count]");
    }
    if (trips.count < 0) bad_spec("trip count must be non-negative");
    if (trips.legs_per_trip < 1) bad_spec("trips need at least one leg");
    if (!(trips.sample_rate_hz >= 1.0)) bad_spec("sample rate must be at least 1 Hz");
    if (!(trips.speed_mps > 0.0)) bad_spec("speed must be positive");
    if (!(trips.yaw_noise_sd >= 0.0) || !(trips.heading_noise_sd >= 0.0)) {
        bad_spec("noise levels must be non-negative");
    }
}

SynthSpec SynthSpec::from_config(const Config& cfg) {
    cfg.check_sections({"", "synth", "grid", "records", "trips"});
    cfg.check_keys("synth", {"seed"});
    cfg.check_keys("grid", {"rows", "cols", "spacing_m"});
    cfg.check_keys("records", {"count", "match_fraction", "cohort_violations", "dataset"});
    cfg.check_keys("trips", {"count", "legs_per_trip", "sample_rate_hz", "speed_mps", "yaw_noise_sd",
                             "heading_noise_sd"});

    SynthSpec spec;
    std::int64_t seed = cfg.get_int("synth", "seed", static_cast<std::int64_t>(spec.seed));
    if (seed < 0) bad_spec("seed must be non-negative");
    spec.seed = static_cast<std::uint64_t>(seed);

    spec.grid.rows = static_cast<int>(cfg.get_int("grid", "rows", spec.grid.rows));
    spec.grid.cols = static_cast<int>(cfg.get_int("grid", "cols", spec.grid.cols));
    spec.grid.spacing_m = cfg.get_double("grid", "spacing_m", spec.grid.spacing_m);

    spec.records.count = cfg.get_int("records", "count", spec.records.count);
    spec.records.match_fraction = cfg.get_double("records", "match_fraction", spec.records.match_fraction);
    spec.records.cohort_violations =
        cfg.get_int("records", "cohort_violations", spec.records.cohort_violations);
    if (auto dataset = cfg.get("records", "dataset")) {
        spec.records.dataset = dataset_from_string(*dataset);
    }

    spec.trips.count = cfg.get_int("trips", "count", spec.trips.count);
    spec.trips.legs_per_trip =
        static_cast<int>(cfg.get_int("trips", "legs_per_trip", spec.trips.legs_per_trip));
    spec.trips.sample_rate_hz = cfg.get_double("trips", "sample_rate_hz", spec.trips.sample_rate_hz);
    spec.trips.speed_mps = cfg.get_double("trips", "speed_mps", spec.trips.speed_mps);
    spec.trips.yaw_noise_sd = cfg.get_double("trips", "yaw_noise_sd", spec.trips.yaw_noise_sd);
    spec.trips.heading_noise_sd = cfg.get_double("trips", "heading_noise_sd", spec.trips.heading_noise_sd);

    spec.validate();
    return spec;
}

SynthSpec SynthSpec::load(const std::string& path) { return from_config(Config::load(path)); }

RoadGraph make_grid_graph(const GridSpec& grid) {
    if (grid.rows < 2 || grid.cols < 2) bad_spec("grid needs at least 2x2 nodes");
    if (!(grid.spacing_m > 0.0)) bad_spec("grid spacing must be positive");

    RoadGraph graph;
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            RoadNode node;
            node.id = static_cast<std::int64_t>(r) * grid.cols + c;
            node.x = c * grid.spacing_m;
            node.y = r * grid.spacing_m;
            graph.add_node(node);
        }
    }
    std::int64_t next_segment = 0;
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c + 1 < grid.cols; ++c) {
            RoadSegment seg;
            seg.id = next_segment++;
            seg.node_a = static_cast<std::int64_t>(r) * grid.cols + c;
            seg.node_b = seg.node_a + 1;
            graph.add_segment(seg);
        }
    }
    for (int r = 0; r + 1 < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            RoadSegment seg;
            seg.id = next_segment++;
            seg.node_a = static_cast<std::int64_t>(r) * grid.cols + c;
            seg.node_b = seg.node_a + grid.cols;
            graph.add_segment(seg);
        }
    }
    return graph;
}

RoutePlan random_route(const SynthSpec& spec, const RoadGraph& graph, std::int64_t trip_index) {
    spec.validate();
    if (trip_index < 0) bad_spec("trip index must be non-negative");
    if (graph.nodes().empty()) bad_route("graph has no nodes");

    Rng rng = stream_for(spec.seed, static_cast<std::uint64_t>(trip_index));
    std::vector<std::int64_t> ids;
    ids.reserve(graph.nodes().size());
    for (const auto& [id, node] : graph.nodes()) ids.push_back(id);

    RoutePlan route;
    route.trip_id = trip_name(trip_index);
    std::int64_t current = ids[rng.below(ids.size())];
    std::int64_t previous = current;  // nothing to backtrack to yet
    route.nodes.push_back(current);
    for (int leg = 0; leg < spec.trips.legs_per_trip; ++leg) {
        std::vector<std::int64_t> onward;
        std::vector<std::int64_t> preferred;
        for (std::int64_t seg : graph.incident_segments(current)) {
            std::int64_t neighbour = graph.other_node(seg, current);
            if (neighbour == previous && previous != current) continue;
            onward.push_back(neighbour);
            if (graph.degree(neighbour) >= 3) preferred.push_back(neighbour);
        }
        const auto& pool = preferred.empty() ? onward : preferred;
        if (pool.empty()) bad_route("walk dead-ends at node " + std::to_string(current));
        std::int64_t next = pool[rng.below(pool.size())];
        route.nodes.push_back(next);
        previous = current;
        current = next;
    }
    return route;
}

SynthTrip gen_trip(const SynthSpec& spec, const RoadGraph& graph, const RoutePlan& route) {
    spec.validate();
    if (route.trip_id.empty()) bad_route("route carries no trip id");
    if (route.nodes.size() < 2) bad_route("route needs at least two nodes");
    for (std::int64_t id : route.nodes) {
        if (!graph.nodes().count(id)) bad_route("route references unknown node " + std::to_string(id));
    }

    struct Leg {
        std::int64_t segment = 0;
        double heading = 0.0;
        double length = 0.0;
    };
    size_t leg_count = route.nodes.size() - 1;
    std::vector<Leg> legs(leg_count);
    for (size_t i = 0; i < leg_count; ++i) {
        std::int64_t a = route.nodes[i];
        std::int64_t b = route.nodes[i + 1];
        std::optional<std::int64_t> segment;
        for (std::int64_t seg : graph.incident_segments(a)) {
            if (graph.other_node(seg, a) == b) {
                segment = seg;
                break;
            }
        }
        if (!segment) {
            bad_route("nodes " + std::to_string(a) + " and " + std::to_string(b) + " share no segment");
        }
        const RoadNode& na = graph.node(a);
        const RoadNode& nb = graph.node(b);
        legs[i].segment = *segment;
        legs[i].length = std::hypot(nb.x - na.x, nb.y - na.y);
        legs[i].heading = compass_heading(nb.x - na.x, nb.y - na.y);
        if (legs[i].length / spec.trips.speed_mps < kTurnDurationS) {
            bad_route("leg " + std::to_string(a) + "->" + std::to_string(b) +
                      " is traversed faster than the " + format_double(kTurnDurationS) +
                      " s turn profile");
        }
    }

    std::vector<double> arrival(route.nodes.size(), 0.0);
    for (size_t i = 0; i < leg_count; ++i) {
        arrival[i + 1] = arrival[i] + legs[i].length / spec.trips.speed_mps;
    }
    double duration = arrival.back();

    struct Turn {
        size_t node_index;
        double center;
        double net_yaw;  // deg, left positive
    };
    std::vector<Turn> turns;
    for (size_t i = 1; i < leg_count; ++i) {
        double delta = wrap_degrees(legs[i].heading - legs[i - 1].heading);
        if (delta == 0.0) continue;
        turns.push_back({i, arrival[i], -delta});
    }

    auto pulse_rate = [](const Turn& turn, double t) {
        double u = t - turn.center;
        if (std::abs(u) >= 0.5 * kTurnDurationS) return 0.0;
        return turn.net_yaw / kTurnDurationS * (1.0 + std::cos(2.0 * kPi * u / kTurnDurationS));
    };
    auto pulse_integral = [](const Turn& turn, double t) {
        double u = t - turn.center;
        if (u <= -0.5 * kTurnDurationS) return 0.0;
        if (u >= 0.5 * kTurnDurationS) return turn.net_yaw;
        return turn.net_yaw / kTurnDurationS * (u + 0.5 * kTurnDurationS) +
               turn.net_yaw / (2.0 * kPi) * std::sin(2.0 * kPi * u / kTurnDurationS);
    };

    double rate = spec.trips.sample_rate_hz;
    size_t count = static_cast<size_t>(std::floor(duration * rate + 1e-9)) + 1;

    Rng noise = stream_for(spec.seed, fnv1a64(route.trip_id));
    SynthTrip out;
    Trip& trip = out.trip;
    trip.trip_id = route.trip_id;
    trip.sample_rate_hz = rate;
    trip.t.reserve(count);
    trip.speed.reserve(count);
    trip.yaw_rate.reserve(count);
    trip.lat_accel.reserve(count);
    trip.gps_heading.reserve(count);
    trip.matched_segment.reserve(count);

    size_t leg = 0;
    double start_heading = legs[0].heading;
    for (size_t k = 0; k < count; ++k) {
        double t = static_cast<double>(k) / rate;
        while (leg + 1 < leg_count && t >= arrival[leg + 1]) ++leg;
        double yaw_clean = 0.0;
        double integral = 0.0;
        for (const Turn& turn : turns) {
            yaw_clean += pulse_rate(turn, t);
            integral += pulse_integral(turn, t);
        }
        trip.t.push_back(t);
        trip.speed.push_back(spec.trips.speed_mps);
        trip.yaw_rate.push_back(yaw_clean + noise.normal(0.0, spec.trips.yaw_noise_sd));
        trip.lat_accel.push_back(spec.trips.speed_mps * yaw_clean * kPi / 180.0);
        trip.gps_heading.push_back(
            normalize_compass(start_heading - integral + noise.normal(0.0, spec.trips.heading_noise_sd)));
        trip.matched_segment.push_back(legs[leg].segment);
    }
    trip.validate();

    for (const Turn& turn : turns) {
        if (std::abs(turn.net_yaw) < 45.0) continue;
        if (graph.degree(route.nodes[turn.node_index]) < 3) continue;
        TurnEvent event;
        event.trip_id = route.trip_id;
        double first = (turn.center - 0.5 * kTurnDurationS) * rate;
        double last = (turn.center + 0.5 * kTurnDurationS) * rate;
        event.start_idx = static_cast<size_t>(std::max(0.0, std::ceil(first - 1e-9)));
        event.end_idx = std::min(count - 1, static_cast<size_t>(std::floor(last + 1e-9)));
        event.direction = turn.net_yaw > 0.0 ? TurnDirection::Left : TurnDirection::Right;
        event.net_yaw = turn.net_yaw;
        event.gps_heading_change = -turn.net_yaw;
        event.segment_angle = std::abs(turn.net_yaw);
        event.junction_node = route.nodes[turn.node_index];
        event.max_abs_lat_accel =
            spec.trips.speed_mps * (2.0 * std::abs(turn.net_yaw) / kTurnDurationS) * kPi / 180.0;
        event.mean_speed = spec.trips.speed_mps;
        event.duration = static_cast<double>(event.end_idx - event.start_idx) / rate;
        out.truth.push_back(event);
    }
    return out;
}

std::vector<SynthTrip> gen_trips(const SynthSpec& spec, const RoadGraph& graph) {
    spec.validate();
    std::vector<SynthTrip> out;
    out.reserve(static_cast<size_t>(spec.trips.count));
    for (std::int64_t i = 0; i < spec.trips.count; ++i) {
        out.push_back(gen_trip(spec, graph, random_route(spec, graph, i)));
    }
    return out;
}

void RecordGroundTruth::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + path);
    out << "[groundtruth]\n";
    out << "scenario = " << scenario << "\n";
    out << "count = " << count << "\n";
    out << "match_count = " << match_count << "\n";
    out << "violation_count = " << violation_count << "\n";
    out << "survivor_count = " << survivor_count << "\n";
    out << "survivor_match_count = " << survivor_match_count << "\n";
    out << "match_indices = ";
    for (size_t i = 0; i < match_indices.size(); ++i) {
        if (i > 0) out << ",";
        out << match_indices[i];
    }
    out << "\n";
    out << "violation_indices = ";
    for (size_t i = 0; i < violation_indices.size(); ++i) {
        if (i > 0) out << ",";
        out << violation_indices[i];
    }
    out << "\n";
    if (!out) fail_io("FileNotWritable", "error writing " + path);
}

RecordGroundTruth RecordGroundTruth::load(const std::string& path) {
    Config cfg = Config::load(path);
    cfg.check_sections({"", "groundtruth"});
    cfg.check_keys("groundtruth", {"scenario", "count", "match_count", "violation_count", "survivor_count",
                                   "survivor_match_count", "match_indices", "violation_indices"});
    RecordGroundTruth truth;
    truth.scenario = cfg.require("groundtruth", "scenario");
    truth.count = cfg.get_int("groundtruth", "count", 0);
    truth.match_count = cfg.get_int("groundtruth", "match_count", 0);
    truth.violation_count = cfg.get_int("groundtruth", "violation_count", 0);
    truth.survivor_count = cfg.get_int("groundtruth", "survivor_count", 0);
    truth.survivor_match_count = cfg.get_int("groundtruth", "survivor_match_count", 0);
    for (const auto& item : cfg.get_list("groundtruth", "match_indices")) {
        truth.match_indices.push_back(require_int(item, "match index"));
    }
    for (const auto& item : cfg.get_list("groundtruth", "violation_indices")) {
        truth.violation_indices.push_back(require_int(item, "violation index"));
    }
    return truth;
}

SynthRecords gen_records(const SynthSpec& spec) {
    spec.validate();
    const RecordsSpec& rspec = spec.records;
    RecordSchema schema = RecordSchema::default_for(rspec.dataset);
    bool ncd = rspec.dataset == DatasetId::FatalNcd || rspec.dataset == DatasetId::NonFatalNcd;
    JunctionCodeMap junction_map = ncd ? JunctionCodeMap::defaults() : JunctionCodeMap::nds_defaults();
    TurningCodeMap turning_map = ncd ? TurningCodeMap::defaults() : TurningCodeMap::nds_defaults();

    std::set<std::string> schema_vars(schema.coded_variables.begin(), schema.coded_variables.end());

    // Turning variables present in the schema; each carries two turn codes (for
    // variety) and one deterministic non-turn code.
    struct TurnVar {
        std::string variable;
        std::string turn_a;
        std::string turn_b;
        std::string calm;
    };
    std::vector<TurnVar> turn_vars;
    for (const auto& codes : turning_map.variables) {
        if (!schema_vars.count(codes.variable)) continue;
        TurnVar var;
        var.variable = codes.variable;
        auto first = codes.turn_codes.begin();
        var.turn_a = *first;
        var.turn_b = codes.turn_codes.size() > 1 ? *std::next(first) : *first;
        for (const auto& code : codes.known_codes) {
            if (!codes.turn_codes.count(code)) {
                var.calm = code;
                break;
            }
        }
        if (!var.calm.empty()) turn_vars.push_back(std::move(var));
    }

    Severity severity = Severity::Fatal;
    std::string prefix = "F";
    switch (rspec.dataset) {
        case DatasetId::FatalNcd:
            severity = Severity::Fatal;
            prefix = "F";
            break;
        case DatasetId::NonFatalNcd:
            severity = Severity::NonFatalInjury;
            prefix = "C";
            break;
        case DatasetId::NdsCrash:
            severity = Severity::PropertyDamageOnly;
            prefix = "NC";
            break;
        case DatasetId::NdsNearCrash:
            severity = Severity::NearCrash;
            prefix = "NN";
            break;
        case DatasetId::NdsBaseline:
            severity = Severity::Baseline;
            prefix = "NB";
            break;
    }

    std::int64_t n = rspec.count;
    std::int64_t match_count = std::clamp(
        static_cast<std::int64_t>(std::llround(static_cast<double>(n) * rspec.match_fraction)),
        std::int64_t{0}, n);
    std::set<std::int64_t> violations;
    if (rspec.cohort_violations > 0) {
        std::int64_t stride = n / rspec.cohort_violations;
        for (std::int64_t k = 0; k < rspec.cohort_violations; ++k) violations.insert(k * stride);
    }

    bool has_lighting = schema_vars.count("LIGHTING") > 0;
    bool has_motorist = schema_vars.count("MOTORIST_TYPE") > 0;
    const std::array<std::string_view, 5> lighting_codes = {"Daylight", "Dark", "DarkLighted", "Dawn",
                                                            "Dusk"};

    Rng rng = stream_for(spec.seed, fnv1a64("records"));
    SynthRecords out;
    out.records.reserve(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        VehicleRecord rec;
        rec.dataset_id = rspec.dataset;
        std::string digits = std::to_string(i);
        if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
        rec.case_id = prefix + digits;
        rec.vehicle_index = 1;
        rec.calendar_year = 2016 + static_cast<int>(rng.below(5));
        // model year in [1998, calendar year + 1]
        rec.model_year =
            1998 + static_cast<int>(rng.below(static_cast<std::uint64_t>(rec.calendar_year - 1996)));
        rec.body_class =
            violations.count(i) ? BodyClass::MotorcycleMoped : BodyClass::LightPassengerVehicle;
        rec.severity = severity;
        rec.sample_weight = 1.0;
        rec.first_harmful_event_involved = true;
        rec.exclusion_flags = 0;

        bool match = i < match_count;
        rec.coded[junction_map.variable] = match ? "Intersection" : "NonJunction";
        for (size_t v = 0; v < turn_vars.size(); ++v) {
            const TurnVar& var = turn_vars[v];
            if (match && v == 0) {
                rec.coded[var.variable] = (i % 2 == 0) ? var.turn_a : var.turn_b;
            } else {
                rec.coded[var.variable] = var.calm;
            }
        }
        if (has_lighting) {
            rec.coded["LIGHTING"] = std::string(lighting_codes[rng.below(lighting_codes.size())]);
        }
        if (has_motorist) rec.coded["MOTORIST_TYPE"] = "Driver";
        out.records.push_back(std::move(rec));
    }

    RecordGroundTruth& truth = out.truth;
    truth.scenario = "turns_at_intersections";
    truth.count = n;
    truth.match_count = match_count;
    truth.violation_count = static_cast<std::int64_t>(violations.size());
    truth.match_indices.reserve(static_cast<size_t>(match_count));
    for (std::int64_t i = 0; i < match_count; ++i) truth.match_indices.push_back(i);
    truth.violation_indices.assign(violations.begin(), violations.end());
    std::int64_t violating_matches = 0;
    for (std::int64_t idx : violations) {
        if (idx < match_count) ++violating_matches;
    }
    truth.survivor_count = n - truth.violation_count;
    truth.survivor_match_count = match_count - violating_matches;
    return out;
}

}  // namespace scenfuse
