#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "scenfuse/angles.hpp"
#include "scenfuse/common.hpp"
#include "scenfuse/road_graph.hpp"
#include "scenfuse/trip.hpp"
#include "scenfuse/turn_detect.hpp"

using namespace scenfuse;

namespace {

template <typename F>
std::string error_code(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("scenfuse_nds_" + std::to_string(static_cast<unsigned long>(::getpid())) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// Four-leg intersection: center node 0, legs west/east/north/south.
RoadGraph cross_graph() {
    RoadGraph g;
    g.add_node({0, 0.0, 0.0});
    g.add_node({1, -100.0, 0.0});
    g.add_node({2, 100.0, 0.0});
    g.add_node({3, 0.0, 100.0});
    g.add_node({4, 0.0, -100.0});
    g.add_segment({10, 1, 0, {}});
    g.add_segment({20, 0, 2, {}});
    g.add_segment({30, 0, 3, {}});
    g.add_segment({40, 0, 4, {}});
    return g;
}

// 40 s at 10 Hz with a raised-cosine yaw pulse of the given net angle centered
// at t = 20, entering on seg_in and leaving on seg_out at the cross center.
// Heading starts at start_heading and integrates the (negated) yaw rate.
Trip turn_trip(const std::string& id, double net_yaw_deg, std::int64_t seg_in, std::int64_t seg_out,
               double speed_mps = 10.0, double start_heading = 90.0) {
    const double rate = 10.0;
    const double total = 40.0;
    const double t0 = 17.0, pulse_len = 6.0;
    const double amplitude = 2.0 * net_yaw_deg / pulse_len;

    Trip trip;
    trip.trip_id = id;
    trip.sample_rate_hz = rate;
    const int n = static_cast<int>(total * rate) + 1;
    double heading = start_heading;
    double prev_w = 0.0;
    for (int i = 0; i < n; ++i) {
        double t = i / rate;
        double w = 0.0;
        if (t >= t0 && t <= t0 + pulse_len) {
            w = amplitude * (1.0 - std::cos(2.0 * kPi * (t - t0) / pulse_len)) / 2.0;
        }
        if (i > 0) heading -= 0.5 * (prev_w + w) / rate;  // compass falls as yaw rises
        prev_w = w;
        trip.t.push_back(t);
        trip.speed.push_back(speed_mps);
        trip.yaw_rate.push_back(w);
        trip.lat_accel.push_back(speed_mps * w * kPi / 180.0);
        trip.gps_heading.push_back(normalize_compass(heading));
        trip.matched_segment.push_back(t < 20.0 ? seg_in : seg_out);
    }
    return trip;
}

}  // namespace

TEST_CASE("trip validation") {
    Trip trip = turn_trip("ok", 90.0, 10, 30);
    trip.validate();

    SUBCASE("channel length mismatch") {
        trip.speed.pop_back();
        CHECK(error_code([&] { trip.validate(); }) == "ChannelLengthMismatch");
    }
    SUBCASE("too short") {
        Trip t2;
        t2.t = {0.0};
        t2.speed = {1.0};
        t2.yaw_rate = {0.0};
        t2.lat_accel = {0.0};
        t2.gps_heading = {0.0};
        t2.matched_segment = {std::nullopt};
        CHECK(error_code([&] { t2.validate(); }) == "ShortTrip");
    }
    SUBCASE("bad sample rate") {
        trip.sample_rate_hz = 0.0;
        CHECK(error_code([&] { trip.validate(); }) == "BadSampleRate");
    }
    SUBCASE("non-monotone time") {
        trip.t[5] = trip.t[4];
        CHECK(error_code([&] { trip.validate(); }) == "NonMonotoneTime");
    }
    SUBCASE("irregular spacing") {
        trip.t[5] += 0.02;  // 20% jitter against 0.1 s nominal
        CHECK(error_code([&] { trip.validate(); }) == "IrregularSampling");
    }
    SUBCASE("spacing within tolerance accepted") {
        for (size_t i = 5; i < trip.t.size(); ++i) trip.t[i] += 0.009;
        trip.validate();
    }
    SUBCASE("negative speed") {
        trip.speed[3] = -0.1;
        CHECK(error_code([&] { trip.validate(); }) == "NegativeSpeed");
    }
}

TEST_CASE("yaw integral closed forms") {
    SUBCASE("constant rate") {
        Trip trip;
        trip.trip_id = "const";
        trip.sample_rate_hz = 10.0;
        for (int i = 0; i <= 100; ++i) {
            double t = i / 10.0;
            trip.t.push_back(t);
            trip.speed.push_back(10.0);
            trip.yaw_rate.push_back(9.0);
            trip.lat_accel.push_back(0.0);
            trip.gps_heading.push_back(normalize_compass(90.0 - 9.0 * t));
            trip.matched_segment.push_back(std::nullopt);
        }
        trip.validate();
        CHECK(near(integrate_yaw(trip, {0, 100}), 90.0, 1e-9));
    }
    SUBCASE("sinusoidal pulse") {
        Trip trip;
        trip.trip_id = "sin";
        trip.sample_rate_hz = 10.0;
        for (int i = 0; i <= 50; ++i) {
            double t = i / 10.0;
            trip.t.push_back(t);
            trip.speed.push_back(10.0);
            trip.yaw_rate.push_back(30.0 * std::sin(kPi * t / 5.0));
            trip.lat_accel.push_back(0.0);
            trip.gps_heading.push_back(0.0);
            trip.matched_segment.push_back(std::nullopt);
        }
        double value = integrate_yaw(trip, {0, 50});
        // Discrete trapezoid value re-derived independently; the closed-form
        // antiderivative gives 300/pi.
        CHECK(near(value, 95.46154786132188, 1e-9));
        CHECK(near(value, 300.0 / kPi, 0.05));

        SUBCASE("additivity over a split") {
            double whole = integrate_yaw(trip, {0, 50});
            double left = integrate_yaw(trip, {0, 25});
            double right = integrate_yaw(trip, {25, 50});
            CHECK(near(whole, left + right, 1e-9));
        }
        SUBCASE("time reversal negates") {
            Trip rev;
            rev.trip_id = "sin_rev";
            rev.sample_rate_hz = trip.sample_rate_hz;
            size_t n = trip.size();
            double t_end = trip.t.back();
            for (size_t i = 0; i < n; ++i) {
                size_t j = n - 1 - i;
                rev.t.push_back(t_end - trip.t[j]);
                rev.speed.push_back(trip.speed[j]);
                rev.yaw_rate.push_back(-trip.yaw_rate[j]);
                rev.lat_accel.push_back(-trip.lat_accel[j]);
                rev.gps_heading.push_back(trip.gps_heading[j]);
                rev.matched_segment.push_back(trip.matched_segment[j]);
            }
            rev.validate();
            CHECK(near(integrate_yaw(rev, {0, 50}), -integrate_yaw(trip, {0, 50}), 1e-9));
        }
    }
}

TEST_CASE("gps heading change unwraps per step") {
    Trip trip;
    trip.trip_id = "wrap";
    trip.sample_rate_hz = 10.0;
    std::vector<double> headings = {350.0, 355.0, 0.0, 5.0, 10.0, 20.0};
    for (size_t i = 0; i < headings.size(); ++i) {
        trip.t.push_back(static_cast<double>(i) / 10.0);
        trip.speed.push_back(5.0);
        trip.yaw_rate.push_back(0.0);
        trip.lat_accel.push_back(0.0);
        trip.gps_heading.push_back(headings[i]);
        trip.matched_segment.push_back(std::nullopt);
    }
    CHECK(near(gps_heading_change(trip, {0, 5}), 30.0, 1e-12));
    CHECK(near(gps_heading_change(trip, {0, 2}), 10.0, 1e-12));

    // Counterclockwise across the wrap.
    Trip ccw = trip;
    std::reverse(ccw.gps_heading.begin(), ccw.gps_heading.end());
    CHECK(near(gps_heading_change(ccw, {0, 5}), -30.0, 1e-12));

    CHECK(mean_speed(trip, {0, 5}) == doctest::Approx(5.0));
    CHECK(error_code([&] { gps_heading_change(trip, {4, 9}); }) == "WindowOutOfBounds");
    CHECK(error_code([&] { mean_speed(trip, {3, 3}); }) == "WindowOutOfBounds");
}

TEST_CASE("trip file round-trip") {
    TempDir dir;
    Trip trip = turn_trip("rt-1", 90.0, 10, 30);
    trip.matched_segment[7] = std::nullopt;
    std::string path = (dir.path / "trip.csv").string();
    write_trip_file(path, trip);
    Trip back = load_trip_file(path);

    CHECK(back.trip_id == trip.trip_id);
    CHECK(back.sample_rate_hz == trip.sample_rate_hz);
    REQUIRE(back.size() == trip.size());
    CHECK(back.t == trip.t);
    CHECK(back.speed == trip.speed);
    CHECK(back.yaw_rate == trip.yaw_rate);
    CHECK(back.lat_accel == trip.lat_accel);
    CHECK(back.gps_heading == trip.gps_heading);
    CHECK(back.matched_segment == trip.matched_segment);
}

TEST_CASE("compass heading and segment angles") {
    CHECK(compass_heading(1.0, 0.0) == doctest::Approx(90.0));
    CHECK(compass_heading(0.0, 1.0) == doctest::Approx(0.0));
    CHECK(compass_heading(-1.0, 0.0) == doctest::Approx(270.0));
    CHECK(compass_heading(0.0, -1.0) == doctest::Approx(180.0));
    CHECK(compass_heading(1.0, 1.0) == doctest::Approx(45.0));

    RoadGraph g = cross_graph();
    CHECK(g.heading_from(10, 0) == doctest::Approx(270.0));  // west leg seen from center
    CHECK(g.heading_from(30, 0) == doctest::Approx(0.0));
    CHECK(segment_angle(g, 10, 30, 0) == doctest::Approx(90.0));  // west in, north out
    CHECK(segment_angle(g, 10, 20, 0) == doctest::Approx(0.0));   // straight through
    CHECK(segment_angle(g, 10, 40, 0) == doctest::Approx(90.0));
    CHECK(segment_angle(g, 10, 10, 0) == doctest::Approx(180.0));  // back out the same leg

    SUBCASE("polyline bends the endpoint heading") {
        RoadGraph p;
        p.add_node({1, -100.0, 0.0});
        p.add_node({2, 0.0, 0.0});
        p.add_segment({5, 1, 2, {{-50.0, 50.0}}});
        CHECK(p.heading_from(5, 1) == doctest::Approx(45.0));
        CHECK(p.heading_from(5, 2) == doctest::Approx(315.0));
    }
}

TEST_CASE("road graph construction and errors") {
    RoadGraph g = cross_graph();
    CHECK(g.degree(0) == 4);
    CHECK(g.degree(1) == 1);
    CHECK(g.degree(99) == 0);
    CHECK(g.other_node(10, 0) == 1);
    CHECK(g.shared_node(10, 30) == 0);
    CHECK(g.shared_node(10, 10).has_value());  // a segment trivially shares its own endpoints
    g.add_node({6, 200.0, 0.0});
    g.add_segment({70, 2, 6, {}});
    CHECK_FALSE(g.shared_node(10, 70).has_value());
    CHECK(error_code([&] { g.node(99); }) == "UnknownNode");
    CHECK(error_code([&] { g.segment(99); }) == "UnknownSegment");
    CHECK(error_code([&] { g.other_node(20, 1); }) == "NotIncident");
    CHECK(error_code([&] { g.add_node({0, 1.0, 1.0}); }) == "DuplicateNode");
    CHECK(error_code([&] { g.add_segment({10, 0, 1, {}}); }) == "DuplicateSegment");
    CHECK(error_code([&] { g.add_segment({50, 0, 99, {}}); }) == "DanglingSegment");
}

TEST_CASE("road graph file round-trip") {
    TempDir dir;
    RoadGraph g = cross_graph();
    g.add_node({5, -100.0, 100.0});
    g.add_segment({60, 1, 5, {{-120.0, 30.0}, {-130.0, 70.0}}});
    std::string nodes = (dir.path / "nodes.csv").string();
    std::string segs = (dir.path / "segments.csv").string();
    g.save(nodes, segs);
    RoadGraph back = RoadGraph::load(nodes, segs);

    CHECK(back.nodes().size() == g.nodes().size());
    CHECK(back.segments().size() == g.segments().size());
    CHECK(back.segment(60).polyline == g.segment(60).polyline);
    CHECK(back.node(5).x == g.node(5).x);
    CHECK(back.degree(0) == 4);
    CHECK(back.heading_from(60, 1) == doctest::Approx(g.heading_from(60, 1)));
}

TEST_CASE("junction passages") {
    RoadGraph g = cross_graph();

    SUBCASE("one crossing, planted index") {
        Trip trip = turn_trip("p1", 90.0, 10, 30);
        auto passages = junction_passages(trip, g, 0.5);
        REQUIRE(passages.size() == 1);
        CHECK(passages[0].node == 0);
        CHECK(passages[0].sample_idx == 200);
        CHECK(passages[0].seg_in == 10);
        CHECK(passages[0].seg_out == 30);
    }
    SUBCASE("degree-2 interior node yields no passage") {
        RoadGraph chain;
        chain.add_node({1, -100.0, 0.0});
        chain.add_node({2, 0.0, 0.0});
        chain.add_node({3, 100.0, 20.0});
        chain.add_segment({100, 1, 2, {}});
        chain.add_segment({200, 2, 3, {}});
        Trip trip = turn_trip("p2", 0.0, 100, 200);
        CHECK(junction_passages(trip, chain, 0.5).empty());
    }
    SUBCASE("coverage below threshold") {
        Trip trip = turn_trip("p3", 90.0, 10, 30);
        for (size_t i = 0; i < trip.size(); ++i) {
            if (i % 5 != 0) trip.matched_segment[i] = std::nullopt;  // 20% coverage
        }
        CHECK(error_code([&] { junction_passages(trip, g, 0.5); }) == "NoMapMatch");
    }
    SUBCASE("unmatched gaps do not fabricate transitions") {
        Trip trip = turn_trip("p4", 90.0, 10, 30);
        for (size_t i = 195; i < 205; ++i) trip.matched_segment[i] = std::nullopt;
        auto passages = junction_passages(trip, g, 0.5);
        REQUIRE(passages.size() == 1);
        CHECK(passages[0].sample_idx == 205);
    }
    SUBCASE("segment off the graph") {
        Trip trip = turn_trip("p5", 90.0, 10, 30);
        trip.matched_segment[4] = 777;
        CHECK(error_code([&] { junction_passages(trip, g, 0.5); }) == "UnknownSegment");
    }
}

TEST_CASE("turn detection") {
    RoadGraph g = cross_graph();
    TurnDetectParams params;

    SUBCASE("noise-free left turn") {
        Trip trip = turn_trip("left", 90.0, 10, 30);
        auto events = detect_turns(trip, g, params);
        REQUIRE(events.size() == 1);
        const auto& e = events[0];
        CHECK(e.direction == TurnDirection::Left);
        CHECK(near(e.net_yaw, 90.0, 0.1));
        CHECK(near(e.gps_heading_change, -90.0, 0.1));
        CHECK(e.segment_angle == doctest::Approx(90.0));
        CHECK(e.junction_node == 0);
        CHECK(e.start_idx == 120);
        CHECK(e.end_idx == 280);
        CHECK(near(e.duration, 16.0, 1e-9));
        CHECK(e.mean_speed == doctest::Approx(10.0));
        CHECK(near(e.max_abs_lat_accel, 10.0 * 30.0 * kPi / 180.0, 1e-6));
        CHECK(passes_gates(e, params));
    }
    SUBCASE("right turn flips sign") {
        Trip trip = turn_trip("right", -90.0, 10, 40);
        auto events = detect_turns(trip, g, params);
        REQUIRE(events.size() == 1);
        CHECK(events[0].direction == TurnDirection::Right);
        CHECK(near(events[0].net_yaw, -90.0, 0.1));
        CHECK(near(events[0].gps_heading_change, 90.0, 0.1));
    }
    SUBCASE("left turn across the compass wrap") {
        Trip trip = turn_trip("wrapleft", 90.0, 10, 30, 10.0, 45.0);
        auto events = detect_turns(trip, g, params);
        REQUIRE(events.size() == 1);
        CHECK(near(events[0].gps_heading_change, -90.0, 0.1));
    }
    SUBCASE("straight through is not a turn") {
        Trip trip = turn_trip("straight", 0.0, 10, 20);
        CHECK(detect_turns(trip, g, params).empty());
    }
    SUBCASE("yaw above band is rejected") {
        Trip trip = turn_trip("spin", 170.0, 10, 30);
        CHECK(detect_turns(trip, g, params).empty());
    }
    SUBCASE("inconsistent gps rejects") {
        Trip trip = turn_trip("bad_gps", 90.0, 10, 30);
        for (auto& h : trip.gps_heading) h = 90.0;  // GPS claims no heading change
        CHECK(detect_turns(trip, g, params).empty());
    }
    SUBCASE("straight-road geometry rejects a yaw spike") {
        Trip trip = turn_trip("phantom", 90.0, 10, 20);  // exits on the straight-ahead leg
        CHECK(detect_turns(trip, g, params).empty());
    }
    SUBCASE("slow maneuver rejects") {
        Trip trip = turn_trip("slow", 90.0, 10, 30, 1.0);
        CHECK(detect_turns(trip, g, params).empty());
    }
    SUBCASE("matched-segment flicker dedupes to one event") {
        Trip trip = turn_trip("flicker", 90.0, 10, 30);
        for (size_t i = 200; i < 205; ++i) trip.matched_segment[i] = 10;
        for (size_t i = 205; i < 210; ++i) trip.matched_segment[i] = 30;
        for (size_t i = 210; i < 215; ++i) trip.matched_segment[i] = 10;
        auto events = detect_turns(trip, g, params);
        CHECK(events.size() == 1);
    }
    SUBCASE("gate audit matches detection") {
        Trip trip = turn_trip("audit", 90.0, 10, 30);
        auto events = detect_turns(trip, g, params);
        REQUIRE(events.size() == 1);
        TurnEvent tweaked = events[0];
        tweaked.net_yaw = 20.0;
        CHECK_FALSE(passes_gates(tweaked, params));
        tweaked = events[0];
        tweaked.mean_speed = 1.0;
        CHECK_FALSE(passes_gates(tweaked, params));
    }
}

TEST_CASE("yaw bias removal") {
    RoadGraph g = cross_graph();
    Trip trip = turn_trip("bias", 90.0, 10, 30);
    // Constant gyro bias plus a stationary tail the estimator can see.
    for (auto& w : trip.yaw_rate) w += 2.0;
    for (size_t i = trip.size() - 40; i < trip.size(); ++i) trip.speed[i] = 0.1;
    for (size_t i = 0; i < 40; ++i) trip.speed[i] = 0.1;

    TurnDetectParams params;
    // 161-sample window picks up 161 * 0.1s * 2 deg/s = 32.2 deg of spurious yaw.
    params.remove_yaw_bias = false;
    auto biased = detect_turns(trip, g, params);
    params.remove_yaw_bias = true;
    auto debiased = detect_turns(trip, g, params);
    REQUIRE(debiased.size() == 1);
    CHECK(near(debiased[0].net_yaw, 90.0, 0.1));
    if (!biased.empty()) CHECK(std::abs(biased[0].net_yaw - 90.0) > 10.0);
}

TEST_CASE("detect_turns_many is job-count invariant") {
    RoadGraph g = cross_graph();
    TurnDetectParams params;
    std::vector<Trip> trips;
    trips.push_back(turn_trip("m1", 90.0, 10, 30));
    trips.push_back(turn_trip("m2", -90.0, 10, 40));
    trips.push_back(turn_trip("m3", 0.0, 10, 20));
    trips.push_back(turn_trip("m4", 90.0, 20, 30, 10.0, 270.0));
    trips.push_back(turn_trip("m5", 90.0, 10, 30, 1.0));
    trips.push_back(turn_trip("m6", -60.0, 30, 20, 10.0, 180.0));

    auto one = detect_turns_many(trips, g, params, 1);
    auto four = detect_turns_many(trips, g, params, 4);
    auto eight = detect_turns_many(trips, g, params, 8);

    auto csv_one = serialize_events(one);
    auto csv_four = serialize_events(four);
    auto csv_eight = serialize_events(eight);
    CHECK(csv_one.rows == csv_four.rows);
    CHECK(csv_one.rows == csv_eight.rows);
    CHECK(one.size() == 4);
}

TEST_CASE("event csv round-trip is exact") {
    RoadGraph g = cross_graph();
    Trip trip = turn_trip("csv", 90.0, 10, 30);
    auto events = detect_turns(trip, g, TurnDetectParams{});
    REQUIRE_FALSE(events.empty());

    TempDir dir;
    std::string path = (dir.path / "events.csv").string();
    write_events_file(path, events);
    auto back = load_events_file(path);
    REQUIRE(back.size() == events.size());
    for (size_t i = 0; i < events.size(); ++i) {
        CHECK(back[i].trip_id == events[i].trip_id);
        CHECK(back[i].start_idx == events[i].start_idx);
        CHECK(back[i].end_idx == events[i].end_idx);
        CHECK(back[i].direction == events[i].direction);
        CHECK(back[i].net_yaw == events[i].net_yaw);
        CHECK(back[i].gps_heading_change == events[i].gps_heading_change);
        CHECK(back[i].segment_angle == events[i].segment_angle);
        CHECK(back[i].junction_node == events[i].junction_node);
        CHECK(back[i].max_abs_lat_accel == events[i].max_abs_lat_accel);
        CHECK(back[i].mean_speed == events[i].mean_speed);
        CHECK(back[i].duration == events[i].duration);
    }
}

TEST_CASE("detector params from config") {
    Config cfg = Config::parse(
        "[detector]\n"
        "window_half_width_s = 6\n"
        "yaw_min_deg = 50\n"
        "remove_yaw_bias = true\n",
        "mem");
    TurnDetectParams p = TurnDetectParams::from_config(cfg);
    CHECK(p.window_half_width_s == 6.0);
    CHECK(p.yaw_min_deg == 50.0);
    CHECK(p.yaw_max_deg == 135.0);
    CHECK(p.remove_yaw_bias);

    Config bad = Config::parse("[detector]\nyaw_min_deg = 140\n", "mem");
    CHECK(error_code([&] { TurnDetectParams::from_config(bad); }) == "BadYawBand");
    Config unknown = Config::parse("[detector]\nwot = 1\n", "mem");
    CHECK(error_code([&] { TurnDetectParams::from_config(unknown); }) == "UnknownKey");
}
