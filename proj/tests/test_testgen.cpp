#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "scenfuse/common.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/numfmt.hpp"
#include "scenfuse/params.hpp"
#include "scenfuse/rng.hpp"
#include "scenfuse/testgen.hpp"
#include "scenfuse/xmlmini.hpp"

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
               ("scenfuse_testgen_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ParameterBinding range_binding(const std::string& name, double lo, double hi) {
    ParameterBinding binding;
    binding.name = name;
    binding.units = "m/s";
    binding.range = {{lo, hi}};
    return binding;
}

ParameterBinding dist_binding(const std::string& name, ParameterDistribution dist) {
    ParameterBinding binding;
    binding.name = name;
    binding.units = dist.units;
    binding.distribution = std::move(dist);
    return binding;
}

Actor make_actor(ActorRole role, const std::string& speed_parameter, int leg, ActorAction action) {
    Actor actor;
    actor.role = role;
    actor.speed_parameter = speed_parameter;
    actor.approach_leg = leg;
    actor.action = action;
    return actor;
}

LogicalScenario turn_logical(std::vector<ParameterBinding> parameters,
                             std::map<std::string, std::vector<double>> observations = {}) {
    Actor ego = make_actor(ActorRole::Ego, parameters[0].name, 0, ActorAction::TurnLeft);
    return build_logical("ltap_signal", StaticFeatures{}, {std::move(ego)}, std::move(parameters),
                         std::move(observations));
}

std::vector<double> sampled_column(const std::vector<ConcreteScenario>& list, std::string_view name) {
    std::vector<double> out;
    out.reserve(list.size());
    for (const auto& concrete : list) out.push_back(concrete.value(name));
    return out;
}

// Two-sample Kolmogorov-Smirnov statistic: max gap between the empirical CDFs.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0;
    size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    return d;
}

// Average ranks, 1-based, ties shared.
std::vector<double> ranks_of(const std::vector<double>& values) {
    std::vector<size_t> order(values.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks_of(x), ranks_of(y));
}

size_t locate(const std::vector<double>& edges, double v) {
    size_t hi = static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    if (hi >= edges.size()) return edges.size() - 2;
    if (hi == 0) return 0;
    return hi - 1;
}

}  // namespace

TEST_CASE("xml writer layout") {
    XmlNode root("Doc");
    root.set("title", "a<b & \"q\"");
    auto& item = root.add_child("Item");
    item.set("id", "1");
    item.text = "x > y & z";
    root.add_child("Empty");

    CHECK(write_xml(root) ==
          "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
          "<Doc title=\"a&lt;b &amp; &quot;q&quot;\">\n"
          "  <Item id=\"1\">x &gt; y &amp; z</Item>\n"
          "  <Empty/>\n"
          "</Doc>\n");

    SUBCASE("round trip through the parser") {
        XmlNode back = parse_xml(write_xml(root), "doc");
        CHECK(back.name == "Doc");
        CHECK(back.require_attr("title") == "a<b & \"q\"");
        REQUIRE(back.children.size() == 2);
        CHECK(back.children[0].require_attr("id") == "1");
        CHECK(back.children[0].text == "x > y & z");
        CHECK(back.children[1].name == "Empty");
        CHECK(back.children[1].children.empty());
        CHECK(back.children[1].text.empty());
        CHECK(write_xml(back) == write_xml(root));
    }
    SUBCASE("node lookups") {
        // add_child may have reallocated; re-fetch the first child.
        const XmlNode& first = root.children[0];
        CHECK(root.find("Missing") == nullptr);
        CHECK(root.find("Item") == &first);
        CHECK(root.find_all("Item").size() == 1);
        CHECK(error_code([&] { root.require("Missing"); }) == "MissingElement");
        CHECK(error_code([&] { first.require_attr("missing"); }) == "MissingAttribute");
        CHECK(first.attr("missing") == nullptr);
    }
}

TEST_CASE("xml parser accepts the documented subset") {
    SUBCASE("declaration and comments are skipped") {
        XmlNode doc = parse_xml(
            "<?xml version=\"1.0\"?>\n<!-- head -->\n<A>\n  <!-- inner -->\n  <B/>\n  <!-- tail -->\n</A>\n",
            "t");
        CHECK(doc.name == "A");
        REQUIRE(doc.children.size() == 1);
        CHECK(doc.children[0].name == "B");
    }
    SUBCASE("single quotes and entities") {
        XmlNode doc = parse_xml("<A x='1' y=\"&amp;&apos;&lt;\">&gt;text&quot;</A>", "t");
        CHECK(doc.require_attr("x") == "1");
        CHECK(doc.require_attr("y") == "&'<");
        CHECK(doc.text == ">text\"");
    }
    SUBCASE("interstitial whitespace between children is not text") {
        XmlNode doc = parse_xml("<A>\n  <B/>\n</A>", "t");
        CHECK(doc.text.empty());
        CHECK(doc.children.size() == 1);
    }
    SUBCASE("malformed documents") {
        auto parse_fail = [](std::string_view text) {
            return error_code([&] { parse_xml(text, "t"); });
        };
        CHECK(parse_fail("") == "BadXml");
        CHECK(parse_fail("plain text") == "BadXml");
        CHECK(parse_fail("<A>") == "BadXml");
        CHECK(parse_fail("<A><B></A>") == "BadXml");
        CHECK(parse_fail("<A/><B/>") == "BadXml");
        CHECK(parse_fail("<A>&bogus;</A>") == "BadXml");
        CHECK(parse_fail("<A x=1/>") == "BadXml");
        CHECK(parse_fail("<A x=\"1/>") == "BadXml");
        CHECK(parse_fail("<A><!-- open </A>") == "BadXml");
        CHECK(parse_fail("<?xml version=\"1.0\"") == "BadXml");
    }
    SUBCASE("file io") {
        TempDir dir;
        XmlNode root("R");
        root.set("k", "v");
        write_xml_file(dir.file("doc.xml"), root);
        XmlNode back = parse_xml_file(dir.file("doc.xml"));
        CHECK(back.require_attr("k") == "v");
        CHECK(error_code([&] { parse_xml_file(dir.file("missing.xml")); }) == "FileNotFound");
    }
}

TEST_CASE("enum names round trip") {
    for (auto value : {IntersectionControl::Signal, IntersectionControl::Stop, IntersectionControl::Yield,
                       IntersectionControl::Uncontrolled}) {
        CHECK(intersection_control_from_string(to_string(value)) == value);
    }
    for (auto value : {ActorRole::Ego, ActorRole::PrincipalOther}) {
        CHECK(actor_role_from_string(to_string(value)) == value);
    }
    for (auto value : {ActorAction::TurnLeft, ActorAction::TurnRight, ActorAction::Straight}) {
        CHECK(actor_action_from_string(to_string(value)) == value);
    }
    for (auto value : {TriggerType::AtDistance, TriggerType::AtTime}) {
        CHECK(trigger_type_from_string(to_string(value)) == value);
    }
    for (auto value : {SamplingStrategy::IndependentMarginal, SamplingStrategy::JointEmpirical,
                       SamplingStrategy::StratifiedMarginal}) {
        CHECK(sampling_strategy_from_string(to_string(value)) == value);
    }
    CHECK(to_string(SamplingStrategy::JointEmpirical) == "JointEmpirical");
    CHECK(error_code([] { sampling_strategy_from_string("Bogus"); }) == "BadEnumValue");
    CHECK(error_code([] { actor_role_from_string(""); }) == "BadEnumValue");
}

TEST_CASE("logical scenario validation") {
    auto speed = [] { return range_binding("speed", 5.0, 25.0); };

    SUBCASE("valid scenario with auto-named actors") {
        auto logical = build_logical(
            "ltap_signal", StaticFeatures{},
            {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft),
             make_actor(ActorRole::PrincipalOther, "speed", 2, ActorAction::Straight),
             make_actor(ActorRole::PrincipalOther, "speed", 1, ActorAction::Straight)},
            {speed()});
        CHECK(logical.actors[0].name == "ego");
        CHECK(logical.actors[1].name == "other1");
        CHECK(logical.actors[2].name == "other2");
        CHECK(logical.name == "ltap_signal");
    }
    SUBCASE("explicit names survive") {
        Actor ego = make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft);
        ego.name = "subject";
        auto logical = build_logical("s", StaticFeatures{}, {ego}, {speed()});
        CHECK(logical.actors[0].name == "subject");
    }
    SUBCASE("actor set problems") {
        CHECK(error_code([&] { build_logical("s", StaticFeatures{}, {}, {speed()}); }) == "NoEgoActor");
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::PrincipalOther, "speed", 0, ActorAction::Straight)},
                                {speed()});
              }) == "NoEgoActor");
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft),
                                 make_actor(ActorRole::Ego, "speed", 1, ActorAction::Straight)},
                                {speed()});
              }) == "DuplicateEgo");
        Actor a = make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft);
        a.name = "alpha";
        Actor b = make_actor(ActorRole::PrincipalOther, "speed", 1, ActorAction::Straight);
        b.name = "alpha";
        CHECK(error_code([&] { build_logical("s", StaticFeatures{}, {a, b}, {speed()}); }) ==
              "DuplicateActor");
    }
    SUBCASE("parameter binding problems") {
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "missing", 0, ActorAction::TurnLeft)}, {speed()});
              }) == "UnboundParameter");
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "", 0, ActorAction::TurnLeft)}, {speed()});
              }) == "UnboundParameter");

        ParameterBinding neither;
        neither.name = "gap";
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft)},
                                {speed(), neither});
              }) == "UnboundParameter");

        ParameterBinding both = range_binding("gap", 1.0, 2.0);
        both.distribution = fit_histogram({1.0, 2.0, 3.0}, 2, "gap", "s");
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft)},
                                {speed(), both});
              }) == "UnboundParameter");

        ParameterBinding empty_dist;
        empty_dist.name = "gap";
        empty_dist.distribution = ParameterDistribution{};
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft)},
                                {speed(), empty_dist});
              }) == "UnboundParameter");

        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft)},
                                {speed(), range_binding("gap", 5.0, 2.0)});
              }) == "UnboundParameter");
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft)},
                                {speed(), speed()});
              }) == "DuplicateParameter");
    }
    SUBCASE("geometry problems") {
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 4, ActorAction::TurnLeft)}, {speed()});
              }) == "BadLeg");
        CHECK(error_code([&] {
                  build_logical("s", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", -1, ActorAction::TurnLeft)}, {speed()});
              }) == "BadLeg");
        StaticFeatures two_legs;
        two_legs.leg_count = 2;
        CHECK(error_code([&] {
                  build_logical("s", two_legs, {make_actor(ActorRole::Ego, "speed", 0, ActorAction::Straight)},
                                {speed()});
              }) == "UnsupportedTopology");
        StaticFeatures no_lanes;
        no_lanes.approach_lane_count = 0;
        CHECK(error_code([&] {
                  build_logical("s", no_lanes, {make_actor(ActorRole::Ego, "speed", 0, ActorAction::Straight)},
                                {speed()});
              }) == "BadLaneCount");
        StaticFeatures flat;
        flat.leg_length_m = 0.0;
        CHECK(error_code([&] {
                  build_logical("s", flat, {make_actor(ActorRole::Ego, "speed", 0, ActorAction::Straight)},
                                {speed()});
              }) == "BadLegLength");
        Actor hair_trigger = make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft);
        hair_trigger.trigger_value = 0.0;
        CHECK(error_code([&] { build_logical("s", StaticFeatures{}, {hair_trigger}, {speed()}); }) ==
              "BadTrigger");
        CHECK(error_code([&] {
                  build_logical("", StaticFeatures{},
                                {make_actor(ActorRole::Ego, "speed", 0, ActorAction::Straight)}, {speed()});
              }) == "BadScenarioName");
    }
}

TEST_CASE("delta distributions sample to the representative value") {
    auto constant = fit_histogram(std::vector<double>(3, 8.33), 4, "speed", "m/s");
    REQUIRE(constant.counts.size() == 1);

    SUBCASE("fitted degenerate histogram") {
        for (auto strategy : {SamplingStrategy::IndependentMarginal, SamplingStrategy::StratifiedMarginal}) {
            auto logical = turn_logical({dist_binding("speed", constant)});
            auto concretes = sample_concrete(logical, 25, strategy, 2024);
            REQUIRE(concretes.size() == 25);
            for (const auto& concrete : concretes) CHECK(concrete.value("speed") == 8.33);
        }
    }
    SUBCASE("joint resampling of a constant column") {
        auto logical = turn_logical({dist_binding("speed", constant)},
                                    {{"speed", std::vector<double>(3, 8.33)}});
        auto concretes = sample_concrete(logical, 25, SamplingStrategy::JointEmpirical, 2024);
        for (const auto& concrete : concretes) CHECK(concrete.value("speed") == 8.33);
    }
    SUBCASE("single wide bin uses the observed support midpoint") {
        ParameterDistribution wide;
        wide.variable = "speed";
        wide.units = "m/s";
        wide.n = 7;
        wide.bin_edges = {5.0, 10.0};
        wide.counts = {7};
        wide.min_value = 6.0;
        wide.max_value = 9.0;
        auto logical = turn_logical({dist_binding("speed", wide)});
        auto concretes = sample_concrete(logical, 10, SamplingStrategy::IndependentMarginal, 1);
        for (const auto& concrete : concretes) CHECK(concrete.value("speed") == 7.5);
    }
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    Rng rng(4242);
    std::vector<double> source;
    source.reserve(2000);
    for (int i = 0; i < 2000; ++i) source.push_back(rng.normal(15.0, 3.0));
    auto dist = fit_histogram(source, 20, "speed", "m/s");

    auto logical = turn_logical({dist_binding("speed", dist), range_binding("gap", 1.0, 6.0)});
    for (auto strategy : {SamplingStrategy::IndependentMarginal, SamplingStrategy::StratifiedMarginal}) {
        auto first = sample_concrete(logical, 50, strategy, 7);
        auto second = sample_concrete(logical, 50, strategy, 7);
        REQUIRE(first.size() == second.size());
        for (size_t i = 0; i < first.size(); ++i) {
            CHECK(first[i].values == second[i].values);
            CHECK(first[i].index == static_cast<std::int64_t>(i));
            CHECK(first[i].seed == 7);
            CHECK(first[i].logical_name == "ltap_signal");
        }
        auto other_seed = sample_concrete(logical, 50, strategy, 8);
        bool any_difference = false;
        for (size_t i = 0; i < first.size(); ++i) {
            if (first[i].values != other_seed[i].values) any_difference = true;
        }
        CHECK(any_difference);
    }
}

TEST_CASE("marginal sampling tracks the source distribution") {
    Rng rng(4242);
    std::vector<double> source;
    source.reserve(20000);
    for (int i = 0; i < 20000; ++i) source.push_back(rng.normal(15.0, 3.0));
    auto dist = fit_histogram(source, 40, "speed", "m/s");
    auto logical = turn_logical({dist_binding("speed", dist)});

    SUBCASE("independent marginal") {
        auto concretes = sample_concrete(logical, 10000, SamplingStrategy::IndependentMarginal, 99);
        auto samples = sampled_column(concretes, "speed");
        CHECK(ks_statistic(samples, source) <= 0.02);
        auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
        CHECK(*lo >= dist.min_value);
        CHECK(*hi <= dist.max_value);
    }
    SUBCASE("stratified marginal") {
        auto concretes = sample_concrete(logical, 10000, SamplingStrategy::StratifiedMarginal, 99);
        auto samples = sampled_column(concretes, "speed");
        CHECK(ks_statistic(samples, source) <= 0.02);
        auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
        CHECK(*lo >= dist.min_value);
        CHECK(*hi <= dist.max_value);

        // Largest-remainder allocation puts each bin within one draw of its quota.
        std::int64_t total = std::accumulate(dist.counts.begin(), dist.counts.end(), std::int64_t{0});
        std::vector<std::int64_t> per_bin(dist.counts.size(), 0);
        for (double v : samples) ++per_bin[locate(dist.bin_edges, v)];
        for (size_t b = 0; b < per_bin.size(); ++b) {
            double quota = 10000.0 * static_cast<double>(dist.counts[b]) / static_cast<double>(total);
            CHECK(near(static_cast<double>(per_bin[b]), quota, 1.0 + 1e-9));
        }
    }
}

TEST_CASE("range bindings sample uniformly") {
    auto logical = turn_logical({range_binding("speed", 5.0, 25.0)});
    auto concretes = sample_concrete(logical, 2000, SamplingStrategy::IndependentMarginal, 11);
    auto samples = sampled_column(concretes, "speed");
    double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / 2000.0;
    CHECK(near(mean, 15.0, 0.5));
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    CHECK(*lo >= 5.0);
    CHECK(*hi < 25.0);

    SUBCASE("collapsed range is constant under every seed") {
        auto fixed = turn_logical({range_binding("speed", 8.33, 8.33)});
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            for (const auto& concrete :
                 sample_concrete(fixed, 5, SamplingStrategy::StratifiedMarginal, seed)) {
                CHECK(concrete.value("speed") == 8.33);
            }
        }
    }
}

TEST_CASE("joint resampling preserves observed tuples") {
    Rng rng(606);
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < 4000; ++i) {
        double x = rng.uniform(5.0, 25.0);
        xs.push_back(x);
        ys.push_back(0.3 * x + rng.normal(0.0, 1.5));
    }
    auto [x_lo, x_hi] = std::minmax_element(xs.begin(), xs.end());
    auto [y_lo, y_hi] = std::minmax_element(ys.begin(), ys.end());
    auto logical = turn_logical(
        {range_binding("speed", *x_lo, *x_hi), range_binding("lat_accel", *y_lo, *y_hi)},
        {{"speed", xs}, {"lat_accel", ys}});

    auto concretes = sample_concrete(logical, 10000, SamplingStrategy::JointEmpirical, 77);
    auto sx = sampled_column(concretes, "speed");
    auto sy = sampled_column(concretes, "lat_accel");

    std::set<std::pair<double, double>> source_pairs;
    for (size_t i = 0; i < xs.size(); ++i) source_pairs.insert({xs[i], ys[i]});
    for (size_t i = 0; i < sx.size(); ++i) {
        REQUIRE(source_pairs.count({sx[i], sy[i]}) == 1);
    }

    CHECK(near(spearman(sx, sy), spearman(xs, ys), 0.05));

    SUBCASE("incompatible observation columns") {
        auto missing = turn_logical(
            {range_binding("speed", 5.0, 25.0), range_binding("lat_accel", -5.0, 5.0)}, {{"speed", xs}});
        CHECK(error_code([&] {
                  sample_concrete(missing, 10, SamplingStrategy::JointEmpirical, 1);
              }) == "IncompatibleStrategy");

        auto ragged = turn_logical(
            {range_binding("speed", 5.0, 25.0), range_binding("lat_accel", -5.0, 5.0)},
            {{"speed", xs}, {"lat_accel", std::vector<double>(xs.size() - 1, 0.0)}});
        CHECK(error_code([&] {
                  sample_concrete(ragged, 10, SamplingStrategy::JointEmpirical, 1);
              }) == "IncompatibleStrategy");

        auto hollow = turn_logical({range_binding("speed", 5.0, 25.0)}, {{"speed", {}}});
        CHECK(error_code([&] {
                  sample_concrete(hollow, 10, SamplingStrategy::JointEmpirical, 1);
              }) == "IncompatibleStrategy");

        // The same logical stays valid for marginal strategies.
        CHECK(sample_concrete(missing, 10, SamplingStrategy::IndependentMarginal, 1).size() == 10);
    }
}

TEST_CASE("sampling argument validation") {
    auto logical = turn_logical({range_binding("speed", 5.0, 25.0)});
    CHECK(error_code([&] {
              sample_concrete(logical, 0, SamplingStrategy::IndependentMarginal, 1);
          }) == "BadSampleCount");
    LogicalScenario bare;
    bare.name = "bare";
    CHECK(error_code([&] {
              sample_concrete(bare, 5, SamplingStrategy::IndependentMarginal, 1);
          }) == "UnboundParameter");
    ConcreteScenario concrete;
    concrete.values = {{"speed", 1.0}};
    CHECK(concrete.value("speed") == 1.0);
    CHECK(error_code([&] { concrete.value("gap"); }) == "UnboundParameter");
}

TEST_CASE("scenario document structure") {
    auto logical = build_logical(
        "ltap_signal", StaticFeatures{},
        {make_actor(ActorRole::Ego, "ego_speed", 0, ActorAction::TurnLeft),
         make_actor(ActorRole::PrincipalOther, "other_speed", 2, ActorAction::Straight)},
        {range_binding("ego_speed", 8.33, 8.33), range_binding("other_speed", 13.9, 13.9)});
    auto concretes = sample_concrete(logical, 1, SamplingStrategy::IndependentMarginal, 5);
    std::string text = emit_scenario(logical, concretes[0]);

    CHECK(text.rfind("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n", 0) == 0);
    CHECK(text.find("value=\"8.33\"") != std::string::npos);
    CHECK(text.find("value=\"13.9\"") != std::string::npos);

    XmlNode doc = parse_xml(text, "scenario");
    CHECK(doc.name == "Scenario");
    CHECK(doc.require_attr("logical") == "ltap_signal");
    CHECK(doc.require_attr("seed") == "5");
    CHECK(doc.require_attr("index") == "0");

    const auto& declarations = doc.require("ParameterDeclarations");
    REQUIRE(declarations.children.size() == 2);
    CHECK(declarations.children[0].require_attr("name") == "ego_speed");
    CHECK(declarations.children[0].require_attr("units") == "m/s");
    CHECK(declarations.children[0].require_attr("value") == "8.33");

    const auto& network = doc.require("RoadNetwork");
    CHECK(network.require_attr("road") == "ltap_signal.road.xml");
    CHECK(network.require_attr("legs") == "4");
    CHECK(network.require_attr("lanes") == "1");
    CHECK(network.require_attr("control") == "Signal");
    CHECK(network.require_attr("lighting") == "Daylight");

    const auto& entities = doc.require("Entities");
    REQUIRE(entities.children.size() == 2);
    CHECK(entities.children[0].require_attr("name") == "ego");
    CHECK(entities.children[0].require_attr("role") == "Ego");
    CHECK(entities.children[1].require_attr("name") == "other1");
    CHECK(entities.children[1].require_attr("role") == "PrincipalOther");

    const auto& story = doc.require("Story");
    REQUIRE(story.children.size() == 2);
    CHECK(story.children[0].require_attr("actor") == "ego");
    CHECK(story.children[0].require_attr("action") == "TurnLeft");
    CHECK(story.children[0].require("Init").require_attr("speed") == "8.33");
    CHECK(story.children[0].require("Init").require_attr("leg") == "leg0");
    CHECK(story.children[0].require("Trigger").require_attr("type") == "AtDistance");
    CHECK(story.children[0].require("Trigger").require_attr("value") == "50");
    CHECK(story.children[1].require("Init").require_attr("leg") == "leg2");
}

TEST_CASE("emitted scenarios re-parse bit identically") {
    Rng rng(4242);
    std::vector<double> source;
    for (int i = 0; i < 5000; ++i) source.push_back(rng.normal(12.0, 2.5));
    auto logical = turn_logical(
        {dist_binding("speed", fit_histogram(source, 30, "speed", "m/s")), range_binding("gap", 0.5, 6.0)});
    auto concretes = sample_concrete(logical, 100, SamplingStrategy::IndependentMarginal, 31);

    for (const auto& concrete : concretes) {
        ParsedScenario parsed = parse_scenario(emit_scenario(logical, concrete), "emitted");
        CHECK(parsed.logical_name == concrete.logical_name);
        CHECK(parsed.seed == concrete.seed);
        CHECK(parsed.index == concrete.index);
        REQUIRE(parsed.values.size() == concrete.values.size());
        for (size_t i = 0; i < parsed.values.size(); ++i) {
            CHECK(parsed.values[i].first == concrete.values[i].first);
            CHECK(parsed.values[i].second == concrete.values[i].second);
        }
    }

    SUBCASE("foreign documents are rejected") {
        CHECK(error_code([&] { parse_scenario(emit_road(logical), "road"); }) == "BadXml");
        CHECK(error_code([] { parse_scenario("<Scenario/>", "bare"); }) == "MissingAttribute");
    }
}

TEST_CASE("road documents enumerate junction connections") {
    auto logical = turn_logical({range_binding("speed", 5.0, 25.0)});

    SUBCASE("four legs") {
        XmlNode doc = parse_xml(emit_road(logical), "road");
        CHECK(doc.name == "Road");
        CHECK(doc.require_attr("name") == "ltap_signal");
        auto legs = doc.find_all("Leg");
        REQUIRE(legs.size() == 4);
        CHECK(legs[0]->require_attr("heading") == "0");
        CHECK(legs[1]->require_attr("heading") == "90");
        CHECK(legs[2]->require_attr("heading") == "180");
        CHECK(legs[3]->require_attr("heading") == "270");
        CHECK(legs[0]->require_attr("length") == "150");

        auto connections = doc.require("Junction").find_all("Connection");
        CHECK(connections.size() == 12);
        int straights = 0;
        int lefts = 0;
        int rights = 0;
        for (const XmlNode* conn : connections) {
            CHECK(conn->require_attr("from") != conn->require_attr("to"));
            std::string maneuver = conn->require_attr("maneuver");
            if (maneuver == "Straight") ++straights;
            if (maneuver == "TurnLeft") ++lefts;
            if (maneuver == "TurnRight") ++rights;
            if (conn->require_attr("from") == "leg0" && conn->require_attr("to") == "leg1") {
                CHECK(maneuver == "TurnLeft");
            }
            if (conn->require_attr("from") == "leg0" && conn->require_attr("to") == "leg2") {
                CHECK(maneuver == "Straight");
            }
            if (conn->require_attr("from") == "leg0" && conn->require_attr("to") == "leg3") {
                CHECK(maneuver == "TurnRight");
            }
            if (conn->require_attr("from") == "leg1" && conn->require_attr("to") == "leg0") {
                CHECK(maneuver == "TurnRight");
            }
        }
        CHECK(straights == 4);
        CHECK(lefts == 4);
        CHECK(rights == 4);
    }
    SUBCASE("three legs") {
        StaticFeatures tee;
        tee.leg_count = 3;
        auto three = build_logical("tee", tee,
                                   {make_actor(ActorRole::Ego, "speed", 0, ActorAction::TurnLeft)},
                                   {range_binding("speed", 5.0, 25.0)});
        XmlNode doc = parse_xml(emit_road(three), "road");
        REQUIRE(doc.find_all("Leg").size() == 3);
        auto connections = doc.require("Junction").find_all("Connection");
        CHECK(connections.size() == 6);
        for (const XmlNode* conn : connections) {
            CHECK(conn->require_attr("maneuver") != "Straight");
        }
    }
    SUBCASE("five legs") {
        StaticFeatures star;
        star.leg_count = 5;
        auto five = build_logical("star", star,
                                  {make_actor(ActorRole::Ego, "speed", 0, ActorAction::Straight)},
                                  {range_binding("speed", 5.0, 25.0)});
        CHECK(error_code([&] { emit_road(five); }) == "UnsupportedTopology");
    }
}

TEST_CASE("batch emission") {
    TempDir dir;
    auto logical = turn_logical({range_binding("speed", 5.0, 25.0), range_binding("gap", 0.5, 6.0)});
    auto concretes = sample_concrete(logical, 100, SamplingStrategy::IndependentMarginal, 12);
    auto result = emit_batch(logical, concretes, dir.path.string());

    REQUIRE(result.scenario_files.size() == 100);
    std::set<std::string> distinct(result.scenario_files.begin(), result.scenario_files.end());
    CHECK(distinct.size() == 100);
    CHECK(result.road_file == dir.file("ltap_signal.road.xml"));
    CHECK(result.scenario_files[0] ==
          (dir.path / "ltap_signal" / "12" / "0.scenario.xml").string());
    CHECK(result.scenario_files[99] ==
          (dir.path / "ltap_signal" / "12" / "99.scenario.xml").string());
    CHECK(slurp(result.road_file) == emit_road(logical));
    CHECK(slurp(result.scenario_files[7]) == emit_scenario(logical, concretes[7]));

    CsvTable manifest = read_csv_file(result.manifest_file);
    CHECK(manifest.header == std::vector<std::string>{"file", "speed", "gap"});
    REQUIRE(manifest.rows.size() == 100);
    CHECK(manifest.rows[0][0] == "0.scenario.xml");
    CHECK(manifest.rows[42][0] == "42.scenario.xml");
    CHECK(manifest.rows[42][1] == format_double(concretes[42].value("speed")));
    CHECK(manifest.rows[42][2] == format_double(concretes[42].value("gap")));

    SUBCASE("a rerun is byte identical") {
        std::map<std::string, std::string> baseline;
        baseline[result.road_file] = slurp(result.road_file);
        baseline[result.manifest_file] = slurp(result.manifest_file);
        for (const auto& file : result.scenario_files) baseline[file] = slurp(file);

        std::filesystem::remove_all(dir.path);
        std::filesystem::create_directories(dir.path);
        auto again = emit_batch(logical, sample_concrete(logical, 100, SamplingStrategy::IndependentMarginal, 12),
                                dir.path.string());
        CHECK(again.road_file == result.road_file);
        CHECK(again.scenario_files == result.scenario_files);
        for (const auto& [file, content] : baseline) {
            CHECK(slurp(file) == content);
        }
    }
    SUBCASE("batch validation") {
        CHECK(error_code([&] { emit_batch(logical, {}, dir.path.string()); }) == "BadSampleCount");
        auto mixed = concretes;
        mixed[5].seed = 13;
        CHECK(error_code([&] { emit_batch(logical, mixed, dir.path.string()); }) == "BadSampleCount");
        auto foreign = concretes;
        foreign[2].logical_name = "someone_else";
        CHECK(error_code([&] { emit_batch(logical, foreign, dir.path.string()); }) == "BadScenarioName");
    }
}

TEST_CASE("logical scenario files load") {
    TempDir dir;

    Rng rng(31);
    std::vector<double> speeds;
    for (int i = 0; i < 500; ++i) speeds.push_back(12.0 + 2.0 * rng.normal());
    fit_histogram(speeds, 8, "approach_speed", "m/s").save(dir.file("speed.dist.ini"));

    std::ofstream obs(dir.file("obs.csv"));
    obs << "approach_speed,gap\n";
    for (int i = 0; i < 40; ++i) obs << format_double(10.0 + 0.1 * i) << "," << format_double(2.0 + 0.05 * i) << "\n";
    obs.close();

    std::ofstream out(dir.file("logical.ini"));
    out << "[scenario]\nname = left_turns\nlegs = 3\nlanes = 2\ncontrol = Stop\n"
        << "lighting = Dark\nleg_length_m = 120\n"
        << "[actor.ego]\nrole = Ego\nleg = 0\naction = TurnLeft\nspeed = approach_speed\n"
        << "trigger_type = AtTime\ntrigger_value = 4\n"
        << "[actor.lead]\nleg = 2\nspeed = gap\n"
        << "[parameter.approach_speed]\nunits = m/s\ndistribution = speed.dist.ini\n"
        << "[parameter.gap]\nunits = s\nrange = 2, 8\n"
        << "[observations]\nfile = obs.csv\n";
    out.close();

    LogicalScenario logical = load_logical(dir.file("logical.ini"));
    CHECK(logical.name == "left_turns");
    CHECK(logical.static_features.leg_count == 3);
    CHECK(logical.static_features.approach_lane_count == 2);
    CHECK(logical.static_features.control == IntersectionControl::Stop);
    CHECK(logical.static_features.lighting == "Dark");
    CHECK(logical.static_features.leg_length_m == 120.0);
    REQUIRE(logical.actors.size() == 2);
    CHECK(logical.actors[0].name == "ego");
    CHECK(logical.actors[0].role == ActorRole::Ego);
    CHECK(logical.actors[0].action == ActorAction::TurnLeft);
    CHECK(logical.actors[0].trigger_type == TriggerType::AtTime);
    CHECK(logical.actors[0].trigger_value == 4.0);
    CHECK(logical.actors[1].name == "lead");
    CHECK(logical.actors[1].role == ActorRole::PrincipalOther);
    CHECK(logical.actors[1].action == ActorAction::Straight);
    CHECK(logical.actors[1].trigger_value == 50.0);
    REQUIRE(logical.parameters.size() == 2);
    CHECK(logical.parameters[0].name == "approach_speed");
    CHECK(logical.parameters[0].distribution.has_value());
    CHECK(logical.parameters[0].distribution->n == 500);
    CHECK(logical.parameters[1].range == std::pair<double, double>{2.0, 8.0});
    REQUIRE(logical.observations.count("gap") == 1);
    CHECK(logical.observations.at("gap").size() == 40);

    // The loaded scenario drives every sampling strategy.
    CHECK(sample_concrete(logical, 5, SamplingStrategy::IndependentMarginal, 3).size() == 5);
    CHECK(sample_concrete(logical, 5, SamplingStrategy::JointEmpirical, 3).size() == 5);

    auto write_variant = [&](const std::string& name, const std::string& body) {
        std::ofstream f(dir.file(name));
        f << body;
    };
    write_variant("stray.ini", "[scenario]\nname = x\n[weather]\nrain = yes\n");
    CHECK(error_code([&] { load_logical(dir.file("stray.ini")); }) == "UnknownSection");
    write_variant("badrange.ini",
                  "[scenario]\nname = x\n[actor.ego]\nrole = Ego\nspeed = v\n"
                  "[parameter.v]\nrange = 1, 2, 3\n");
    CHECK(error_code([&] { load_logical(dir.file("badrange.ini")); }) == "BadRange");
    write_variant("nospeed.ini", "[scenario]\nname = x\n[actor.ego]\nrole = Ego\n");
    CHECK(error_code([&] { load_logical(dir.file("nospeed.ini")); }) == "MissingKey");
    write_variant("noname.ini", "[scenario]\nlegs = 4\n");
    CHECK(error_code([&] { load_logical(dir.file("noname.ini")); }) == "MissingKey");
    CHECK(error_code([&] { load_logical(dir.file("absent.ini")); }) == "FileNotFound");
}
