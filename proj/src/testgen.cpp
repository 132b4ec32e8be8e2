#include "scenfuse/testgen.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>

#include "scenfuse/angles.hpp"
#include "scenfuse/common.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/numfmt.hpp"
#include "scenfuse/rng.hpp"

namespace scenfuse {

namespace {

template <typename E, std::size_t N>
std::string_view enum_text(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [e, name] : table) {
        if (e == value) return name;
    }
    return table.back().second;
}

template <typename E, std::size_t N>
E enum_from(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view text,
            std::string_view what) {
    for (const auto& [e, name] : table) {
        if (name == text) return e;
    }
    fail_parse("BadEnumValue", "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::pair<IntersectionControl, std::string_view>, 4> kControlNames = {{
    {IntersectionControl::Signal, "Signal"},
    {IntersectionControl::Stop, "Stop"},
    {IntersectionControl::Yield, "Yield"},
    {IntersectionControl::Uncontrolled, "Uncontrolled"},
}};

constexpr std::array<std::pair<ActorRole, std::string_view>, 2> kRoleNames = {{
    {ActorRole::Ego, "Ego"},
    {ActorRole::PrincipalOther, "PrincipalOther"},
}};

constexpr std::array<std::pair<ActorAction, std::string_view>, 3> kActionNames = {{
    {ActorAction::TurnLeft, "TurnLeft"},
    {ActorAction::TurnRight, "TurnRight"},
    {ActorAction::Straight, "Straight"},
}};

constexpr std::array<std::pair<TriggerType, std::string_view>, 2> kTriggerNames = {{
    {TriggerType::AtDistance, "AtDistance"},
    {TriggerType::AtTime, "AtTime"},
}};

constexpr std::array<std::pair<SamplingStrategy, std::string_view>, 3> kStrategyNames = {{
    {SamplingStrategy::IndependentMarginal, "IndependentMarginal"},
    {SamplingStrategy::JointEmpirical, "JointEmpirical"},
    {SamplingStrategy::StratifiedMarginal, "StratifiedMarginal"},
}};

}  // namespace

std::string_view to_string(IntersectionControl c) { return enum_text(kControlNames, c); }
std::string_view to_string(ActorRole r) { return enum_text(kRoleNames, r); }
std::string_view to_string(ActorAction a) { return enum_text(kActionNames, a); }
std::string_view to_string(TriggerType t) { return enum_text(kTriggerNames, t); }
std::string_view to_string(SamplingStrategy s) { return enum_text(kStrategyNames, s); }

IntersectionControl intersection_control_from_string(std::string_view text) {
    return enum_from(kControlNames, text, "intersection control");
}
ActorRole actor_role_from_string(std::string_view text) { return enum_from(kRoleNames, text, "actor role"); }
ActorAction actor_action_from_string(std::string_view text) {
    return enum_from(kActionNames, text, "actor action");
}
TriggerType trigger_type_from_string(std::string_view text) {
    return enum_from(kTriggerNames, text, "trigger type");
}
SamplingStrategy sampling_strategy_from_string(std::string_view text) {
    return enum_from(kStrategyNames, text, "sampling strategy");
}

LogicalScenario build_logical(std::string name, StaticFeatures static_features, std::vector<Actor> actors,
                              std::vector<ParameterBinding> parameters,
                              std::map<std::string, std::vector<double>> observations) {
    if (name.empty()) fail_validation("BadScenarioName", "logical scenario needs a name");
    if (static_features.leg_count < 3) {
        fail_validation("UnsupportedTopology",
                        "leg count " + std::to_string(static_features.leg_count) + " is below 3");
    }
    if (static_features.approach_lane_count < 1) {
        fail_validation("BadLaneCount", "approach lane count must be at least 1");
    }
    if (!(static_features.leg_length_m > 0.0)) {
        fail_validation("BadLegLength", "leg length must be positive");
    }

    int ego_count = 0;
    int other_count = 0;
    for (auto& actor : actors) {
        if (actor.role == ActorRole::Ego) {
            ++ego_count;
            if (actor.name.empty()) actor.name = "ego";
        } else {
            ++other_count;
            if (actor.name.empty()) actor.name = "other" + std::to_string(other_count);
        }
        if (actor.approach_leg < 0 || actor.approach_leg >= static_features.leg_count) {
            fail_validation("BadLeg", "actor '" + actor.name + "' approaches leg " +
                                          std::to_string(actor.approach_leg) + " of " +
                                          std::to_string(static_features.leg_count));
        }
        if (!(actor.trigger_value > 0.0)) {
            fail_validation("BadTrigger", "actor '" + actor.name + "' has a non-positive trigger value");
        }
    }
    if (ego_count == 0) fail_validation("NoEgoActor", "scenario '" + name + "' declares no Ego actor");
    if (ego_count > 1) fail_validation("DuplicateEgo", "scenario '" + name + "' declares several Ego actors");
    for (size_t i = 0; i < actors.size(); ++i) {
        for (size_t j = i + 1; j < actors.size(); ++j) {
            if (actors[i].name == actors[j].name) {
                fail_validation("DuplicateActor", "actor name '" + actors[i].name + "' is used twice");
            }
        }
    }

    for (const auto& binding : parameters) {
        if (binding.name.empty()) fail_validation("UnboundParameter", "parameter without a name");
        if (binding.distribution.has_value() == binding.range.has_value()) {
            fail_validation("UnboundParameter", "parameter '" + binding.name +
                                                    "' must carry exactly one of distribution or range");
        }
        if (binding.distribution && binding.distribution->n < 1) {
            fail_validation("UnboundParameter", "parameter '" + binding.name + "' has an empty distribution");
        }
        if (binding.range && !(binding.range->first <= binding.range->second)) {
            fail_validation("UnboundParameter", "parameter '" + binding.name + "' has an inverted range");
        }
    }
    for (size_t i = 0; i < parameters.size(); ++i) {
        for (size_t j = i + 1; j < parameters.size(); ++j) {
            if (parameters[i].name == parameters[j].name) {
                fail_validation("DuplicateParameter", "parameter '" + parameters[i].name + "' is bound twice");
            }
        }
    }
    for (const auto& actor : actors) {
        if (actor.speed_parameter.empty()) {
            fail_validation("UnboundParameter", "actor '" + actor.name + "' names no speed parameter");
        }
        bool bound = std::any_of(parameters.begin(), parameters.end(), [&](const ParameterBinding& b) {
            return b.name == actor.speed_parameter;
        });
        if (!bound) {
            fail_validation("UnboundParameter", "actor '" + actor.name + "' references unbound parameter '" +
                                                    actor.speed_parameter + "'");
        }
    }

    LogicalScenario logical;
    logical.name = std::move(name);
    logical.static_features = static_features;
    logical.actors = std::move(actors);
    logical.parameters = std::move(parameters);
    logical.observations = std::move(observations);
    return logical;
}

namespace {

std::string resolve_near(const Config& cfg, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(cfg.source()).parent_path() / p).string();
}

}  // namespace

LogicalScenario logical_from_config(const Config& cfg) {
    cfg.check_keys("scenario", {"name", "legs", "lanes", "control", "lighting", "leg_length_m"});
    cfg.check_keys("observations", {"file"});
    for (const auto& section : cfg.sections()) {
        if (section.name.empty() || section.name == "scenario" || section.name == "observations") continue;
        if (section.name.rfind("actor.", 0) == 0 || section.name.rfind("parameter.", 0) == 0) continue;
        fail_validation("UnknownSection", cfg.source() + ": unknown section [" + section.name + "]");
    }

    std::string name = cfg.require("scenario", "name");
    StaticFeatures features;
    features.leg_count = static_cast<int>(cfg.get_int("scenario", "legs", features.leg_count));
    features.approach_lane_count =
        static_cast<int>(cfg.get_int("scenario", "lanes", features.approach_lane_count));
    if (auto control = cfg.get("scenario", "control")) {
        features.control = intersection_control_from_string(*control);
    }
    if (auto lighting = cfg.get("scenario", "lighting")) features.lighting = *lighting;
    features.leg_length_m = cfg.get_double("scenario", "leg_length_m", features.leg_length_m);

    std::vector<Actor> actors;
    std::vector<ParameterBinding> parameters;
    std::map<std::string, std::vector<double>> observations;
    for (const auto& section : cfg.sections()) {
        if (section.name.rfind("actor.", 0) == 0) {
            cfg.check_keys(section.name, {"role", "leg", "action", "speed", "trigger_type", "trigger_value"});
            Actor actor;
            actor.name = section.name.substr(6);
            if (auto role = cfg.get(section.name, "role")) actor.role = actor_role_from_string(*role);
            actor.approach_leg = static_cast<int>(cfg.get_int(section.name, "leg", actor.approach_leg));
            if (auto action = cfg.get(section.name, "action")) {
                actor.action = actor_action_from_string(*action);
            }
            actor.speed_parameter = cfg.require(section.name, "speed");
            if (auto trigger = cfg.get(section.name, "trigger_type")) {
                actor.trigger_type = trigger_type_from_string(*trigger);
            }
            actor.trigger_value = cfg.get_double(section.name, "trigger_value", actor.trigger_value);
            actors.push_back(std::move(actor));
        } else if (section.name.rfind("parameter.", 0) == 0) {
            cfg.check_keys(section.name, {"units", "range", "distribution"});
            ParameterBinding binding;
            binding.name = section.name.substr(10);
            if (auto units = cfg.get(section.name, "units")) binding.units = *units;
            auto range = cfg.get_list(section.name, "range");
            if (!range.empty()) {
                if (range.size() != 2) {
                    fail_validation("BadRange", "parameter " + binding.name + ": range needs two bounds");
                }
                binding.range = {{require_double(range[0], "range bound"),
                                  require_double(range[1], "range bound")}};
            }
            if (auto dist = cfg.get(section.name, "distribution")) {
                binding.distribution = ParameterDistribution::load(resolve_near(cfg, *dist));
            }
            parameters.push_back(std::move(binding));
        }
    }

    if (auto obs_file = cfg.get("observations", "file")) {
        CsvTable table = read_csv_file(resolve_near(cfg, *obs_file));
        for (const auto& row : table.rows) {
            if (row.size() != table.header.size()) {
                fail_parse("RaggedRow", *obs_file + ": row width does not match the header");
            }
        }
        for (size_t j = 0; j < table.header.size(); ++j) {
            std::vector<double> column;
            column.reserve(table.rows.size());
            for (const auto& row : table.rows) {
                column.push_back(require_double(row[j], table.header[j]));
            }
            observations[table.header[j]] = std::move(column);
        }
    }

    return build_logical(std::move(name), features, std::move(actors), std::move(parameters),
                         std::move(observations));
}

LogicalScenario load_logical(const std::string& path) { return logical_from_config(Config::load(path)); }

double ConcreteScenario::value(std::string_view parameter) const {
    for (const auto& [name, v] : values) {
        if (name == parameter) return v;
    }
    fail_validation("UnboundParameter",
                    "concrete scenario carries no value for '" + std::string(parameter) + "'");
}

namespace {

struct BinSampler {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
};

// In-range bins with mass, with sampling intervals clamped to the observed
// support so every draw stays inside it.
std::vector<BinSampler> samplable_bins(const ParameterDistribution& dist) {
    std::vector<BinSampler> bins;
    for (size_t i = 0; i + 1 < dist.bin_edges.size(); ++i) {
        if (dist.counts[i] <= 0) continue;
        BinSampler bin;
        bin.lo = std::max(dist.bin_edges[i], dist.min_value);
        bin.hi = std::min(dist.bin_edges[i + 1], dist.max_value);
        bin.count = dist.counts[i];
        bins.push_back(bin);
    }
    if (bins.empty()) {
        fail_validation("UnboundParameter", "distribution of '" + dist.variable + "' has no binned mass");
    }
    return bins;
}

double sample_binding(const ParameterBinding& binding, Rng& rng) {
    if (binding.range) {
        auto [lo, hi] = *binding.range;
        return lo == hi ? lo : rng.uniform(lo, hi);
    }
    const auto& dist = *binding.distribution;
    auto bins = samplable_bins(dist);
    if (bins.size() == 1 && dist.counts.size() == 1) {
        // Delta distribution: the single bin's representative value.
        return 0.5 * (bins[0].lo + bins[0].hi);
    }
    std::int64_t total = 0;
    for (const auto& bin : bins) total += bin.count;
    std::int64_t pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
    for (const auto& bin : bins) {
        if (pick < bin.count) return bin.lo == bin.hi ? bin.lo : rng.uniform(bin.lo, bin.hi);
        pick -= bin.count;
    }
    return bins.back().hi;
}

// Largest-remainder allocation of n draws across bins, proportional to
// counts; ties go to the lower bin index.
std::vector<std::int64_t> stratified_allocation(const std::vector<BinSampler>& bins, std::int64_t n) {
    std::int64_t total = 0;
    for (const auto& bin : bins) total += bin.count;
    std::vector<std::int64_t> alloc(bins.size(), 0);
    std::vector<std::pair<double, size_t>> remainders;
    std::int64_t assigned = 0;
    for (size_t i = 0; i < bins.size(); ++i) {
        double quota = static_cast<double>(n) * static_cast<double>(bins[i].count) / static_cast<double>(total);
        alloc[i] = static_cast<std::int64_t>(quota);
        assigned += alloc[i];
        remainders.push_back({quota - static_cast<double>(alloc[i]), i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t k = 0; k < n - assigned; ++k) {
        ++alloc[remainders[static_cast<size_t>(k) % remainders.size()].second];
    }
    return alloc;
}

std::vector<double> stratified_column(const ParameterBinding& binding, std::int64_t n, Rng& rng) {
    std::vector<double> column;
    column.reserve(static_cast<size_t>(n));
    if (binding.range) {
        auto [lo, hi] = *binding.range;
        for (std::int64_t i = 0; i < n; ++i) column.push_back(lo == hi ? lo : rng.uniform(lo, hi));
        return column;
    }
    const auto& dist = *binding.distribution;
    auto bins = samplable_bins(dist);
    if (bins.size() == 1 && dist.counts.size() == 1) {
        column.assign(static_cast<size_t>(n), 0.5 * (bins[0].lo + bins[0].hi));
        return column;
    }
    auto alloc = stratified_allocation(bins, n);
    for (size_t b = 0; b < bins.size(); ++b) {
        for (std::int64_t k = 0; k < alloc[b]; ++k) {
            column.push_back(bins[b].lo == bins[b].hi ? bins[b].lo : rng.uniform(bins[b].lo, bins[b].hi));
        }
    }
    rng.shuffle(column);
    return column;
}

}  // namespace

std::vector<ConcreteScenario> sample_concrete(const LogicalScenario& logical, std::int64_t n,
                                              SamplingStrategy strategy, std::uint64_t seed) {
    if (n < 1) fail_validation("BadSampleCount", "need at least one concrete scenario");
    if (logical.parameters.empty()) {
        fail_validation("UnboundParameter", "logical scenario '" + logical.name + "' binds no parameters");
    }
    Rng rng(seed);
    std::vector<ConcreteScenario> out(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<size_t>(i)].logical_name = logical.name;
        out[static_cast<size_t>(i)].seed = seed;
        out[static_cast<size_t>(i)].index = i;
    }

    switch (strategy) {
        case SamplingStrategy::IndependentMarginal: {
            for (auto& concrete : out) {
                for (const auto& binding : logical.parameters) {
                    concrete.values.emplace_back(binding.name, sample_binding(binding, rng));
                }
            }
            break;
        }
        case SamplingStrategy::JointEmpirical: {
            size_t rows = 0;
            for (const auto& binding : logical.parameters) {
                auto it = logical.observations.find(binding.name);
                if (it == logical.observations.end() || it->second.empty()) {
                    fail_validation("IncompatibleStrategy", "JointEmpirical needs paired observations for '" +
                                                               binding.name + "'");
                }
                if (rows == 0) rows = it->second.size();
                if (it->second.size() != rows) {
                    fail_validation("IncompatibleStrategy",
                                    "observation columns differ in length for '" + binding.name + "'");
                }
            }
            for (auto& concrete : out) {
                size_t row = static_cast<size_t>(rng.below(rows));
                for (const auto& binding : logical.parameters) {
                    concrete.values.emplace_back(binding.name, logical.observations.at(binding.name)[row]);
                }
            }
            break;
        }
        case SamplingStrategy::StratifiedMarginal: {
            for (const auto& binding : logical.parameters) {
                auto column = stratified_column(binding, n, rng);
                for (std::int64_t i = 0; i < n; ++i) {
                    out[static_cast<size_t>(i)].values.emplace_back(binding.name,
                                                                    column[static_cast<size_t>(i)]);
                }
            }
            break;
        }
    }
    return out;
}

namespace {

std::string leg_name(int leg) { return "leg" + std::to_string(leg); }

double leg_heading(int leg, int leg_count) { return 360.0 * leg / leg_count; }

}  // namespace

std::string emit_scenario(const LogicalScenario& logical, const ConcreteScenario& concrete) {
    XmlNode root("Scenario");
    root.set("logical", logical.name);
    root.set("seed", std::to_string(concrete.seed));
    root.set("index", std::to_string(concrete.index));

    auto& decls = root.add_child("ParameterDeclarations");
    for (const auto& binding : logical.parameters) {
        auto& param = decls.add_child("Parameter");
        param.set("name", binding.name);
        param.set("units", binding.units);
        param.set("value", format_double(concrete.value(binding.name)));
    }

    auto& network = root.add_child("RoadNetwork");
    network.set("road", logical.name + ".road.xml");
    network.set("legs", std::to_string(logical.static_features.leg_count));
    network.set("lanes", std::to_string(logical.static_features.approach_lane_count));
    network.set("control", std::string(to_string(logical.static_features.control)));
    network.set("lighting", logical.static_features.lighting);

    auto& entities = root.add_child("Entities");
    for (const auto& actor : logical.actors) {
        auto& node = entities.add_child("Actor");
        node.set("name", actor.name);
        node.set("role", std::string(to_string(actor.role)));
    }

    auto& story = root.add_child("Story");
    for (const auto& actor : logical.actors) {
        auto& maneuver = story.add_child("Maneuver");
        maneuver.set("actor", actor.name);
        maneuver.set("action", std::string(to_string(actor.action)));
        auto& init = maneuver.add_child("Init");
        init.set("speed", format_double(concrete.value(actor.speed_parameter)));
        init.set("leg", leg_name(actor.approach_leg));
        auto& trigger = maneuver.add_child("Trigger");
        trigger.set("type", std::string(to_string(actor.trigger_type)));
        trigger.set("value", format_double(actor.trigger_value));
    }
    return write_xml(root);
}

std::string emit_road(const LogicalScenario& logical) {
    int legs = logical.static_features.leg_count;
    if (legs != 3 && legs != 4) {
        fail_validation("UnsupportedTopology",
                        "junction roads support 3 or 4 legs, got " + std::to_string(legs));
    }

    XmlNode root("Road");
    root.set("name", logical.name);
    root.set("legs", std::to_string(legs));
    root.set("lanes", std::to_string(logical.static_features.approach_lane_count));
    root.set("control", std::string(to_string(logical.static_features.control)));
    for (int leg = 0; leg < legs; ++leg) {
        auto& node = root.add_child("Leg");
        node.set("id", leg_name(leg));
        node.set("heading", format_double(leg_heading(leg, legs)));
        node.set("length", format_double(logical.static_features.leg_length_m));
        node.set("lanes", std::to_string(logical.static_features.approach_lane_count));
    }

    auto& junction = root.add_child("Junction");
    junction.set("id", "j0");
    for (int from = 0; from < legs; ++from) {
        for (int to = 0; to < legs; ++to) {
            if (from == to) continue;  // no U-turns
            double inbound = leg_heading(from, legs) + 180.0;
            double delta = wrap_degrees(leg_heading(to, legs) - inbound);
            ActorAction maneuver =
                delta == 0.0 ? ActorAction::Straight
                             : (delta > 0.0 ? ActorAction::TurnRight : ActorAction::TurnLeft);
            auto& conn = junction.add_child("Connection");
            conn.set("from", leg_name(from));
            conn.set("to", leg_name(to));
            conn.set("maneuver", std::string(to_string(maneuver)));
        }
    }
    return write_xml(root);
}

ParsedScenario parse_scenario(std::string_view xml_text, std::string_view source_name) {
    XmlNode root = parse_xml(xml_text, source_name);
    if (root.name != "Scenario") {
        fail_parse("BadXml", std::string(source_name) + ": root element is <" + root.name + ">");
    }
    ParsedScenario parsed;
    parsed.logical_name = root.require_attr("logical");
    parsed.seed = static_cast<std::uint64_t>(require_int(root.require_attr("seed"), "seed"));
    parsed.index = require_int(root.require_attr("index"), "index");
    for (const XmlNode* param : root.require("ParameterDeclarations").find_all("Parameter")) {
        parsed.values.emplace_back(param->require_attr("name"),
                                   require_double(param->require_attr("value"), "parameter value"));
    }
    return parsed;
}

BatchResult emit_batch(const LogicalScenario& logical, const std::vector<ConcreteScenario>& concretes,
                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (concretes.empty()) fail_validation("BadSampleCount", "no concrete scenarios to emit");
    std::uint64_t seed = concretes.front().seed;
    for (const auto& concrete : concretes) {
        if (concrete.logical_name != logical.name) {
            fail_validation("BadScenarioName", "concrete scenario belongs to '" + concrete.logical_name + "'");
        }
        if (concrete.seed != seed) {
            fail_validation("BadSampleCount", "one batch must share one seed");
        }
    }

    fs::path base(out_dir);
    fs::path batch_dir = base / logical.name / std::to_string(seed);
    std::error_code ec;
    fs::create_directories(batch_dir, ec);
    if (ec) fail_io("FileNotWritable", "cannot create " + batch_dir.string());

    BatchResult result;
    result.road_file = (base / (logical.name + ".road.xml")).string();
    {
        std::ofstream out(result.road_file, std::ios::binary);
        if (!out) fail_io("FileNotWritable", "cannot write " + result.road_file);
        out << emit_road(logical);
    }

    CsvTable manifest;
    manifest.header = {"file"};
    for (const auto& binding : logical.parameters) manifest.header.push_back(binding.name);
    for (const auto& concrete : concretes) {
        std::string file_name = std::to_string(concrete.index) + ".scenario.xml";
        fs::path file_path = batch_dir / file_name;
        std::ofstream out(file_path, std::ios::binary);
        if (!out) fail_io("FileNotWritable", "cannot write " + file_path.string());
        out << emit_scenario(logical, concrete);
        result.scenario_files.push_back(file_path.string());

        std::vector<std::string> row = {file_name};
        for (const auto& binding : logical.parameters) {
            row.push_back(format_double(concrete.value(binding.name)));
        }
        manifest.rows.push_back(std::move(row));
    }
    result.manifest_file = (batch_dir / "manifest.csv").string();
    write_csv_file(result.manifest_file, manifest);
    return result;
}

}  // namespace scenfuse
