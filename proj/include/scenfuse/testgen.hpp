#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scenfuse/params.hpp"
#include "scenfuse/xmlmini.hpp"

namespace scenfuse {

enum class IntersectionControl { Signal, Stop, Yield, Uncontrolled };
enum class ActorRole { Ego, PrincipalOther };
enum class ActorAction { TurnLeft, TurnRight, Straight };
enum class TriggerType { AtDistance, AtTime };
enum class SamplingStrategy { IndependentMarginal, JointEmpirical, StratifiedMarginal };

std::string_view to_string(IntersectionControl c);
std::string_view to_string(ActorRole r);
std::string_view to_string(ActorAction a);
std::string_view to_string(TriggerType t);
std::string_view to_string(SamplingStrategy s);
IntersectionControl intersection_control_from_string(std::string_view text);
ActorRole actor_role_from_string(std::string_view text);
ActorAction actor_action_from_string(std::string_view text);
TriggerType trigger_type_from_string(std::string_view text);
SamplingStrategy sampling_strategy_from_string(std::string_view text);

// Static features of the junction under test.
struct StaticFeatures {
    int leg_count = 4;
    int approach_lane_count = 1;
    IntersectionControl control = IntersectionControl::Signal;
    std::string lighting = "Daylight";
    double leg_length_m = 150.0;
};

struct Actor {
    std::string name;  // assigned by build_logical when empty: ego, other1, ...
    ActorRole role = ActorRole::PrincipalOther;
    std::string speed_parameter;  // bound parameter supplying initial speed
    int approach_leg = 0;
    ActorAction action = ActorAction::Straight;
    TriggerType trigger_type = TriggerType::AtDistance;
    double trigger_value = 50.0;  // metres or seconds from the junction center
};

// A parameter is bound either to a fitted distribution or to an explicit
// inclusive range; exactly one of the two.
struct ParameterBinding {
    std::string name;
    std::string units;
    std::optional<ParameterDistribution> distribution;
    std::optional<std::pair<double, double>> range;
};

struct LogicalScenario {
    std::string name;
    StaticFeatures static_features;
    std::vector<Actor> actors;
    std::vector<ParameterBinding> parameters;
    // Paired source observations, one column per parameter, equal lengths;
    // required by JointEmpirical.
    std::map<std::string, std::vector<double>> observations;
};

// Validates the scenario: exactly one Ego, every actor's speed parameter
// bound, every binding carrying a distribution or range, distributions
// non-empty, legs within the static topology.
LogicalScenario build_logical(std::string name, StaticFeatures static_features, std::vector<Actor> actors,
                              std::vector<ParameterBinding> parameters,
                              std::map<std::string, std::vector<double>> observations = {});

// Logical scenario file: a [scenario] section (name, legs, lanes, control,
// lighting, leg_length_m), one [actor.<name>] section per actor (role, leg,
// action, speed, trigger_type, trigger_value) and one [parameter.<name>]
// section per binding, each carrying units plus either range = lo, hi or
// distribution = <saved distribution path>. An optional [observations]
// section names a CSV whose header columns are parameter names, supplying
// the joint sample. Relative paths resolve against the file's directory;
// section order fixes actor and parameter order.
LogicalScenario logical_from_config(const Config& cfg);
LogicalScenario load_logical(const std::string& path);

struct ConcreteScenario {
    std::string logical_name;
    std::uint64_t seed = 0;
    std::int64_t index = 0;
    std::vector<std::pair<std::string, double>> values;  // parameter order preserved

    double value(std::string_view parameter) const;  // throws UnboundParameter
};

// Deterministic under (logical, n, strategy, seed). IndependentMarginal
// samples each histogram on its own; JointEmpirical resamples observed
// tuples; StratifiedMarginal allocates counts proportionally across bins
// (largest remainder), samples uniformly within bins, then shuffles.
std::vector<ConcreteScenario> sample_concrete(const LogicalScenario& logical, std::int64_t n,
                                              SamplingStrategy strategy, std::uint64_t seed);

std::string emit_scenario(const LogicalScenario& logical, const ConcreteScenario& concrete);
std::string emit_road(const LogicalScenario& logical);

// Parsed-back view of an emitted scenario document.
struct ParsedScenario {
    std::string logical_name;
    std::uint64_t seed = 0;
    std::int64_t index = 0;
    std::vector<std::pair<std::string, double>> values;
};

ParsedScenario parse_scenario(std::string_view xml_text, std::string_view source_name);

// Writes <out_dir>/<name>.road.xml, one <out_dir>/<name>/<seed>/<index>.scenario.xml
// per concrete scenario, and a manifest.csv beside the scenario files listing
// every file with its bound parameter values.
struct BatchResult {
    std::string road_file;
    std::string manifest_file;
    std::vector<std::string> scenario_files;
};

BatchResult emit_batch(const LogicalScenario& logical, const std::vector<ConcreteScenario>& concretes,
                       const std::string& out_dir);

}  // namespace scenfuse
