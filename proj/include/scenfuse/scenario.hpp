#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "scenfuse/config.hpp"
#include "scenfuse/records.hpp"
#include "scenfuse/turn_detect.hpp"

namespace scenfuse {

enum class Verdict { Match, NoMatch, Unknown };
std::string_view to_string(Verdict v);

// Three-valued variable lookup behind predicate evaluation. Each accessor
// reports whether the variable is known, present-but-unknown, or not part of
// this context at all (the latter raises UndeclaredVariable upstream).
class EvalContext {
public:
    enum class Presence { Known, Unknown, Undeclared };

    virtual Presence text_value(std::string_view variable, std::string& out) const = 0;
    virtual Presence numeric_value(std::string_view variable, double& out) const = 0;
    virtual Presence bool_value(std::string_view variable, bool& out) const = 0;
    virtual ~EvalContext() = default;
};

namespace detail {
struct ExprNode;
}

// Boolean expression over named variables with Kleene three-valued logic.
//
//   junction = Junction and turning = Turning
//   LIGHTING in {Dark, DarkLighted} or not (severity = Fatal)
//   abs(net_yaw) in [45, 135] and mean_speed >= 2.24
//   passes_gates and direction != Left
//
// `VAR in @name` expands a named code-set supplied at parse time.
class Predicate {
public:
    Predicate() = default;

    static Predicate parse(std::string_view text);
    static Predicate parse(std::string_view text, const std::map<std::string, std::set<std::string>>& codesets);

    bool empty() const { return root_ == nullptr; }
    Verdict evaluate(const EvalContext& ctx) const;
    // Every variable the expression references.
    std::set<std::string> variables() const;
    const std::string& text() const { return text_; }

private:
    std::shared_ptr<const detail::ExprNode> root_;
    std::string text_;
};

enum class UnknownPolicy { ExcludeFromNumerator, ExcludeFromBoth };
std::string_view to_string(UnknownPolicy p);
UnknownPolicy unknown_policy_from_string(std::string_view text);

struct ScenarioDefinition {
    std::string name;
    UnknownPolicy unknown_policy = UnknownPolicy::ExcludeFromNumerator;
    Predicate record_predicate;
    Predicate event_predicate;  // may be empty when the scenario is record-only

    static ScenarioDefinition from_config(const Config& cfg);
    static ScenarioDefinition load(const std::string& path);
};

// Record variables: derived flags (junction, turning), builtin fields
// (dataset, severity, body_class, case_id, model_year, calendar_year,
// vehicle_index, sample_weight, first_harmful_event) and the schema's coded
// variables. Coded variables with absent or empty values evaluate Unknown.
Verdict evaluate_record(const Predicate& predicate, const VehicleRecord& record, const DerivedFlags& flags,
                        const RecordSchema& schema);

// Event variables: net_yaw, gps_heading_change, segment_angle, mean_speed,
// max_abs_lat_accel, duration, junction_node, start_idx, end_idx, direction,
// trip_id, passes_gates. Everything is known, so verdicts are two-valued.
Verdict evaluate_event(const Predicate& predicate, const TurnEvent& event, const TurnDetectParams& params);

// Raises UndeclaredVariable unless every referenced variable is resolvable
// against the given schema.
void validate_record_predicate(const Predicate& predicate, const RecordSchema& schema);

struct Proportions {
    double numerator = 0.0;
    double denominator = 0.0;
    double fraction = 0.0;
    std::int64_t match_count = 0;
    std::int64_t no_match_count = 0;
    std::int64_t unknown_count = 0;
};

// Match share of a record dataset under the definition's unknown policy:
// ExcludeFromNumerator keeps Unknown verdicts in the denominator,
// ExcludeFromBoth drops them from both sides. `weighted` switches the sums
// from unit counts to sample weights.
Proportions record_proportions(const ScenarioDefinition& def, const std::vector<VehicleRecord>& records,
                               const std::vector<DerivedFlags>& flags, const RecordSchema& schema,
                               bool weighted);

Proportions event_proportions(const ScenarioDefinition& def, const std::vector<TurnEvent>& events,
                              const TurnDetectParams& params);

}  // namespace scenfuse
