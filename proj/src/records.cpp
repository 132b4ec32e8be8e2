#include "scenfuse/records.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <sstream>

#include "scenfuse/common.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

namespace {

constexpr std::array<std::pair<DatasetId, std::string_view>, 5> kDatasetNames = {{
    {DatasetId::FatalNcd, "FatalNCD"},
    {DatasetId::NonFatalNcd, "NonFatalNCD"},
    {DatasetId::NdsCrash, "NdsCrash"},
    {DatasetId::NdsNearCrash, "NdsNearCrash"},
    {DatasetId::NdsBaseline, "NdsBaseline"},
}};

constexpr std::array<std::pair<BodyClass, std::string_view>, 4> kBodyClassNames = {{
    {BodyClass::LightPassengerVehicle, "LightPassengerVehicle"},
    {BodyClass::MotorcycleMoped, "MotorcycleMoped"},
    {BodyClass::MediumHeavyVehicle, "MediumHeavyVehicle"},
    {BodyClass::Other, "Other"},
}};

constexpr std::array<std::pair<Severity, std::string_view>, 5> kSeverityNames = {{
    {Severity::Fatal, "Fatal"},
    {Severity::NonFatalInjury, "NonFatalInjury"},
    {Severity::PropertyDamageOnly, "PropertyDamageOnly"},
    {Severity::NearCrash, "NearCrash"},
    {Severity::Baseline, "Baseline"},
}};

constexpr std::array<std::pair<ExclusionFlag, std::string_view>, 5> kFlagNames = {{
    {ExclusionFlag::Emergency, "Emergency"},
    {ExclusionFlag::Parked, "Parked"},
    {ExclusionFlag::Stolen, "Stolen"},
    {ExclusionFlag::DriverAbsent, "DriverAbsent"},
    {ExclusionFlag::PolicePursuit, "PolicePursuit"},
}};

template <typename E, size_t N>
std::string_view enum_name(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [e, name] : table) {
        if (e == value) return name;
    }
    return "?";
}

template <typename E, size_t N>
std::optional<E> enum_value(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view name) {
    for (const auto& [e, n] : table) {
        if (n == name) return e;
    }
    return std::nullopt;
}

const std::vector<std::string>& base_columns() {
    static const std::vector<std::string> cols = {
        "dataset",       "case_id",  "vehicle_index",       "calendar_year",   "model_year",
        "body_class",    "severity", "sample_weight",       "first_harmful_event",
        "exclusion_flags",
    };
    return cols;
}

std::uint8_t parse_flags(std::string_view cell, bool& ok) {
    std::uint8_t flags = 0;
    ok = true;
    size_t start = 0;
    std::string text(cell);
    while (start <= text.size() && !text.empty()) {
        size_t semi = text.find(';', start);
        std::string_view item = semi == std::string::npos
                                    ? std::string_view(text).substr(start)
                                    : std::string_view(text).substr(start, semi - start);
        item = trim(item);
        if (!item.empty()) {
            auto flag = enum_value(kFlagNames, item);
            if (!flag) {
                ok = false;
                return 0;
            }
            flags |= static_cast<std::uint8_t>(*flag);
        }
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    return flags;
}

std::string flags_to_string(std::uint8_t flags) {
    std::string out;
    for (const auto& [flag, name] : kFlagNames) {
        if (flags & static_cast<std::uint8_t>(flag)) {
            if (!out.empty()) out.push_back(';');
            out += name;
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(DatasetId id) { return enum_name(kDatasetNames, id); }
std::string_view to_string(BodyClass bc) { return enum_name(kBodyClassNames, bc); }
std::string_view to_string(Severity sev) { return enum_name(kSeverityNames, sev); }
std::string_view to_string(ExclusionFlag flag) { return enum_name(kFlagNames, flag); }

DatasetId dataset_from_string(std::string_view text) {
    auto v = enum_value(kDatasetNames, text);
    if (!v) fail_parse("BadDataset", "unknown dataset id '" + std::string(text) + "'");
    return *v;
}

BodyClass body_class_from_string(std::string_view text) {
    auto v = enum_value(kBodyClassNames, text);
    if (!v) fail_parse("BadBodyClass", "unknown body class '" + std::string(text) + "'");
    return *v;
}

Severity severity_from_string(std::string_view text) {
    auto v = enum_value(kSeverityNames, text);
    if (!v) fail_parse("BadSeverity", "unknown severity '" + std::string(text) + "'");
    return *v;
}

std::optional<std::string_view> VehicleRecord::code(std::string_view variable) const {
    auto it = coded.find(std::string(variable));
    if (it == coded.end() || it->second.empty()) return std::nullopt;
    return std::string_view(it->second);
}

RecordSchema RecordSchema::from_config(const Config& cfg) {
    cfg.check_keys("schema", {"dataset", "coded"});
    RecordSchema schema;
    schema.dataset = dataset_from_string(cfg.require("schema", "dataset"));
    schema.coded_variables = cfg.get_list("schema", "coded");
    for (const auto& entry : cfg.section("rename").entries) {
        schema.renames[entry.key] = entry.value;
    }
    return schema;
}

RecordSchema RecordSchema::load(const std::string& path) { return from_config(Config::load(path)); }

RecordSchema RecordSchema::default_ncd(DatasetId dataset) {
    RecordSchema schema;
    schema.dataset = dataset;
    schema.coded_variables = {"RELJCT2", "P_CRASH1", "P_CRASH2", "ACC_TYPE", "LIGHTING", "MOTORIST_TYPE"};
    return schema;
}

RecordSchema RecordSchema::default_nds(DatasetId dataset) {
    RecordSchema schema;
    schema.dataset = dataset;
    schema.coded_variables = {"RELATION_TO_JUNCTION", "PRE_INCIDENT_MANEUVER", "PRECIPITATING_EVENT",
                              "LIGHTING", "MOTORIST_TYPE"};
    if (dataset == DatasetId::NdsCrash || dataset == DatasetId::NdsNearCrash) {
        // Other-motorist maneuvers are coded only for crash and near-crash events.
        schema.coded_variables.insert(schema.coded_variables.begin() + 3,
                                      {"MOTORIST2_MANEUVER", "MOTORIST3_MANEUVER"});
    }
    return schema;
}

RecordSchema RecordSchema::default_for(DatasetId dataset) {
    switch (dataset) {
        case DatasetId::FatalNcd:
        case DatasetId::NonFatalNcd:
            return default_ncd(dataset);
        default:
            return default_nds(dataset);
    }
}

IngestResult ingest_records(std::istream& in, std::string_view source_name, const RecordSchema& schema) {
    CsvTable table = read_csv(in, source_name);
    if (table.rows.empty()) fail_parse("EmptyFile", std::string(source_name) + ": no data rows");

    // Canonicalize the header and reject anything the schema does not declare.
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < table.header.size(); ++i) {
        std::string name = table.header[i];
        auto rename = schema.renames.find(name);
        if (rename != schema.renames.end()) name = rename->second;
        bool is_base = std::find(base_columns().begin(), base_columns().end(), name) != base_columns().end();
        bool is_coded = std::find(schema.coded_variables.begin(), schema.coded_variables.end(), name) !=
                        schema.coded_variables.end();
        if (!is_base && !is_coded) {
            fail_parse("UnknownColumn",
                       std::string(source_name) + ": column '" + table.header[i] + "' not in declared schema");
        }
        if (!col.emplace(name, i).second) {
            fail_parse("DuplicateColumn", std::string(source_name) + ": column '" + name + "' appears twice");
        }
    }
    for (const auto& name : base_columns()) {
        if (!col.count(name)) {
            fail_parse("MissingColumn", std::string(source_name) + ": missing required column '" + name + "'");
        }
    }
    for (const auto& name : schema.coded_variables) {
        if (!col.count(name)) {
            fail_parse("MissingColumn", std::string(source_name) + ": missing coded column '" + name + "'");
        }
    }

    IngestResult result;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int row_no = static_cast<int>(r + 1);
        auto reject = [&](std::string column, std::string message) {
            result.diagnostics.push_back({row_no, std::move(column), std::move(message)});
        };
        if (row.size() != table.header.size()) {
            reject("", "expected " + std::to_string(table.header.size()) + " cells, got " +
                           std::to_string(row.size()));
            continue;
        }
        auto cell = [&](const std::string& name) -> const std::string& { return row[col.at(name)]; };

        VehicleRecord rec;
        try {
            std::string_view ds = trim(cell("dataset"));
            rec.dataset_id = ds.empty() ? schema.dataset : dataset_from_string(ds);
            if (rec.dataset_id != schema.dataset) {
                reject("dataset", "row dataset '" + std::string(ds) + "' does not match schema dataset '" +
                                      std::string(to_string(schema.dataset)) + "'");
                continue;
            }
            rec.case_id = std::string(trim(cell("case_id")));
            if (rec.case_id.empty()) {
                reject("case_id", "empty case id");
                continue;
            }
            rec.vehicle_index = static_cast<int>(require_int(cell("vehicle_index"), "vehicle_index"));
            if (rec.vehicle_index < 1) {
                reject("vehicle_index", "vehicle index must be >= 1");
                continue;
            }
            rec.calendar_year = static_cast<int>(require_int(cell("calendar_year"), "calendar_year"));
            std::string_view my = trim(cell("model_year"));
            if (!my.empty() && my != "Unknown") {
                rec.model_year = static_cast<int>(require_int(my, "model_year"));
                if (*rec.model_year > rec.calendar_year + 1) {
                    reject("model_year", "model year " + std::to_string(*rec.model_year) +
                                             " exceeds calendar year + 1");
                    continue;
                }
            }
            rec.body_class = body_class_from_string(trim(cell("body_class")));
            rec.severity = severity_from_string(trim(cell("severity")));
            rec.sample_weight = require_double(cell("sample_weight"), "sample_weight");
            if (!(rec.sample_weight > 0.0)) {
                reject("sample_weight", "sample weight must be > 0");
                continue;
            }
            std::string_view fhe = trim(cell("first_harmful_event"));
            if (fhe == "true" || fhe == "1") {
                rec.first_harmful_event_involved = true;
            } else if (fhe == "false" || fhe == "0") {
                rec.first_harmful_event_involved = false;
            } else {
                reject("first_harmful_event", "expected true/false");
                continue;
            }
            bool flags_ok = false;
            rec.exclusion_flags = parse_flags(cell("exclusion_flags"), flags_ok);
            if (!flags_ok) {
                reject("exclusion_flags", "unknown exclusion flag in '" + cell("exclusion_flags") + "'");
                continue;
            }
            for (const auto& var : schema.coded_variables) {
                rec.coded[var] = std::string(trim(cell(var)));
            }
        } catch (const Error& e) {
            reject("", e.what());
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

IngestResult ingest_records_file(const std::string& path, const RecordSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("FileNotFound", "cannot open " + path);
    return ingest_records(in, path, schema);
}

CsvTable serialize_records(const std::vector<VehicleRecord>& records, const RecordSchema& schema) {
    CsvTable table;
    table.header = base_columns();
    for (const auto& var : schema.coded_variables) table.header.push_back(var);
    for (const auto& rec : records) {
        std::vector<std::string> row;
        row.reserve(table.header.size());
        row.emplace_back(to_string(rec.dataset_id));
        row.push_back(rec.case_id);
        row.push_back(std::to_string(rec.vehicle_index));
        row.push_back(std::to_string(rec.calendar_year));
        row.push_back(rec.model_year ? std::to_string(*rec.model_year) : "");
        row.emplace_back(to_string(rec.body_class));
        row.emplace_back(to_string(rec.severity));
        row.push_back(format_double(rec.sample_weight));
        row.emplace_back(rec.first_harmful_event_involved ? "true" : "false");
        row.push_back(flags_to_string(rec.exclusion_flags));
        for (const auto& var : schema.coded_variables) {
            auto it = rec.coded.find(var);
            row.push_back(it == rec.coded.end() ? std::string() : it->second);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_records_file(const std::string& path, const std::vector<VehicleRecord>& records,
                        const RecordSchema& schema) {
    write_csv_file(path, serialize_records(records, schema));
}

std::string_view to_string(JunctionStatus s) {
    switch (s) {
        case JunctionStatus::Junction: return "Junction";
        case JunctionStatus::NotAJunction: return "NotAJunction";
        default: return "Unknown";
    }
}

std::string_view to_string(TurningStatus s) {
    switch (s) {
        case TurningStatus::Turning: return "Turning";
        case TurningStatus::NotTurning: return "NotTurning";
        default: return "Unknown";
    }
}

JunctionStatus junction_status_from_string(std::string_view text) {
    if (text == "Junction") return JunctionStatus::Junction;
    if (text == "NotAJunction") return JunctionStatus::NotAJunction;
    if (text == "Unknown") return JunctionStatus::Unknown;
    fail_parse("BadJunctionStatus", "unknown junction status '" + std::string(text) + "'");
}

TurningStatus turning_status_from_string(std::string_view text) {
    if (text == "Turning") return TurningStatus::Turning;
    if (text == "NotTurning") return TurningStatus::NotTurning;
    if (text == "Unknown") return TurningStatus::Unknown;
    fail_parse("BadTurningStatus", "unknown turning status '" + std::string(text) + "'");
}

JunctionCodeMap JunctionCodeMap::from_config(const Config& cfg, std::string_view section) {
    cfg.check_keys(section, {"variable", "junction", "not_junction"});
    JunctionCodeMap map;
    map.variable = cfg.get_or(section, "variable", "RELJCT2");
    for (auto& code : cfg.get_list(section, "junction")) map.junction_codes.insert(std::move(code));
    for (auto& code : cfg.get_list(section, "not_junction")) map.not_junction_codes.insert(std::move(code));
    if (map.junction_codes.empty()) {
        fail_validation("EmptyCodeMap", "junction map declares no junction codes");
    }
    return map;
}

JunctionCodeMap JunctionCodeMap::defaults() {
    JunctionCodeMap map;
    map.variable = "RELJCT2";
    map.junction_codes = {"Intersection", "IntersectionRelated", "DrivewayAccess", "DrivewayAccessRelated"};
    map.not_junction_codes = {"NonJunction",   "EntranceExitRamp", "RailGradeCrossing", "Crossover",
                              "SharedUsePath", "AccelDecelLane",   "Other"};
    return map;
}

JunctionCodeMap JunctionCodeMap::nds_defaults() {
    JunctionCodeMap map;
    map.variable = "RELATION_TO_JUNCTION";
    map.junction_codes = {"Intersection", "IntersectionRelated", "DrivewayAccess", "DrivewayAccessRelated"};
    map.not_junction_codes = {"NonJunction", "InterchangeArea", "ParkingLot", "Other"};
    return map;
}

TurningCodeMap TurningCodeMap::from_config(const Config& cfg, std::string_view section_prefix) {
    TurningCodeMap map;
    std::string prefix = std::string(section_prefix) + ".";
    for (const auto& section : cfg.sections()) {
        if (section.name.rfind(prefix, 0) != 0) continue;
        cfg.check_keys(section.name, {"turn", "known"});
        VariableCodes codes;
        codes.variable = section.name.substr(prefix.size());
        for (auto& c : cfg.get_list(section.name, "turn")) codes.turn_codes.insert(std::move(c));
        for (auto& c : cfg.get_list(section.name, "known")) codes.known_codes.insert(std::move(c));
        codes.known_codes.insert(codes.turn_codes.begin(), codes.turn_codes.end());
        if (codes.turn_codes.empty()) {
            fail_validation("EmptyCodeMap", "turning map for " + codes.variable + " declares no turn codes");
        }
        map.variables.push_back(std::move(codes));
    }
    if (map.variables.empty()) {
        fail_validation("EmptyCodeMap",
                        "no [" + std::string(section_prefix) + ".<variable>] sections in " + cfg.source());
    }
    return map;
}

namespace {

TurningCodeMap::VariableCodes make_codes(std::string variable, std::set<std::string> turn,
                                         std::set<std::string> other_known) {
    TurningCodeMap::VariableCodes codes;
    codes.variable = std::move(variable);
    codes.turn_codes = std::move(turn);
    codes.known_codes = std::move(other_known);
    codes.known_codes.insert(codes.turn_codes.begin(), codes.turn_codes.end());
    return codes;
}

}  // namespace

TurningCodeMap TurningCodeMap::defaults() {
    TurningCodeMap map;
    map.variables.push_back(make_codes(
        "P_CRASH1", {"TurningLeft", "TurningRight", "MakingUTurn"},
        {"GoingStraight", "Stopped", "Accelerating", "Decelerating", "ChangingLanes", "Backing",
         "NegotiatingCurve", "StartingInRoad", "Passing"}));
    map.variables.push_back(make_codes(
        "P_CRASH2", {"TurnAcrossPath", "TurnIntoPath"},
        {"GoingStraight", "LossOfControl", "LaneDeparture", "PedestrianConflict", "ObjectInRoad", "Other"}));
    map.variables.push_back(make_codes(
        "ACC_TYPE",
        {"LeftTurnAcrossPath", "LeftTurnIntoPath", "RightTurnIntoPath", "RightTurnAcrossPath", "UTurn"},
        {"RearEnd", "HeadOn", "Angle", "Sideswipe", "SingleDriverRoadDeparture", "Backing", "Pedestrian",
         "Other"}));
    return map;
}

TurningCodeMap TurningCodeMap::nds_defaults() {
    TurningCodeMap map;
    map.variables.push_back(make_codes(
        "PRE_INCIDENT_MANEUVER", {"TurningLeft", "TurningRight", "MakingUTurn"},
        {"GoingStraight", "Decelerating", "Accelerating", "ChangingLanes", "Stopped", "Backing",
         "NegotiatingCurve"}));
    map.variables.push_back(make_codes(
        "PRECIPITATING_EVENT", {"TurnAcrossPath", "TurnIntoPath"},
        {"RearEndConflict", "LaneDrift", "PedalError", "RoadDeparture", "Other"}));
    map.variables.push_back(make_codes("MOTORIST2_MANEUVER", {"TurningLeft", "TurningRight", "MakingUTurn"},
                                       {"GoingStraight", "Stopped", "ChangingLanes", "Backing",
                                        "NotApplicable"}));
    map.variables.push_back(make_codes("MOTORIST3_MANEUVER", {"TurningLeft", "TurningRight", "MakingUTurn"},
                                       {"GoingStraight", "Stopped", "ChangingLanes", "Backing",
                                        "NotApplicable"}));
    return map;
}

JunctionStatus derive_junction(const VehicleRecord& record, const JunctionCodeMap& mapping) {
    auto code = record.code(mapping.variable);
    if (!code) return JunctionStatus::Unknown;
    std::string key(*code);
    if (mapping.junction_codes.count(key)) return JunctionStatus::Junction;
    if (mapping.not_junction_codes.count(key)) return JunctionStatus::NotAJunction;
    return JunctionStatus::Unknown;
}

TurningStatus derive_turning(const std::vector<const VehicleRecord*>& records_of_case,
                             const TurningCodeMap& mapping) {
    if (records_of_case.empty()) fail_validation("EmptyCase", "derive_turning called with no records");
    const std::string& case_id = records_of_case.front()->case_id;
    bool all_known = true;
    for (const VehicleRecord* rec : records_of_case) {
        if (rec->case_id != case_id) {
            fail_validation("MixedCase", "records from different cases: '" + case_id + "' vs '" +
                                             rec->case_id + "'");
        }
        for (const auto& var : mapping.variables) {
            // A variable the record's dataset does not carry is skipped; a
            // carried-but-empty value blocks a NotTurning verdict.
            auto it = rec->coded.find(var.variable);
            if (it == rec->coded.end()) continue;
            if (it->second.empty()) {
                all_known = false;
                continue;
            }
            if (var.turn_codes.count(it->second)) return TurningStatus::Turning;
            if (!var.known_codes.count(it->second)) all_known = false;
        }
    }
    return all_known ? TurningStatus::NotTurning : TurningStatus::Unknown;
}

std::vector<DerivedFlags> derive_flags(const std::vector<VehicleRecord>& records,
                                       const JunctionCodeMap& junction_map,
                                       const TurningCodeMap& turning_map) {
    // Group record indices by case id, preserving the dataset order.
    std::map<std::string, std::vector<size_t>> cases;
    for (size_t i = 0; i < records.size(); ++i) {
        cases[records[i].case_id].push_back(i);
    }
    std::vector<DerivedFlags> flags(records.size());
    for (const auto& [case_id, indices] : cases) {
        std::vector<const VehicleRecord*> members;
        members.reserve(indices.size());
        for (size_t i : indices) members.push_back(&records[i]);
        TurningStatus turning = derive_turning(members, turning_map);
        for (size_t i : indices) {
            flags[i].junction = derive_junction(records[i], junction_map);
            flags[i].turning = turning;
        }
    }
    return flags;
}

CohortPolicy CohortPolicy::from_config(const Config& cfg, std::string_view section) {
    cfg.check_keys(section,
                   {"min_model_year", "body_classes", "require_first_harmful_event", "exclude_flags"});
    CohortPolicy policy;
    auto my = cfg.get(section, "min_model_year");
    if (my) {
        if (*my == "none") {
            policy.min_model_year.reset();
        } else {
            policy.min_model_year = static_cast<int>(require_int(*my, "min_model_year"));
        }
    }
    if (cfg.has(section, "body_classes")) {
        policy.allowed_body_classes.clear();
        for (const auto& name : cfg.get_list(section, "body_classes")) {
            policy.allowed_body_classes.insert(body_class_from_string(name));
        }
    }
    policy.require_first_harmful_event =
        cfg.get_bool(section, "require_first_harmful_event", policy.require_first_harmful_event);
    if (cfg.has(section, "exclude_flags")) {
        policy.excluded_flags = 0;
        for (const auto& name : cfg.get_list(section, "exclude_flags")) {
            bool ok = false;
            std::uint8_t bit = parse_flags(name, ok);
            if (!ok) fail_parse("BadFlag", "unknown exclusion flag '" + name + "'");
            policy.excluded_flags |= bit;
        }
    }
    return policy;
}

CohortResult apply_cohort_filter(const std::vector<VehicleRecord>& records, const CohortPolicy& policy) {
    CohortResult result;
    result.records.reserve(records.size());
    for (const auto& rec : records) {
        std::string reason;
        if (policy.min_model_year) {
            if (!rec.model_year) {
                reason = "ModelYearUnknown";
            } else if (*rec.model_year < *policy.min_model_year) {
                reason = "ModelYear";
            }
        }
        if (reason.empty() && !policy.allowed_body_classes.count(rec.body_class)) {
            reason = "BodyClass";
        }
        if (reason.empty() && policy.require_first_harmful_event && !rec.first_harmful_event_involved) {
            reason = "FirstHarmfulEvent";
        }
        if (reason.empty()) {
            std::uint8_t hit = rec.exclusion_flags & policy.excluded_flags;
            if (hit) {
                for (const auto& [flag, name] : kFlagNames) {
                    if (hit & static_cast<std::uint8_t>(flag)) {
                        reason = std::string(name);
                        break;
                    }
                }
            }
        }
        if (reason.empty()) {
            result.records.push_back(rec);
        } else {
            ++result.tally[reason];
        }
    }
    return result;
}

}  // namespace scenfuse
