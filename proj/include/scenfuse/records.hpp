#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "scenfuse/config.hpp"
#include "scenfuse/csv.hpp"

namespace scenfuse {

enum class DatasetId { FatalNcd, NonFatalNcd, NdsCrash, NdsNearCrash, NdsBaseline };
enum class BodyClass { LightPassengerVehicle, MotorcycleMoped, MediumHeavyVehicle, Other };
enum class Severity { Fatal, NonFatalInjury, PropertyDamageOnly, NearCrash, Baseline };

enum class ExclusionFlag : std::uint8_t {
    Emergency = 1 << 0,
    Parked = 1 << 1,
    Stolen = 1 << 2,
    DriverAbsent = 1 << 3,
    PolicePursuit = 1 << 4,
};

std::string_view to_string(DatasetId id);
std::string_view to_string(BodyClass bc);
std::string_view to_string(Severity sev);
std::string_view to_string(ExclusionFlag flag);
DatasetId dataset_from_string(std::string_view text);
BodyClass body_class_from_string(std::string_view text);
Severity severity_from_string(std::string_view text);

// One crash-involved vehicle (or NDS event participant) from a record dataset.
struct VehicleRecord {
    DatasetId dataset_id = DatasetId::FatalNcd;
    std::string case_id;
    int vehicle_index = 1;
    int calendar_year = 0;
    std::optional<int> model_year;  // nullopt = unknown
    BodyClass body_class = BodyClass::Other;
    Severity severity = Severity::Fatal;
    std::map<std::string, std::string> coded;  // canonical variable -> code; absent = missing
    double sample_weight = 1.0;
    bool first_harmful_event_involved = true;
    std::uint8_t exclusion_flags = 0;  // ExclusionFlag bits

    bool has_flag(ExclusionFlag f) const { return exclusion_flags & static_cast<std::uint8_t>(f); }
    // Missing or empty cells are treated as absent codes.
    std::optional<std::string_view> code(std::string_view variable) const;
};

// Declares what a dataset file must look like: its dataset id, which coded
// variables it carries, and per-year column renames onto the canonical names.
struct RecordSchema {
    DatasetId dataset = DatasetId::FatalNcd;
    std::vector<std::string> coded_variables;
    std::map<std::string, std::string> renames;  // file column -> canonical name

    static RecordSchema from_config(const Config& cfg);
    static RecordSchema load(const std::string& path);
    // FatalNCD/NonFatalNCD coded set (RELJCT2, P_CRASH1, P_CRASH2, ACC_TYPE, LIGHTING, MOTORIST_TYPE).
    static RecordSchema default_ncd(DatasetId dataset);
    // NDS analogue variables (RELATION_TO_JUNCTION, PRE_INCIDENT_MANEUVER, ...).
    static RecordSchema default_nds(DatasetId dataset);
    static RecordSchema default_for(DatasetId dataset);
};

struct IngestDiagnostic {
    int row = 0;  // 1-based data row (header is row 0)
    std::string column;
    std::string message;
};

struct IngestResult {
    std::vector<VehicleRecord> records;
    std::vector<IngestDiagnostic> diagnostics;
};

// Order-preserving ingest of a delimited dataset file. Structural problems
// (missing header column, unknown column, empty file) raise; per-row type and
// invariant failures become diagnostics and the row is dropped.
IngestResult ingest_records(std::istream& in, std::string_view source_name, const RecordSchema& schema);
IngestResult ingest_records_file(const std::string& path, const RecordSchema& schema);

CsvTable serialize_records(const std::vector<VehicleRecord>& records, const RecordSchema& schema);
void write_records_file(const std::string& path, const std::vector<VehicleRecord>& records,
                        const RecordSchema& schema);

enum class JunctionStatus { Junction, NotAJunction, Unknown };
enum class TurningStatus { Turning, NotTurning, Unknown };
std::string_view to_string(JunctionStatus s);
std::string_view to_string(TurningStatus s);
JunctionStatus junction_status_from_string(std::string_view text);
TurningStatus turning_status_from_string(std::string_view text);

struct DerivedFlags {
    JunctionStatus junction = JunctionStatus::Unknown;
    TurningStatus turning = TurningStatus::Unknown;
};

// Total mapping over the relation-to-junction code domain. Codes in neither
// set are unparseable and derive to Unknown.
struct JunctionCodeMap {
    std::string variable = "RELJCT2";
    std::set<std::string> junction_codes;
    std::set<std::string> not_junction_codes;

    static JunctionCodeMap from_config(const Config& cfg, std::string_view section = "junction_map");
    static JunctionCodeMap defaults();      // NCD RELJCT2
    static JunctionCodeMap nds_defaults();  // RELATION_TO_JUNCTION analogue
};

// A turn is indicated when any inspected variable of any vehicle in the case
// carries one of that variable's turn codes.
struct TurningCodeMap {
    struct VariableCodes {
        std::string variable;
        std::set<std::string> turn_codes;
        std::set<std::string> known_codes;  // superset of turn_codes
    };
    std::vector<VariableCodes> variables;

    static TurningCodeMap from_config(const Config& cfg, std::string_view section_prefix = "turning_map");
    static TurningCodeMap defaults();      // P_CRASH1 / P_CRASH2 / ACC_TYPE
    static TurningCodeMap nds_defaults();  // pre-incident maneuver / precipitating event / motorist 2-3
};

JunctionStatus derive_junction(const VehicleRecord& record, const JunctionCodeMap& mapping);

// Case-level: all records must share case_id. Turning if any vehicle shows a
// turn code; NotTurning only when every inspected code is known and none turn.
TurningStatus derive_turning(const std::vector<const VehicleRecord*>& records_of_case,
                             const TurningCodeMap& mapping);

// Per-record flags for a whole dataset; the case's turning status is attached
// to each of its records.
std::vector<DerivedFlags> derive_flags(const std::vector<VehicleRecord>& records,
                                       const JunctionCodeMap& junction_map, const TurningCodeMap& turning_map);

struct CohortPolicy {
    std::optional<int> min_model_year = 1997;
    std::set<BodyClass> allowed_body_classes = {BodyClass::LightPassengerVehicle};
    bool require_first_harmful_event = true;
    std::uint8_t excluded_flags = 0x1f;  // all five

    static CohortPolicy from_config(const Config& cfg, std::string_view section = "cohort");
};

struct CohortResult {
    std::vector<VehicleRecord> records;
    // reason -> count; a record is tallied once, under its first failing check
    // (ModelYear, ModelYearUnknown, BodyClass, FirstHarmfulEvent, then flags).
    std::map<std::string, std::int64_t> tally;
};

CohortResult apply_cohort_filter(const std::vector<VehicleRecord>& records, const CohortPolicy& policy);

}  // namespace scenfuse
