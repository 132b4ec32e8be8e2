#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenfuse/common.hpp"
#include "scenfuse/config.hpp"
#include "scenfuse/csv.hpp"
#include "scenfuse/exposure.hpp"
#include "scenfuse/numfmt.hpp"
#include "scenfuse/params.hpp"
#include "scenfuse/rates.hpp"
#include "scenfuse/records.hpp"
#include "scenfuse/road_graph.hpp"
#include "scenfuse/scenario.hpp"
#include "scenfuse/synth.hpp"
#include "scenfuse/testgen.hpp"
#include "scenfuse/trip.hpp"
#include "scenfuse/turn_detect.hpp"

namespace fs = std::filesystem;
using namespace scenfuse;

namespace {

// Project configuration plus resolved global flags. Paths inside the config
// file resolve against the file's own directory; flag paths stay relative to
// the working directory.
struct Project {
    Config cfg;
    fs::path base;
    fs::path out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;

    std::string resolve(const std::string& path) const {
        fs::path p(path);
        if (p.is_absolute()) return path;
        return (base / p).string();
    }

    std::string out_file(const std::string& name) const { return (out / name).string(); }

    // Input path from the config, falling back to a standard pipeline file in
    // the output directory; the file (or directory) must exist.
    std::string input(const std::string& section, const std::string& key,
                      const std::string& fallback_name) const {
        std::string path;
        if (auto v = cfg.get(section, key)) {
            path = resolve(*v);
        } else if (!fallback_name.empty()) {
            path = out_file(fallback_name);
        } else {
            fail_validation("MissingKey", "[" + section + "] " + key + " is required");
        }
        if (!fs::exists(path)) {
            fail_io("FileNotFound", "[" + section + "] " + key + ": " + path + " does not exist");
        }
        return path;
    }

    std::optional<std::string> optional_input(const std::string& section, const std::string& key) const {
        auto v = cfg.get(section, key);
        if (!v) return std::nullopt;
        std::string path = resolve(*v);
        if (!fs::exists(path)) {
            fail_io("FileNotFound", "[" + section + "] " + key + ": " + path + " does not exist");
        }
        return path;
    }
};

void validate_project(const Config& cfg) {
    cfg.check_sections({"", "project", "synth", "ingest", "cohort", "derive", "detect", "select",
                        "exposure", "rates", "params", "gen"});
    cfg.check_keys("", {});
    cfg.check_keys("project", {"output_dir"});
    cfg.check_keys("synth", {"spec"});
    cfg.check_keys("ingest", {"data", "schema", "dataset"});
    cfg.check_keys("cohort", {"data", "schema", "dataset", "policy"});
    cfg.check_keys("derive", {"data", "schema", "dataset", "maps"});
    cfg.check_keys("detect", {"trips", "nodes", "segments", "params"});
    cfg.check_keys("select", {"mode", "scenario", "records", "flags", "events", "schema", "dataset",
                              "weighted"});
    cfg.check_keys("exposure", {"vio", "aam", "cy_from", "cy_to", "my_min"});
    cfg.check_keys("rates", {"table"});
    cfg.check_keys("params", {"events", "variables", "bins", "x", "y", "x_bins", "y_bins", "smoothing",
                              "outlier_k"});
    cfg.check_keys("gen", {"logical", "count", "strategy", "seed"});
}

Project load_project(const std::string& config_path, bool explicit_path, const std::string& out_override,
                     std::optional<std::uint64_t> seed, int jobs) {
    Project project;
    if (fs::exists(config_path)) {
        project.cfg = Config::load(config_path);
    } else if (explicit_path) {
        fail_io("FileNotFound", "cannot open " + config_path);
    } else {
        project.cfg = Config::parse("", config_path);
    }
    validate_project(project.cfg);
    project.base = fs::path(config_path).parent_path();
    if (!out_override.empty()) {
        project.out = fs::path(out_override);
    } else {
        project.out = fs::path(project.resolve(project.cfg.get_or("project", "output_dir", "out")));
    }
    project.seed = seed;
    project.jobs = jobs;
    return project;
}

// Schema choice shared by every record-reading command: an explicit schema
// file wins, otherwise the named dataset's default schema.
RecordSchema schema_for(const Project& project, const std::string& section) {
    if (auto path = project.optional_input(section, "schema")) return RecordSchema::load(*path);
    DatasetId dataset = dataset_from_string(project.cfg.get_or(section, "dataset", "FatalNCD"));
    return RecordSchema::default_for(dataset);
}

bool is_ncd(DatasetId dataset) {
    return dataset == DatasetId::FatalNcd || dataset == DatasetId::NonFatalNcd;
}

std::vector<VehicleRecord> read_records(const std::string& path, const RecordSchema& schema) {
    IngestResult result = ingest_records_file(path, schema);
    if (!result.diagnostics.empty()) {
        const IngestDiagnostic& first = result.diagnostics.front();
        fail_validation("DirtyInput", path + ": row " + std::to_string(first.row) + ": " + first.message);
    }
    return std::move(result.records);
}

void run_synth(const Project& project) {
    SynthSpec spec;
    if (auto path = project.optional_input("synth", "spec")) spec = SynthSpec::load(*path);
    if (project.seed) spec.seed = *project.seed;
    spec.validate();

    fs::create_directories(project.out);
    RoadGraph graph = make_grid_graph(spec.grid);
    graph.save(project.out_file("road_nodes.csv"), project.out_file("road_segments.csv"));

    SynthRecords records = gen_records(spec);
    write_records_file(project.out_file("records.csv"), records.records,
                       RecordSchema::default_for(spec.records.dataset));
    records.truth.save(project.out_file("records_truth.ini"));

    fs::create_directories(project.out / "trips");
    std::vector<TurnEvent> truth_events;
    std::int64_t trip_count = 0;
    for (std::int64_t i = 0; i < spec.trips.count; ++i) {
        SynthTrip synth = gen_trip(spec, graph, random_route(spec, graph, i));
        write_trip_file((project.out / "trips" / (synth.trip.trip_id + ".csv")).string(), synth.trip);
        truth_events.insert(truth_events.end(), synth.truth.begin(), synth.truth.end());
        ++trip_count;
    }
    write_events_file(project.out_file("events_truth.csv"), truth_events);

    std::cout << "records = " << records.truth.count << "\n";
    std::cout << "record_matches = " << records.truth.match_count << "\n";
    std::cout << "cohort_violations = " << records.truth.violation_count << "\n";
    std::cout << "trips = " << trip_count << "\n";
    std::cout << "truth_events = " << truth_events.size() << "\n";
    std::cout << "nodes = " << graph.nodes().size() << "\n";
    std::cout << "output_dir = " << project.out.string() << "\n";
}

void run_ingest(const Project& project) {
    std::string data = project.input("ingest", "data", "records.csv");
    RecordSchema schema = schema_for(project, "ingest");
    IngestResult result = ingest_records_file(data, schema);

    fs::create_directories(project.out);
    write_records_file(project.out_file("ingested.csv"), result.records, schema);
    CsvTable diagnostics;
    diagnostics.header = {"row", "column", "message"};
    for (const auto& d : result.diagnostics) {
        diagnostics.rows.push_back({std::to_string(d.row), d.column, d.message});
    }
    write_csv_file(project.out_file("ingest_diagnostics.csv"), diagnostics);

    std::cout << "rows = " << result.records.size() << "\n";
    std::cout << "diagnostics = " << result.diagnostics.size() << "\n";
}

void run_cohort(const Project& project) {
    std::string data = project.input("cohort", "data", "ingested.csv");
    RecordSchema schema = schema_for(project, "cohort");
    std::vector<VehicleRecord> records = read_records(data, schema);

    CohortPolicy policy;
    if (auto path = project.optional_input("cohort", "policy")) {
        policy = CohortPolicy::from_config(Config::load(*path));
    }
    CohortResult result = apply_cohort_filter(records, policy);

    fs::create_directories(project.out);
    write_records_file(project.out_file("cohort.csv"), result.records, schema);
    std::ofstream tally(project.out_file("cohort_tally.ini"), std::ios::binary);
    if (!tally) fail_io("FileNotWritable", "cannot write " + project.out_file("cohort_tally.ini"));
    tally << "[tally]\n";
    for (const auto& [reason, count] : result.tally) tally << reason << " = " << count << "\n";

    std::cout << "input = " << records.size() << "\n";
    std::cout << "kept = " << result.records.size() << "\n";
    for (const auto& [reason, count] : result.tally) {
        std::cout << "removed." << reason << " = " << count << "\n";
    }
}

void run_derive(const Project& project) {
    std::string data = project.input("derive", "data", "cohort.csv");
    RecordSchema schema = schema_for(project, "derive");
    std::vector<VehicleRecord> records = read_records(data, schema);

    JunctionCodeMap junction_map;
    TurningCodeMap turning_map;
    if (auto path = project.optional_input("derive", "maps")) {
        Config maps = Config::load(*path);
        junction_map = JunctionCodeMap::from_config(maps);
        turning_map = TurningCodeMap::from_config(maps);
    } else if (is_ncd(schema.dataset)) {
        junction_map = JunctionCodeMap::defaults();
        turning_map = TurningCodeMap::defaults();
    } else {
        junction_map = JunctionCodeMap::nds_defaults();
        turning_map = TurningCodeMap::nds_defaults();
    }

    std::vector<DerivedFlags> flags = derive_flags(records, junction_map, turning_map);
    CsvTable table;
    table.header = {"case_id", "vehicle_index", "junction", "turning"};
    std::map<std::string, std::int64_t> counts;
    for (size_t i = 0; i < records.size(); ++i) {
        table.rows.push_back({records[i].case_id, std::to_string(records[i].vehicle_index),
                              std::string(to_string(flags[i].junction)),
                              std::string(to_string(flags[i].turning))});
        ++counts["junction." + std::string(to_string(flags[i].junction))];
        ++counts["turning." + std::string(to_string(flags[i].turning))];
    }
    fs::create_directories(project.out);
    write_csv_file(project.out_file("flags.csv"), table);

    std::cout << "rows = " << records.size() << "\n";
    for (const auto& [key, count] : counts) std::cout << key << " = " << count << "\n";
}

void run_detect(const Project& project) {
    std::string trips_dir = project.input("detect", "trips", "trips");
    std::string nodes = project.input("detect", "nodes", "road_nodes.csv");
    std::string segments = project.input("detect", "segments", "road_segments.csv");
    TurnDetectParams params;
    if (auto path = project.optional_input("detect", "params")) {
        params = TurnDetectParams::from_config(Config::load(*path));
    }

    RoadGraph graph = RoadGraph::load(nodes, segments);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(trips_dir)) {
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail_validation("NoTrips", "no trip files under " + trips_dir);
    std::vector<Trip> trips;
    trips.reserve(files.size());
    for (const auto& file : files) trips.push_back(load_trip_file(file.string()));

    std::vector<TurnEvent> events = detect_turns_many(trips, graph, params, project.jobs);
    fs::create_directories(project.out);
    write_events_file(project.out_file("events.csv"), events);

    std::cout << "trips = " << trips.size() << "\n";
    std::cout << "events = " << events.size() << "\n";
}

std::vector<DerivedFlags> read_flags(const std::string& path, const std::vector<VehicleRecord>& records) {
    CsvTable table = read_csv_file(path);
    size_t case_col = table.require_column("case_id");
    size_t vehicle_col = table.require_column("vehicle_index");
    size_t junction_col = table.require_column("junction");
    size_t turning_col = table.require_column("turning");
    if (table.rows.size() != records.size()) {
        fail_validation("FlagMismatch", path + ": " + std::to_string(table.rows.size()) +
                                            " flag rows for " + std::to_string(records.size()) + " records");
    }
    std::vector<DerivedFlags> flags;
    flags.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& row = table.rows[i];
        if (row[case_col] != records[i].case_id ||
            row[vehicle_col] != std::to_string(records[i].vehicle_index)) {
            fail_validation("FlagMismatch", path + ": row " + std::to_string(i + 1) +
                                                " does not line up with " + records[i].case_id);
        }
        DerivedFlags f;
        f.junction = junction_status_from_string(row[junction_col]);
        f.turning = turning_status_from_string(row[turning_col]);
        flags.push_back(f);
    }
    return flags;
}

void run_select(const Project& project) {
    ScenarioDefinition def = ScenarioDefinition::load(project.input("select", "scenario", ""));
    std::string mode = project.cfg.get_or("select", "mode", "records");
    bool weighted = project.cfg.get_bool("select", "weighted", false);

    Proportions props;
    if (mode == "records") {
        RecordSchema schema = schema_for(project, "select");
        std::vector<VehicleRecord> records =
            read_records(project.input("select", "records", "cohort.csv"), schema);
        std::vector<DerivedFlags> flags =
            read_flags(project.input("select", "flags", "flags.csv"), records);
        props = record_proportions(def, records, flags, schema, weighted);
    } else if (mode == "events") {
        std::vector<TurnEvent> events = load_events_file(project.input("select", "events", "events.csv"));
        TurnDetectParams params;
        if (auto path = project.optional_input("detect", "params")) {
            params = TurnDetectParams::from_config(Config::load(*path));
        }
        props = event_proportions(def, events, params);
    } else {
        fail_validation("BadMode", "select mode must be records or events, not '" + mode + "'");
    }

    fs::create_directories(project.out);
    std::ofstream out(project.out_file("selection.ini"), std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + project.out_file("selection.ini"));
    out << "[selection]\n";
    out << "scenario = " << def.name << "\n";
    out << "mode = " << mode << "\n";
    out << "numerator = " << format_double(props.numerator) << "\n";
    out << "denominator = " << format_double(props.denominator) << "\n";
    out << "fraction = " << format_double(props.fraction) << "\n";
    out << "match_count = " << props.match_count << "\n";
    out << "no_match_count = " << props.no_match_count << "\n";
    out << "unknown_count = " << props.unknown_count << "\n";

    std::cout << "scenario = " << def.name << "\n";
    std::cout << "numerator = " << format_double(props.numerator) << "\n";
    std::cout << "denominator = " << format_double(props.denominator) << "\n";
    std::cout << "fraction = " << format_double(props.fraction) << "\n";
    std::cout << "match_count = " << props.match_count << "\n";
    std::cout << "no_match_count = " << props.no_match_count << "\n";
    std::cout << "unknown_count = " << props.unknown_count << "\n";
}

void run_exposure(const Project& project) {
    VioTable vio = VioTable::load(project.input("exposure", "vio", ""));
    AamTable aam = AamTable::load(project.input("exposure", "aam", ""));
    int cy_from = static_cast<int>(require_int(project.cfg.require("exposure", "cy_from"), "cy_from"));
    int cy_to = static_cast<int>(require_int(project.cfg.require("exposure", "cy_to"), "cy_to"));
    int my_min = static_cast<int>(require_int(project.cfg.require("exposure", "my_min"), "my_min"));

    double vmt = vmt_estimate(vio, aam, cy_from, cy_to, my_min);

    fs::create_directories(project.out);
    std::ofstream out(project.out_file("exposure.ini"), std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + project.out_file("exposure.ini"));
    out << "[exposure]\n";
    out << "cy_from = " << cy_from << "\n";
    out << "cy_to = " << cy_to << "\n";
    out << "my_min = " << my_min << "\n";
    out << "vmt_miles = " << format_double(vmt) << "\n";
    out << "vmt_trillions = " << format_trillions(vmt) << "\n";

    std::cout << "vmt_miles = " << format_double(vmt) << "\n";
    std::cout << "vmt_trillions = " << format_trillions(vmt) << "\n";
}

void run_rates(const Project& project) {
    std::vector<RateRow> rows = compute_rates(load_rate_rows_file(project.input("rates", "table", "")));
    fs::create_directories(project.out);
    write_rate_summary_file(project.out_file("rate_summary.csv"), rows);
    for (const auto& row : rows) {
        std::cout << "rate." << row.category << ".overall = " << display(row.overall, 2) << "\n";
        std::cout << "rate." << row.category << ".scenario = " << display(row.scenario, 2) << "\n";
    }
    std::cout << "summary = " << project.out_file("rate_summary.csv") << "\n";
}

double event_value(const TurnEvent& event, const std::string& variable) {
    if (variable == "net_yaw") return event.net_yaw;
    if (variable == "gps_heading_change") return event.gps_heading_change;
    if (variable == "segment_angle") return event.segment_angle;
    if (variable == "mean_speed") return event.mean_speed;
    if (variable == "max_abs_lat_accel") return event.max_abs_lat_accel;
    if (variable == "duration") return event.duration;
    fail_validation("UnknownVariable", "no event variable '" + variable + "'");
}

std::string event_units(const std::string& variable) {
    if (variable == "mean_speed") return "m/s";
    if (variable == "max_abs_lat_accel") return "m/s^2";
    if (variable == "duration") return "s";
    return "deg";
}

void run_params(const Project& project) {
    std::vector<TurnEvent> events = load_events_file(project.input("params", "events", "events.csv"));
    std::vector<std::string> variables = project.cfg.get_list("params", "variables");
    if (variables.empty()) variables = {"net_yaw", "mean_speed", "max_abs_lat_accel"};
    int bins = static_cast<int>(project.cfg.get_int("params", "bins", 20));

    fs::create_directories(project.out / "params");
    for (const auto& variable : variables) {
        std::vector<double> values;
        values.reserve(events.size());
        for (const auto& event : events) values.push_back(event_value(event, variable));
        ParameterDistribution dist = fit_histogram(values, bins, variable, event_units(variable));
        dist.save((project.out / "params" / (variable + ".dist.ini")).string());
        write_histogram_csv_file((project.out / "params" / (variable + ".hist.csv")).string(), dist);
        std::cout << variable << ".n = " << dist.n << "\n";
        std::cout << variable << ".mean = " << format_double(dist.mean) << "\n";
        std::cout << variable << ".sd = " << format_double(dist.sd) << "\n";
        if (auto k = project.cfg.get("params", "outlier_k")) {
            auto outliers = select_outliers(values, require_double(*k, "outlier_k"));
            std::cout << variable << ".outliers = " << outliers.size() << "\n";
        }
    }

    auto x_var = project.cfg.get("params", "x");
    auto y_var = project.cfg.get("params", "y");
    if (x_var.has_value() != y_var.has_value()) {
        fail_validation("MissingKey", "[params] x and y must be set together");
    }
    if (x_var) {
        std::vector<double> x, y;
        for (const auto& event : events) {
            x.push_back(event_value(event, *x_var));
            y.push_back(event_value(event, *y_var));
        }
        int x_bins = static_cast<int>(project.cfg.get_int("params", "x_bins", bins));
        int y_bins = static_cast<int>(project.cfg.get_int("params", "y_bins", bins));
        std::optional<int> smoothing;
        if (project.cfg.has("params", "smoothing")) {
            smoothing = static_cast<int>(project.cfg.get_int("params", "smoothing", 1));
        }
        BivariateDensity density =
            fit_bivariate(x, y, fit_histogram(x, x_bins, *x_var, "").bin_edges,
                          fit_histogram(y, y_bins, *y_var, "").bin_edges, smoothing, *x_var, *y_var);
        std::string name = *x_var + "_" + *y_var + ".bivariate.csv";
        write_bivariate_csv_file((project.out / "params" / name).string(), density);
        std::cout << "bivariate.n = " << density.n << "\n";
    }
}

void run_gen(const Project& project, std::optional<std::int64_t> count_flag,
             const std::string& strategy_flag) {
    LogicalScenario logical = load_logical(project.input("gen", "logical", ""));
    std::int64_t count = count_flag ? *count_flag : project.cfg.get_int("gen", "count", 100);
    std::string strategy_name =
        strategy_flag.empty() ? project.cfg.get_or("gen", "strategy", "IndependentMarginal") : strategy_flag;
    SamplingStrategy strategy = sampling_strategy_from_string(strategy_name);
    std::uint64_t seed = 1;
    if (project.seed) {
        seed = *project.seed;
    } else {
        std::int64_t configured = project.cfg.get_int("gen", "seed", 1);
        if (configured < 0) fail_validation("InvalidSpec", "gen seed must be non-negative");
        seed = static_cast<std::uint64_t>(configured);
    }

    std::vector<ConcreteScenario> concretes = sample_concrete(logical, count, strategy, seed);
    BatchResult result = emit_batch(logical, concretes, (project.out / "scenarios").string());

    std::cout << "road = " << result.road_file << "\n";
    std::cout << "manifest = " << result.manifest_file << "\n";
    std::cout << "scenarios = " << result.scenario_files.size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"record and naturalistic-driving scenario fusion toolkit"};
    app.require_subcommand(1);

    std::string config_path = "scenfuse.ini";
    auto* config_opt = app.add_option("-c,--config", config_path, "project configuration file")
                           ->envname("SCENFUSE_CONFIG");
    std::string out_override;
    app.add_option("--out", out_override, "output directory (overrides the config)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override every configured seed");
    int jobs = 1;
    app.add_option("--jobs", jobs, "worker thread bound")->check(CLI::PositiveNumber);

    auto* synth_cmd = app.add_subcommand("synth", "generate fixture records, trips, and ground truth");
    auto* ingest_cmd = app.add_subcommand("ingest", "validate and normalize a record dataset");
    auto* cohort_cmd = app.add_subcommand("cohort", "apply the vehicle cohort filter");
    auto* derive_cmd = app.add_subcommand("derive", "derive junction and turning flags");
    auto* detect_cmd = app.add_subcommand("detect", "detect turns across a trip directory");
    auto* select_cmd = app.add_subcommand("select", "evaluate a scenario definition");
    auto* exposure_cmd = app.add_subcommand("exposure", "estimate mileage exposure");
    auto* rates_cmd = app.add_subcommand("rates", "compute per-mileage rate summaries");
    auto* params_cmd = app.add_subcommand("params", "fit parameter distributions from events");
    auto* gen_cmd = app.add_subcommand("gen", "emit concrete test scenarios");

    std::int64_t gen_count = 0;
    auto* count_opt = gen_cmd->add_option("-n,--count", gen_count, "scenarios to sample");
    std::string gen_strategy;
    gen_cmd->add_option("--strategy", gen_strategy, "sampling strategy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        std::optional<std::uint64_t> seed;
        if (seed_opt->count() > 0) seed = seed_value;
        Project project = load_project(config_path, config_opt->count() > 0, out_override, seed, jobs);

        if (synth_cmd->parsed()) run_synth(project);
        if (ingest_cmd->parsed()) run_ingest(project);
        if (cohort_cmd->parsed()) run_cohort(project);
        if (derive_cmd->parsed()) run_derive(project);
        if (detect_cmd->parsed()) run_detect(project);
        if (select_cmd->parsed()) run_select(project);
        if (exposure_cmd->parsed()) run_exposure(project);
        if (rates_cmd->parsed()) run_rates(project);
        if (params_cmd->parsed()) run_params(project);
        if (gen_cmd->parsed()) {
            std::optional<std::int64_t> count_flag;
            if (count_opt->count() > 0) count_flag = gen_count;
            run_gen(project, count_flag, gen_strategy);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Io ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
