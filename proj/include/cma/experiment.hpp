#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cma/continuation.hpp"
#include "cma/estimates.hpp"

namespace cma {

inline constexpr const char* kToolVersion = "1.0.0";

struct BundledScenario {
    const char* name;
    const char* text;
};
const std::vector<BundledScenario>& bundled_scenarios();
std::optional<std::string> bundled_scenario_text(const std::string& name);

struct OutputSettings {
    std::string directory = "runs";
    std::vector<std::string> formats{"csv", "txt"};
    bool write_fields = true;
};

struct ParsedConfig {
    Scenario scenario;
    OutputSettings output;
    // Canonical rendering of every resolved value, defaults included.
    std::string echo;
    std::uint64_t hash = 0;
    // Hash of the echo without the grid size and output settings; records with equal
    // schema hashes describe the same experiment at possibly different resolutions.
    std::uint64_t schema_hash = 0;
    std::vector<std::string> notes;
};

struct ParseOptions {
    std::optional<int> resolution_override;
    // Skip mass balance and constant resolution (syntax and semantics only).
    bool prepare = true;
};

// Throws ConfigError with line/column on syntax or semantic problems.
ParsedConfig parse_config(const std::string& text, const ParseOptions& opt = {});
std::string hash_hex(std::uint64_t h);
std::uint64_t fnv1a64(const std::string& s);

struct RunRecord {
    std::string config_hash;
    std::string schema_hash;
    std::string version;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    static RunRecord from_csv(const std::string& csv);
    int column(const std::string& name) const;
};

struct RunFlags {
    bool strict = false;
    std::optional<std::string> output_dir;
    bool write = true;
};

enum ExitCode { kExitOk = 0, kExitVerdict = 1, kExitSolver = 2, kExitConfig = 3 };

struct RunOutcome {
    RunRecord record;
    EstimateReport report;
    ContinuationRun run;
    std::string verdict_text;
    std::string directory;
    int exit_code = kExitOk;
};

RunRecord make_record(const ParsedConfig& cfg, const std::vector<ContinuationState>& states,
                      const EstimateReport& report);
std::string verdict_summary(const ParsedConfig& cfg, const EstimateReport& report, const ContinuationRun& run,
                            int exit_code);
int exit_code_for(const EstimateReport& report, const ContinuationRun& run, bool strict);
std::string run_directory(const ParsedConfig& cfg, const RunFlags& flags);

RunOutcome run(const ParsedConfig& cfg, const RunFlags& flags = {});
// Recomputes every estimate from the fields stored by a previous run of the same config.
RunOutcome verify(const ParsedConfig& cfg, const RunFlags& flags = {});

void write_field(const std::string& path, const GridField& f, double eps);
GridField read_field(const std::string& path, const TorusSpec& spec, double* eps = nullptr);

struct ColumnTolerance {
    double abs = 0.0;
    double rel = 0.0;
};

struct ColumnDiff {
    std::string column;
    double max_abs = 0.0;
    double max_rel = 0.0;
    int row = -1;
    bool within = true;
};

struct CompareResult {
    std::vector<ColumnDiff> columns;
    std::vector<ColumnDiff> exceeded() const;
    bool identical = false;
};

std::map<std::string, ColumnTolerance> default_tolerances();
// Throws InputError when the two records do not share a schema.
CompareResult compare(const RunRecord& a, const RunRecord& b,
                      const std::map<std::string, ColumnTolerance>& tol = default_tolerances());

// A run directory or a path to its record.csv.
RunRecord load_record(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cma
