#pragma once

#include <tclm/characterize.hpp>
#include <tclm/fit.hpp>
#include <tclm/integrator.hpp>
#include <tclm/model.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tclm {

inline constexpr int kReportSchemaVersion = 1;
std::string_view tool_version() noexcept;

struct PatientConfig {
    std::string id;
    ModelParams params;
    double u0 = 1e7;
    double i0 = 0.0;
    double v0 = 0.0;
    std::string source;

    InitialCondition initial_condition() const { return {{u0, i0, v0}, 0.0}; }
};

/// Nine-patient cohort, U0 = 1e7, I0 = 0, V0 = -K0 c / beta.
std::vector<PatientConfig> builtin_patients();

/// Parses {patients: [{id, beta, delta, p, c, u0, i0, v0[, source]}]}.
/// Throws ParseError naming the offending row and field.
std::vector<PatientConfig> parse_patients(const nlohmann::json& doc);
std::vector<PatientConfig> load_patients(const std::filesystem::path& path);
nlohmann::json patients_to_json(std::span<const PatientConfig> patients);

/// Locale-independent, 17 significant digits.
std::string format_double(double value);

/// Header `t,U,I,V` (plus `t_pso` when an onset offset is given).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::optional<double> pso_offset = std::nullopt);
nlohmann::json trajectory_to_json(const Trajectory& traj);
nlohmann::json events_to_json(std::span<const Event> events);

/// Header `t_days,viral_load,below_lod`. Throws ParseError on malformed rows
/// or non-increasing times.
std::vector<Measurement> read_measurements_csv(std::istream& is);
std::vector<Measurement> read_measurements_csv(const std::filesystem::path& path);
void write_measurements_csv(std::ostream& os, std::span<const Measurement> data);

nlohmann::json to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InitialCondition& x0);
InitialCondition initial_condition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IntegratorConfig& cfg);
IntegratorConfig integrator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DEConfig& de);
nlohmann::json to_json(const FitBounds& bounds);
nlohmann::json to_json(const CharacterizationReport& report);
nlohmann::json to_json(const FitResult& result);

/// Rows in input order. Leading columns follow the characterization table
/// (U_c, U_inf, R0, K0, t_I_max, t_c, t_V_max, V_max); the remaining columns
/// are additions.
struct Table2Row {
    std::string id;
    CharacterizationReport report;
};
void write_table2_csv(std::ostream& os, std::span<const Table2Row> rows, bool with_alpha);

/// Self-contained SVG: log10 V(t) and log10 U(t).
std::string trajectory_svg(const Trajectory& traj, std::string_view title);

/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace tclm
