#pragma once

// Versioned artifact files and tabular exports.
//
// An artifact file is a JSON envelope
//   { schema_version, kind, fingerprint, created_at, payload }
// where fingerprint is the SHA-256 of the compact, key-sorted payload text.

#include "relaynet/policy.hpp"
#include "relaynet/presets.hpp"
#include "relaynet/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace relaynet {

inline constexpr int kSchemaVersion = 1;

/// A simulation report together with what produced it.
struct ReportArtifact {
    DeploymentConfig config;
    std::string policy_fingerprint;
    double j0 = 0.0;
    SimReport report;

    bool operator==(const ReportArtifact&) const = default;
};

using Artifact = std::variant<ChannelSpec, Policy, ReportArtifact>;

/// "channel", "policy" or "report".
std::string_view artifact_kind(const Artifact& artifact);

nlohmann::json to_json(const ChannelSpec& spec);
nlohmann::json to_json(const Policy& policy);
nlohmann::json to_json(const ReportArtifact& report);
nlohmann::json to_json(const SimReport& report);
nlohmann::json to_json(const DeploymentConfig& cfg);
nlohmann::json payload_of(const Artifact& artifact);

/// Inverse of to_json. Throw FormatError on missing or mistyped fields.
ChannelSpec channel_from_json(const nlohmann::json& j);
Policy policy_from_json(const nlohmann::json& j);
ReportArtifact report_from_json(const nlohmann::json& j);
DeploymentConfig config_from_json(const nlohmann::json& j);

/// Hex SHA-256 of payload.dump().
std::string fingerprint(const nlohmann::json& payload);
std::string fingerprint(const Artifact& artifact);

struct Envelope {
    int schema_version = kSchemaVersion;
    std::string kind;
    std::string fingerprint;
    std::string created_at;  ///< UTC, ISO 8601
    nlohmann::json payload;
};

/// Writes atomically (temporary file in the same directory, then rename) and
/// returns the fingerprint.
std::string save(const Artifact& artifact, const std::filesystem::path& path);

/// Reads and checks an envelope. Errors: IoError (unreadable), FormatError
/// (not an envelope), VersionError (other schema_version), HashError
/// (fingerprint does not match the payload).
Envelope load_envelope(const std::filesystem::path& path);
Artifact load(const std::filesystem::path& path);

/// Human-oriented channel description. Accepts linear or logarithmic units:
/// eta, sigma_dB, alpha_gain_dB | alpha_gain, psi_dBm | psi_mw,
/// p_rcv_min_dBm | p_rcv_min_mw, step_m, levels_dBm | levels_mW,
/// r_max_steps, theta. Missing keys take the bundled defaults.
ChannelSpec channel_from_config(const nlohmann::json& j);
/// A channel config file or a saved channel artifact.
ChannelSpec load_channel(const std::filesystem::path& path);

struct TableRow {
    DeploymentConfig config;
    double j0 = 0.0;
    SimReport report;
};

/// Inputs for export_csv; each figure reads only what it needs.
struct ExportBundle {
    std::vector<Policy> policies;
    std::vector<TableRow> rows;
    std::vector<ComparisonRow> comparison;
    std::optional<LinkPowerModel> model;
    double gamma_max_dbm = -20.0;  ///< fig5 slice
    double step_m = 2.0;           ///< fig2 distances
};

/// fig2, fig4, fig5, table1, table2, table3, pmf, memory_slice.
const std::vector<std::string>& figure_ids();

/// Tidy CSV with a header row. Throws DomainError for an unsupported id or
/// when the bundle lacks the inputs the figure needs.
std::string export_csv(std::string_view figure, const ExportBundle& bundle);

/// Writes text atomically.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

} // namespace relaynet
