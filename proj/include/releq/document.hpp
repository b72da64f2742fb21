#pragma once

// JSON problem documents and report serialization (JSON and CSV).

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "releq/dynamics.hpp"
#include "releq/probe.hpp"

namespace releq {

/// Malformed or out-of-domain document. what() names the offending field
/// (e.g. "positions[2][1]") or the parse position.
class DocumentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kSchemaVersion = "1";

struct ProblemDocument {
    std::string schema_version{kSchemaVersion};
    int dimension = 2;
    double exponent = -1.5;
    std::vector<double> masses;
    std::vector<double> frequencies;
    std::optional<std::vector<std::vector<double>>> positions;
    std::map<std::string, std::string> metadata;

    Problem problem() const;
    /// Throws DocumentError if the document has no positions.
    Configuration configuration() const;

    static ProblemDocument from(const Problem& problem,
                                const std::optional<Configuration>& config = std::nullopt);
};

ProblemDocument parse_document(std::string_view text);
ProblemDocument read_document(const std::filesystem::path& path);
/// Canonical form: sorted keys, two-space indent, shortest round-trip doubles.
std::string write_document(const ProblemDocument& doc);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Configuration& config);
nlohmann::json to_json(const ResidualReport& report);
nlohmann::json to_json(const ClusterDiagnostics& diag);
nlohmann::json to_json(const SolveResult& result);
nlohmann::json to_json(const EquilibriumFingerprint& fp);
nlohmann::json to_json(const MultistartResult& search);
nlohmann::json to_json(const ContinuationResult& continuation);
nlohmann::json to_json(const ProbeReport& report);

/// Columns: class, first_trial, multiplicity, d0..d{n(n-1)/2-1}, w0..w{n-1}, m0..m{n-1}.
void write_fingerprints_csv(std::ostream& out, const MultistartResult& search);
/// Columns: omega_scale, classes_found, c_hat, C_hat, trials, converged.
void write_sweep_csv(std::ostream& out, const std::vector<ProbeReport>& reports);
/// Columns: step, exponent, termination, residual_max, iterations, min_distance,
/// max_distance, max_norm.
void write_continuation_csv(std::ostream& out, const ContinuationResult& continuation);

}  // namespace releq
