#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ifs_sync/config.hpp"

namespace ifs_sync {

std::string_view version();

struct CsvFile
{
    //! Appended to the output prefix, e.g. "histogram.csv".
    std::string suffix;
    std::string text;
};

//! Everything a run writes except the manifest.
struct ExperimentResult
{
    nlohmann::json report;
    std::vector<CsvFile> csv;
};

struct RunError
{
    std::string stage;
    std::string message;
};

struct RunManifest
{
    nlohmann::json config;
    std::vector<std::string> defaulted;
    std::string version;
    double duration_seconds = 0.0;
    std::vector<std::string> files;
    std::optional<RunError> error;

    bool ok() const { return !error.has_value(); }
};

nlohmann::json to_json(const RunManifest& manifest);

//! Pure computation; the output depends only on the config and seed.
ExperimentResult compute_experiment(const ExperimentConfig& cfg);

//! Sorted-key JSON with shortest round-trip floats and a final newline.
std::string dump_json(const nlohmann::json& j);

//! Shortest round-trip text for a double.
std::string format_double(double x);

/*!
 * Write <prefix>.report.json and <prefix>.<suffix> for each CSV, creating
 * the parent directory. Returns the written paths.
 */
std::vector<std::string> emit_report(const ExperimentResult& result,
                                     const std::string& prefix);

/*!
 * Compute, emit, then write <prefix>.manifest.json. Computation and I/O
 * failures are caught and recorded in the manifest error field.
 */
RunManifest run_experiment(const ExperimentConfig& cfg);

} // namespace ifs_sync
