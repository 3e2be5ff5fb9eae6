#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ifs_sync/analysis.hpp"
#include "ifs_sync/cocycle.hpp"
#include "ifs_sync/geometry.hpp"
#include "ifs_sync/measures.hpp"

namespace ifs_sync {

//! Invalid configuration; path names the offending field, e.g.
//! "system.maps[0].c".
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          path_(std::move(path))
    {
    }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

enum class ExperimentKind
{
    lyapunov,
    spectrum,
    stationary,
    pullback,
    sync,
    minimality,
    baker_verify,
    isolate,
    unique
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

struct LyapunovExperiment
{
    std::size_t n = 100000;
    std::size_t burn = 1000;
    std::size_t blocks = 10;
    std::optional<Point> x0;
    //! Steps written to <prefix>.trajectory.csv (0 = none).
    std::size_t dump_trajectory = 0;
};

struct StationaryExperiment
{
    std::size_t burn = 1000;
    std::size_t n_keep = 100000;
    //! Circle arcs, or sphere bands (with twice as many sectors).
    std::size_t resolution = 256;
    //! Ulam matrix samples per cell; 0 skips the Ulam computation.
    std::size_t samples_per_cell = 0;
    double tol = 1e-10;
    std::size_t max_iter = 1000000;
    double coverage_floor = 0.01;
};

struct PullbackExperiment
{
    std::size_t depth = 500;
    double cluster_radius = 1e-4;
    std::size_t ensemble = 200;
    std::size_t burn = 1000;
    //! Orbit steps between ensemble points drawn from the stationary run.
    std::size_t thin = 10;
};

struct SyncExperiment
{
    std::size_t pairs = 500;
    std::size_t n = 2000;
    double tol = 1e-6;
    std::size_t trace_pairs = 10;
};

struct MinimalityExperiment
{
    std::size_t resolution = 512;
    std::size_t budget = 5000;
    double x0 = 0.0;
};

struct BakerExperiment
{
    std::size_t words = 1000;
    std::size_t length = 40;
    std::size_t points = 100000;
    std::size_t steps = 10;
    std::size_t bins = 16;
};

struct IsolateExperiment
{
    Arc arc;
    std::size_t samples = 1000;
};

struct UniqueExperiment
{
    std::size_t burn = 1000;
    std::size_t n_keep = 100000;
    std::vector<InitialDistribution> inits;
    std::size_t sphere_resolution = 8;
};

using ExperimentParams = std::variant<LyapunovExperiment,
                                      StationaryExperiment,
                                      PullbackExperiment,
                                      SyncExperiment,
                                      MinimalityExperiment,
                                      BakerExperiment,
                                      IsolateExperiment,
                                      UniqueExperiment>;

struct ExperimentConfig
{
    System system;
    //! Canonical form of the system block.
    nlohmann::json system_json;
    ExperimentKind kind;
    ExperimentParams params;
    std::uint64_t seed = 0;
    std::string output;
    //! Experiment fields filled from defaults, in schema order.
    std::vector<std::string> defaulted;
};

//! Strict parse: unknown fields are rejected, defaults are recorded.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config(std::string_view text);

//! Full canonical config including filled defaults.
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json diffeo_to_json(const Diffeo& map);
Diffeo diffeo_from_json(const nlohmann::json& j, Manifold manifold,
                        const std::string& path);

//! JSON Schema (draft 2020-12) describing the config document.
nlohmann::json config_schema();

} // namespace ifs_sync
