#include "ifs_sync/experiment.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ifs_sync/analysis.hpp"
#include "ifs_sync/driving.hpp"
#include "ifs_sync/errors.hpp"
#include "ifs_sync/measures.hpp"

#ifndef IFS_SYNC_VERSION
#define IFS_SYNC_VERSION "0.0.0"
#endif

namespace ifs_sync {

using nlohmann::json;

std::string_view version() { return IFS_SYNC_VERSION; }

std::string format_double(double x)
{
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) {
        throw ComputationError("cannot format double");
    }
    return std::string(buf.data(), end);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

namespace {

//! CSV builder: header row, comma separator, LF endings.
class Csv
{
  public:
    explicit Csv(std::initializer_list<std::string_view> header)
    {
        bool first = true;
        for (auto h : header) {
            if (!first) {
                out_ << ',';
            }
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    Csv& cell(double x)
    {
        sep();
        out_ << format_double(x);
        return *this;
    }

    Csv& cell(std::size_t n)
    {
        sep();
        out_ << n;
        return *this;
    }

    Csv& cell(const Point& p)
    {
        if (const auto* c = std::get_if<CirclePoint>(&p)) {
            return cell(c->x);
        }
        const auto& v = std::get<SpherePoint>(p).v;
        return cell(v.x()).cell(v.y()).cell(v.z());
    }

    void end_row()
    {
        out_ << '\n';
        fresh_ = true;
    }

    std::string str() const { return out_.str(); }

  private:
    void sep()
    {
        if (!fresh_) {
            out_ << ',';
        }
        fresh_ = false;
    }

    std::ostringstream out_;
    bool fresh_ = true;
};

json point_json(const Point& p)
{
    if (const auto* c = std::get_if<CirclePoint>(&p)) {
        return c->x;
    }
    const auto& v = std::get<SpherePoint>(p).v;
    return json::array({v.x(), v.y(), v.z()});
}

template<class T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

CsvFile histogram_csv(const std::string& suffix, const UlamHistogram& h)
{
    Csv csv{"cell_index", "mass"};
    for (std::size_t i = 0; i < h.mass.size(); ++i) {
        csv.cell(i).cell(h.mass[i]);
        csv.end_row();
    }
    return {suffix, csv.str()};
}

ExperimentResult run_lyapunov(const ExperimentConfig& cfg,
                              const LyapunovExperiment& p, Rng& rng)
{
    const System& sys = cfg.system;
    LyapunovParams lp;
    lp.n = p.n;
    lp.burn = p.burn;
    lp.blocks = p.blocks;
    lp.start = p.x0;
    Rng orbit = rng.fork(0);
    const LyapunovEstimate est = cfg.kind == ExperimentKind::lyapunov
                                     ? lyapunov_top(sys, lp, orbit)
                                     : lyapunov_spectrum(sys, lp, orbit);
    ExperimentResult out;
    out.report = {{"exponents", est.exponents},
                  {"std_errors", est.std_errors},
                  {"steps", est.steps},
                  {"burn", est.burn},
                  {"blocks", est.blocks},
                  {"dimension", dimension(sys.manifold())}};

    if (p.dump_trajectory > 0) {
        Rng traj = rng.fork(1);
        const Point x0 = p.x0 ? *p.x0 : uniform_point(sys.manifold(), traj);
        const Drive w = sys.sample_drive(p.dump_trajectory, traj);
        const std::vector<Point> states = trajectory(sys, w, x0);
        const bool circle = sys.manifold() == Manifold::circle;
        Csv csv = [&] {
            if (sys.is_finite()) {
                return circle ? Csv{"step", "symbol", "x"}
                              : Csv{"step", "symbol", "x", "y", "z"};
            }
            return circle ? Csv{"step", "a", "x"}
                          : Csv{"step", "a1", "a2", "a3", "x", "y", "z"};
        }();
        for (std::size_t j = 0; j + 1 < states.size(); ++j) {
            csv.cell(j);
            if (const auto* sw = std::get_if<SymbolWord>(&w)) {
                csv.cell(static_cast<std::size_t>((*sw)[j]));
            } else {
                const auto& a = std::get<ParameterWord>(w).params[j];
                if (circle) {
                    csv.cell(a.x());
                } else {
                    csv.cell(a.x()).cell(a.y()).cell(a.z());
                }
            }
            csv.cell(states[j]);
            csv.end_row();
        }
        out.csv.push_back({"trajectory.csv", csv.str()});
    }
    return out;
}

ExperimentResult run_stationary(const ExperimentConfig& cfg,
                                const StationaryExperiment& p, Rng& rng)
{
    const System& sys = cfg.system;
    Rng orbit = rng.fork(0);
    const EmpiricalMeasure mc = stationary_mc(sys, p.burn, p.n_keep, orbit);
    const PartitionSpec part = make_partition(sys.manifold(), p.resolution);
    const UlamHistogram h = histogram(mc, part);

    ExperimentResult out;
    out.report = {{"cells", part.size()},
                  {"samples", mc.points.size()},
                  {"tv_to_uniform", tv_distance(h, uniform_histogram(part))},
                  {"support_coverage", support_coverage(h, p.coverage_floor)},
                  {"coverage_floor", p.coverage_floor}};
    out.csv.push_back(histogram_csv("histogram.csv", h));

    if (p.samples_per_cell > 0) {
        Rng cells = rng.fork(1);
        const UlamMatrix u = ulam_matrix(sys.finite(), part, p.samples_per_cell, cells);
        double row_error = 0.0;
        std::ostringstream matrix;
        matrix << "row";
        for (Eigen::Index c = 0; c < u.matrix.cols(); ++c) {
            matrix << ",c" << c;
        }
        matrix << '\n';
        for (Eigen::Index r = 0; r < u.matrix.rows(); ++r) {
            row_error = std::max(row_error, std::abs(u.matrix.row(r).sum() - 1.0));
            matrix << r;
            for (Eigen::Index c = 0; c < u.matrix.cols(); ++c) {
                matrix << ',' << format_double(u.matrix(r, c));
            }
            matrix << '\n';
        }
        const StationaryVector sv = stationary_power(u, p.tol, p.max_iter);
        out.report["ulam"] = {{"samples_per_cell", p.samples_per_cell},
                              {"max_row_sum_error", row_error},
                              {"iterations", sv.iterations},
                              {"residual", sv.residual},
                              {"cesaro", sv.cesaro},
                              {"tv_to_monte_carlo", tv_distance(sv.histogram, h)}};
        out.csv.push_back({"ulam_matrix.csv", matrix.str()});
        out.csv.push_back(histogram_csv("ulam_histogram.csv", sv.histogram));
    }
    return out;
}

ExperimentResult run_pullback(const ExperimentConfig& cfg,
                              const PullbackExperiment& p, Rng& rng)
{
    const System& sys = cfg.system;
    Rng orbit = rng.fork(0);
    const EmpiricalMeasure long_run
        = stationary_mc(sys, p.burn, p.ensemble * p.thin, orbit);
    EmpiricalMeasure ensemble;
    ensemble.points.reserve(p.ensemble);
    for (std::size_t i = 0; i < p.ensemble; ++i) {
        ensemble.points.push_back(long_run.points[i * p.thin]);
    }
    Rng past = rng.fork(1);
    const PullbackReport r = pullback_atoms(sys, ensemble, p.depth,
                                            p.cluster_radius, past);

    json centers = json::array();
    Csv csv = sys.manifold() == Manifold::circle
                  ? Csv{"atom", "weight", "diameter", "x"}
                  : Csv{"atom", "weight", "diameter", "x", "y", "z"};
    for (std::size_t k = 0; k < r.atom_count; ++k) {
        centers.push_back(point_json(r.centers[k]));
        csv.cell(k).cell(r.weights[k]).cell(r.diameters[k]).cell(r.centers[k]);
        csv.end_row();
    }
    ExperimentResult out;
    out.report = {{"depth", r.depth},
                  {"ensemble", p.ensemble},
                  {"cluster_radius", p.cluster_radius},
                  {"atom_count", r.atom_count},
                  {"centers", centers},
                  {"weights", r.weights},
                  {"diameters", r.diameters},
                  {"max_diameter", r.max_diameter},
                  {"min_inter_distance", optional_json(r.min_inter_distance)},
                  {"initial_spread", r.initial_spread},
                  {"final_spread", r.final_spread},
                  {"non_atomic", r.non_atomic}};
    out.csv.push_back({"atoms.csv", csv.str()});
    return out;
}

ExperimentResult run_sync(const ExperimentConfig& cfg, const SyncExperiment& p,
                          Rng& rng)
{
    const SyncReport r
        = sync_experiment(cfg.system, p.pairs, p.n, p.tol, rng, p.trace_pairs);
    Csv csv{"pair_id", "step", "distance"};
    for (const auto& t : r.traces) {
        for (std::size_t j = 0; j < t.distances.size(); ++j) {
            csv.cell(t.pair_id).cell(j).cell(t.distances[j]);
            csv.end_row();
        }
    }
    ExperimentResult out;
    out.report = {{"pairs", r.pairs},
                  {"steps", r.steps},
                  {"tol", r.tol},
                  {"synced", r.synced},
                  {"synced_fraction", r.synced_fraction},
                  {"median_first_sync", optional_json(r.median_first_sync)},
                  {"decay_rate", optional_json(r.decay_rate)},
                  {"fitted_pairs", r.fitted_pairs}};
    out.csv.push_back({"sync.csv", csv.str()});
    return out;
}

ExperimentResult run_minimality(const ExperimentConfig& cfg,
                                const MinimalityExperiment& p)
{
    const MinimalityReport r
        = reachability_cover(cfg.system.finite(), p.x0, p.resolution, p.budget);
    ExperimentResult out;
    out.report = {{"cells", r.cells},
                  {"budget", r.budget},
                  {"rounds", r.rounds},
                  {"covered_fraction", r.covered_fraction},
                  {"steps_to_full_cover", optional_json(r.steps_to_full_cover)}};
    return out;
}

ExperimentResult run_baker(const ExperimentConfig& cfg, const BakerExperiment& p,
                           Rng& rng)
{
    const ProbabilityVector& probs = cfg.system.finite().probs;
    constexpr double residual_tol = 1e-9;

    // Semiconjugacy on words: the forward Baker step of the encoding of
    // (past, w) equals the encoding of (w(0) past, shifted w).
    Rng words = rng.fork(0);
    double max_y = 0.0;
    double max_z = 0.0;
    double max_roundtrip = 0.0;
    for (std::size_t i = 0; i < p.words; ++i) {
        const SymbolWord future = sample_word(probs, p.length, words);
        const SymbolWord past = sample_word(probs, p.length, words);
        const BakerState s = encode_full(past, future, probs);
        const BakerState f = baker_forward(s, probs);

        SymbolWord new_past;
        new_past.symbols.push_back(future[0]);
        new_past.symbols.insert(new_past.symbols.end(), past.symbols.begin(),
                                past.symbols.end());
        const BakerState expect = encode_full(new_past, future.shifted(), probs);
        max_y = std::max(max_y, std::abs(f.y - expect.y));
        max_z = std::max(max_z, std::abs(f.z - expect.z));

        const BakerState back = baker_backward(f, probs);
        max_roundtrip = std::max(
            {max_roundtrip, std::abs(back.y - s.y), std::abs(back.z - s.z)});
    }
    const double max_residual = std::max(max_y, max_z);

    // Lebesgue invariance: multinomial z-scores of a bins x bins histogram.
    Rng cloud = rng.fork(1);
    std::vector<std::size_t> counts(p.bins * p.bins, 0);
    for (std::size_t i = 0; i < p.points; ++i) {
        BakerState s{cloud.uniform(), cloud.uniform()};
        for (std::size_t k = 0; k < p.steps; ++k) {
            s = baker_forward(s, probs);
        }
        const auto bx = std::min(static_cast<std::size_t>(s.y * p.bins), p.bins - 1);
        const auto bz = std::min(static_cast<std::size_t>(s.z * p.bins), p.bins - 1);
        ++counts[bx * p.bins + bz];
    }
    const double q = 1.0 / static_cast<double>(counts.size());
    const double n = static_cast<double>(p.points);
    const double sigma = std::sqrt(n * q * (1.0 - q));
    double max_z_score = 0.0;
    Csv csv{"cell_index", "count", "z_score"};
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double z = (static_cast<double>(counts[c]) - n * q) / sigma;
        max_z_score = std::max(max_z_score, std::abs(z));
        csv.cell(c).cell(counts[c]).cell(z);
        csv.end_row();
    }

    ExperimentResult out;
    out.report = {
        {"semiconjugacy",
         {{"words", p.words},
          {"length", p.length},
          {"max_residual", max_residual},
          {"max_residual_y", max_y},
          {"max_residual_z", max_z},
          {"max_roundtrip_error", max_roundtrip},
          {"tolerance", residual_tol},
          {"pass", max_residual <= residual_tol}}},
        {"lebesgue",
         {{"points", p.points},
          {"steps", p.steps},
          {"bins", p.bins},
          {"max_abs_z", max_z_score},
          {"band", 4.0},
          {"pass", max_z_score <= 4.0}}},
        {"pass", max_residual <= residual_tol && max_z_score <= 4.0}};
    out.csv.push_back({"baker_histogram.csv", csv.str()});
    return out;
}

ExperimentResult run_isolate(const ExperimentConfig& cfg,
                             const IsolateExperiment& p, Rng& rng)
{
    const System& sys = cfg.system;
    const auto [base, noise] = [&]() -> std::pair<Diffeo, NoiseSpec> {
        if (sys.is_finite()) {
            return {sys.finite().maps.front(),
                    NoiseSpec{Manifold::circle, NoiseDistribution::uniform, 0.0}};
        }
        const auto& fam = std::get<RandomFamily>(sys.spec());
        return {fam.base, fam.noise};
    }();
    const bool ok = isolating_check(base, noise, p.arc, p.samples, rng);
    ExperimentResult out;
    out.report = {{"arc", json::array({p.arc.from, p.arc.to})},
                  {"samples", p.samples},
                  {"delta", noise.delta},
                  {"isolating", ok}};
    return out;
}

ExperimentResult run_unique(const ExperimentConfig& cfg, const UniqueExperiment& p,
                            Rng& rng)
{
    const double d = uniqueness_probe(cfg.system, p.inits, p.burn, p.n_keep, rng,
                                      p.sphere_resolution);
    ExperimentResult out;
    out.report = {{"inits", p.inits.size()},
                  {"n_keep", p.n_keep},
                  {"metric", cfg.system.manifold() == Manifold::circle
                                 ? "wasserstein1"
                                 : "total_variation"},
                  {"max_distance", d}};
    return out;
}

std::string file_path(const std::string& prefix, const std::string& suffix)
{
    return prefix + "." + suffix;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    f << text;
    f.close();
    if (!f) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

} // namespace

ExperimentResult compute_experiment(const ExperimentConfig& cfg)
{
    Rng rng(cfg.seed, stream_tag("ifs-sync/" + to_string(cfg.kind)));
    ExperimentResult out = std::visit(
        [&](const auto& p) -> ExperimentResult {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LyapunovExperiment>) {
                return run_lyapunov(cfg, p, rng);
            } else if constexpr (std::is_same_v<P, StationaryExperiment>) {
                return run_stationary(cfg, p, rng);
            } else if constexpr (std::is_same_v<P, PullbackExperiment>) {
                return run_pullback(cfg, p, rng);
            } else if constexpr (std::is_same_v<P, SyncExperiment>) {
                return run_sync(cfg, p, rng);
            } else if constexpr (std::is_same_v<P, MinimalityExperiment>) {
                return run_minimality(cfg, p);
            } else if constexpr (std::is_same_v<P, BakerExperiment>) {
                return run_baker(cfg, p, rng);
            } else if constexpr (std::is_same_v<P, IsolateExperiment>) {
                return run_isolate(cfg, p, rng);
            } else {
                return run_unique(cfg, p, rng);
            }
        },
        cfg.params);
    out.report["kind"] = to_string(cfg.kind);
    out.report["manifold"] = to_string(cfg.system.manifold());
    out.report["seed"] = cfg.seed;
    return out;
}

std::vector<std::string> emit_report(const ExperimentResult& result,
                                     const std::string& prefix)
{
    const std::filesystem::path parent = std::filesystem::path(prefix).parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent);
    }
    std::vector<std::string> files;
    const std::string report = file_path(prefix, "report.json");
    write_file(report, dump_json(result.report));
    files.push_back(report);
    for (const auto& csv : result.csv) {
        const std::string path = file_path(prefix, csv.suffix);
        write_file(path, csv.text);
        files.push_back(path);
    }
    return files;
}

json to_json(const RunManifest& m)
{
    json j{{"config", m.config},
           {"defaulted", m.defaulted},
           {"version", m.version},
           {"duration_seconds", m.duration_seconds},
           {"files", m.files},
           {"status", m.ok() ? "ok" : "error"}};
    j["seed"] = m.config.at("seed");
    if (m.error) {
        j["error"] = {{"stage", m.error->stage}, {"message", m.error->message}};
    }
    return j;
}

RunManifest run_experiment(const ExperimentConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.config = to_json(cfg);
    manifest.defaulted = cfg.defaulted;
    manifest.version = std::string(version());

    std::string stage = "compute";
    try {
        const ExperimentResult result = compute_experiment(cfg);
        stage = "emit";
        manifest.files = emit_report(result, cfg.output);
    } catch (const std::exception& e) {
        manifest.error = RunError{stage, e.what()};
    }

    const std::string path = file_path(cfg.output, "manifest.json");
    manifest.files.push_back(path);
    manifest.duration_seconds = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
    try {
        const std::filesystem::path parent
            = std::filesystem::path(cfg.output).parent_path();
        if (!parent.empty()) {
            std::filesystem::create_directories(parent);
        }
        write_file(path, dump_json(to_json(manifest)));
    } catch (const std::exception& e) {
        manifest.files.pop_back();
        if (!manifest.error) {
            manifest.error = RunError{"manifest", e.what()};
        }
    }
    return manifest;
}

} // namespace ifs_sync
