#include "ifs_sync/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "ifs_sync/errors.hpp"

namespace ifs_sync {

using nlohmann::json;

namespace {

template<class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

//! Object view that remembers which keys were read, so leftovers can be
//! reported as unknown fields.
class Fields
{
  public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ConfigError(path_, "expected an object");
        }
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& required(const std::string& key)
    {
        const json* v = find(key);
        if (v == nullptr) {
            throw ConfigError(join(path_, key), "missing required field");
        }
        return *v;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(join(path_, key), "unknown field");
            }
        }
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double read_real(const json& v, const std::string& path)
{
    if (!v.is_number()) {
        throw ConfigError(path, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ConfigError(path, "expected a finite number");
    }
    return d;
}

std::size_t read_count(const json& v, const std::string& path)
{
    if (v.is_number_unsigned()) {
        return v.get<std::size_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::size_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && d < 9.0e15 && std::floor(d) == d) {
            return static_cast<std::size_t>(d);
        }
    }
    throw ConfigError(path, "expected a nonnegative integer");
}

std::string read_string(const json& v, const std::string& path)
{
    if (!v.is_string()) {
        throw ConfigError(path, "expected a string");
    }
    return v.get<std::string>();
}

Eigen::Vector3d read_vec3(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 3) {
        throw ConfigError(path, "expected an array of 3 numbers");
    }
    return {read_real(v[0], index(path, 0)), read_real(v[1], index(path, 1)),
            read_real(v[2], index(path, 2))};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Point read_point(const json& v, Manifold m, const std::string& path)
{
    if (m == Manifold::circle) {
        return circle_point(read_real(v, path));
    }
    try {
        return sphere_point(read_vec3(v, path));
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

json point_json(const Point& p)
{
    if (const auto* c = std::get_if<CirclePoint>(&p)) {
        return c->x;
    }
    return vec3_json(std::get<SpherePoint>(p).v);
}

Manifold read_manifold(const json& v, const std::string& path)
{
    const std::string s = read_string(v, path);
    if (s == "circle") {
        return Manifold::circle;
    }
    if (s == "sphere") {
        return Manifold::sphere;
    }
    throw ConfigError(path, "manifold must be \"circle\" or \"sphere\"");
}

NoiseSpec read_noise(const json& v, Manifold m, const std::string& path)
{
    Fields f(v, path);
    NoiseSpec n;
    n.manifold = m;
    const std::string dist = read_string(f.required("distribution"),
                                         f.path("distribution"));
    if (dist == "uniform") {
        n.distribution = NoiseDistribution::uniform;
    } else if (dist == "triangular") {
        n.distribution = NoiseDistribution::triangular;
    } else {
        throw ConfigError(f.path("distribution"),
                          "distribution must be \"uniform\" or \"triangular\"");
    }
    n.delta = read_real(f.required("delta"), f.path("delta"));
    f.finish();
    try {
        validate(n);
    } catch (const DomainError& e) {
        throw ConfigError(f.path("delta"), e.what());
    }
    return n;
}

json noise_json(const NoiseSpec& n)
{
    return {{"distribution", n.distribution == NoiseDistribution::uniform
                                 ? "uniform"
                                 : "triangular"},
            {"delta", n.delta}};
}

InitialDistribution read_init(const json& v, Manifold m, const std::string& path)
{
    Fields f(v, path);
    InitialDistribution init;
    const std::string kind = read_string(f.required("kind"), f.path("kind"));
    if (kind == "uniform") {
        init.kind = InitialDistribution::Kind::uniform;
    } else if (kind == "delta") {
        init.kind = InitialDistribution::Kind::delta;
        init.point = read_point(f.required("x"), m, f.path("x"));
    } else if (kind == "arc") {
        if (m != Manifold::circle) {
            throw ConfigError(f.path("kind"), "arc initial law is circle only");
        }
        init.kind = InitialDistribution::Kind::arc;
        init.from = read_real(f.required("from"), f.path("from"));
        init.to = read_real(f.required("to"), f.path("to"));
        if (!(init.to > init.from)) {
            throw ConfigError(f.path("to"), "arc needs to > from");
        }
    } else {
        throw ConfigError(f.path("kind"),
                          "kind must be \"uniform\", \"delta\" or \"arc\"");
    }
    f.finish();
    return init;
}

json init_json(const InitialDistribution& init)
{
    switch (init.kind) {
    case InitialDistribution::Kind::uniform:
        return {{"kind", "uniform"}};
    case InitialDistribution::Kind::delta:
        return {{"kind", "delta"}, {"x", point_json(*init.point)}};
    case InitialDistribution::Kind::arc:
        return {{"kind", "arc"}, {"from", init.from}, {"to", init.to}};
    }
    return {};
}

std::vector<InitialDistribution> default_inits(Manifold m)
{
    using Kind = InitialDistribution::Kind;
    if (m == Manifold::circle) {
        return {{Kind::uniform, std::nullopt, 0.0, 0.0},
                {Kind::delta, Point{CirclePoint{0.0}}, 0.0, 0.0},
                {Kind::arc, std::nullopt, 0.25, 0.35}};
    }
    return {{Kind::uniform, std::nullopt, 0.0, 0.0},
            {Kind::delta, Point{SpherePoint{Eigen::Vector3d::UnitZ()}}, 0.0, 0.0},
            {Kind::delta, Point{SpherePoint{-Eigen::Vector3d::UnitZ()}}, 0.0, 0.0}};
}

//---------------------------------------------------------------------------//
// Experiment blocks
//---------------------------------------------------------------------------//

class ParamReader
{
  public:
    ParamReader(Fields& f, std::vector<std::string>& defaulted)
        : f_(f), defaulted_(defaulted)
    {
    }

    void count(const char* key, std::size_t& field)
    {
        if (const json* v = f_.find(key)) {
            field = read_count(*v, f_.path(key));
        } else {
            defaulted_.emplace_back(key);
        }
    }

    void real(const char* key, double& field)
    {
        if (const json* v = f_.find(key)) {
            field = read_real(*v, f_.path(key));
        } else {
            defaulted_.emplace_back(key);
        }
    }

    void check(bool ok, const char* key, const std::string& message) const
    {
        if (!ok) {
            throw ConfigError(f_.path(key), message);
        }
    }

    Fields& fields() { return f_; }

  private:
    Fields& f_;
    std::vector<std::string>& defaulted_;
};

ExperimentParams read_params(ExperimentKind kind, Fields& f, const System& sys,
                             std::vector<std::string>& defaulted)
{
    ParamReader r(f, defaulted);
    const Manifold m = sys.manifold();
    switch (kind) {
    case ExperimentKind::lyapunov:
    case ExperimentKind::spectrum: {
        LyapunovExperiment p;
        r.count("n", p.n);
        r.count("burn", p.burn);
        r.count("blocks", p.blocks);
        if (const json* v = f.find("x0")) {
            p.x0 = read_point(*v, m, f.path("x0"));
        }
        r.count("dump_trajectory", p.dump_trajectory);
        r.check(p.blocks >= 2, "blocks", "must be at least 2");
        r.check(p.n >= p.blocks, "n", "must be at least blocks");
        return p;
    }
    case ExperimentKind::stationary: {
        StationaryExperiment p;
        if (m == Manifold::sphere) {
            p.resolution = 8;
        }
        r.count("burn", p.burn);
        r.count("n_keep", p.n_keep);
        r.count("resolution", p.resolution);
        r.count("samples_per_cell", p.samples_per_cell);
        r.real("tol", p.tol);
        r.count("max_iter", p.max_iter);
        r.real("coverage_floor", p.coverage_floor);
        r.check(p.n_keep >= 1, "n_keep", "must be at least 1");
        r.check(p.resolution >= 2, "resolution", "must be at least 2");
        r.check(p.tol > 0.0, "tol", "must be positive");
        r.check(p.max_iter >= 1, "max_iter", "must be at least 1");
        r.check(p.coverage_floor >= 0.0 && p.coverage_floor < 1.0,
                "coverage_floor", "must lie in [0, 1)");
        r.check(p.samples_per_cell == 0 || sys.is_finite(), "samples_per_cell",
                "Ulam matrices need a finite map list");
        return p;
    }
    case ExperimentKind::pullback: {
        PullbackExperiment p;
        if (m == Manifold::sphere) {
            p.cluster_radius = 1e-3;
        }
        r.count("depth", p.depth);
        r.real("cluster_radius", p.cluster_radius);
        r.count("ensemble", p.ensemble);
        r.count("burn", p.burn);
        r.count("thin", p.thin);
        r.check(p.cluster_radius > 0.0, "cluster_radius", "must be positive");
        r.check(p.ensemble >= 20, "ensemble", "must be at least 20");
        r.check(p.thin >= 1, "thin", "must be at least 1");
        return p;
    }
    case ExperimentKind::sync: {
        SyncExperiment p;
        r.count("pairs", p.pairs);
        r.count("n", p.n);
        r.real("tol", p.tol);
        r.count("trace_pairs", p.trace_pairs);
        r.check(p.pairs >= 1, "pairs", "must be at least 1");
        r.check(p.n >= 2, "n", "must be at least 2");
        r.check(p.tol > 0.0, "tol", "must be positive");
        return p;
    }
    case ExperimentKind::minimality: {
        MinimalityExperiment p;
        r.count("resolution", p.resolution);
        r.count("budget", p.budget);
        r.real("x0", p.x0);
        r.check(m == Manifold::circle && sys.is_finite(), "resolution",
                "minimality needs a finite circle system");
        r.check(p.resolution >= 2 && p.resolution <= (std::size_t{1} << 24),
                "resolution", "must lie in [2, 2^24]");
        r.check(p.budget >= 1, "budget", "must be at least 1");
        return p;
    }
    case ExperimentKind::baker_verify: {
        BakerExperiment p;
        r.count("words", p.words);
        r.count("length", p.length);
        r.count("points", p.points);
        r.count("steps", p.steps);
        r.count("bins", p.bins);
        r.check(sys.is_finite(), "words",
                "baker-verify needs a probability vector");
        r.check(p.words >= 1, "words", "must be at least 1");
        r.check(p.length >= 2, "length", "must be at least 2");
        r.check(p.points >= 1, "points", "must be at least 1");
        r.check(p.bins >= 2, "bins", "must be at least 2");
        return p;
    }
    case ExperimentKind::isolate: {
        IsolateExperiment p;
        const json& arc = f.required("arc");
        if (!arc.is_array() || arc.size() != 2) {
            throw ConfigError(f.path("arc"), "expected [from, to]");
        }
        p.arc = {read_real(arc[0], index(f.path("arc"), 0)),
                 read_real(arc[1], index(f.path("arc"), 1))};
        r.count("samples", p.samples);
        const double len = p.arc.to - p.arc.from;
        r.check(len > 0.0 && len < 1.0, "arc", "needs 0 < to - from < 1");
        r.check(m == Manifold::circle, "arc", "isolate works on the circle only");
        r.check(!sys.is_finite() || sys.finite().maps.size() == 1, "arc",
                "isolate needs a single base map");
        r.check(p.samples >= 1, "samples", "must be at least 1");
        return p;
    }
    case ExperimentKind::unique: {
        UniqueExperiment p;
        r.count("burn", p.burn);
        r.count("n_keep", p.n_keep);
        if (const json* v = f.find("inits")) {
            if (!v->is_array()) {
                throw ConfigError(f.path("inits"), "expected an array");
            }
            for (std::size_t i = 0; i < v->size(); ++i) {
                p.inits.push_back(read_init((*v)[i], m, index(f.path("inits"), i)));
            }
        } else {
            defaulted.emplace_back("inits");
            p.inits = default_inits(m);
        }
        r.count("sphere_resolution", p.sphere_resolution);
        r.check(p.inits.size() >= 2, "inits", "needs at least two entries");
        r.check(p.n_keep >= 1, "n_keep", "must be at least 1");
        r.check(p.sphere_resolution >= 2, "sphere_resolution",
                "must be at least 2");
        return p;
    }
    }
    throw ConfigError("experiment.kind", "unsupported kind");
}

json params_json(const ExperimentParams& params)
{
    return std::visit(
        overloaded{
            [](const LyapunovExperiment& p) {
                json j{{"n", p.n}, {"burn", p.burn}, {"blocks", p.blocks},
                       {"dump_trajectory", p.dump_trajectory}};
                if (p.x0) {
                    j["x0"] = point_json(*p.x0);
                }
                return j;
            },
            [](const StationaryExperiment& p) {
                return json{{"burn", p.burn},
                            {"n_keep", p.n_keep},
                            {"resolution", p.resolution},
                            {"samples_per_cell", p.samples_per_cell},
                            {"tol", p.tol},
                            {"max_iter", p.max_iter},
                            {"coverage_floor", p.coverage_floor}};
            },
            [](const PullbackExperiment& p) {
                return json{{"depth", p.depth},
                            {"cluster_radius", p.cluster_radius},
                            {"ensemble", p.ensemble},
                            {"burn", p.burn},
                            {"thin", p.thin}};
            },
            [](const SyncExperiment& p) {
                return json{{"pairs", p.pairs},
                            {"n", p.n},
                            {"tol", p.tol},
                            {"trace_pairs", p.trace_pairs}};
            },
            [](const MinimalityExperiment& p) {
                return json{{"resolution", p.resolution},
                            {"budget", p.budget},
                            {"x0", p.x0}};
            },
            [](const BakerExperiment& p) {
                return json{{"words", p.words},
                            {"length", p.length},
                            {"points", p.points},
                            {"steps", p.steps},
                            {"bins", p.bins}};
            },
            [](const IsolateExperiment& p) {
                return json{{"arc", json::array({p.arc.from, p.arc.to})},
                            {"samples", p.samples}};
            },
            [](const UniqueExperiment& p) {
                json inits = json::array();
                for (const auto& i : p.inits) {
                    inits.push_back(init_json(i));
                }
                return json{{"burn", p.burn},
                            {"n_keep", p.n_keep},
                            {"inits", inits},
                            {"sphere_resolution", p.sphere_resolution}};
            },
        },
        params);
}

} // namespace

//---------------------------------------------------------------------------//
// Kinds
//---------------------------------------------------------------------------//

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::lyapunov: return "lyapunov";
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::stationary: return "stationary";
    case ExperimentKind::pullback: return "pullback";
    case ExperimentKind::sync: return "sync";
    case ExperimentKind::minimality: return "minimality";
    case ExperimentKind::baker_verify: return "baker-verify";
    case ExperimentKind::isolate: return "isolate";
    case ExperimentKind::unique: return "unique";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name)
{
    for (auto k : {ExperimentKind::lyapunov, ExperimentKind::spectrum,
                   ExperimentKind::stationary, ExperimentKind::pullback,
                   ExperimentKind::sync, ExperimentKind::minimality,
                   ExperimentKind::baker_verify, ExperimentKind::isolate,
                   ExperimentKind::unique}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

//---------------------------------------------------------------------------//
// Diffeomorphisms
//---------------------------------------------------------------------------//

Diffeo diffeo_from_json(const json& j, Manifold manifold, const std::string& path)
{
    Fields f(j, path);
    const std::string type = read_string(f.required("type"), f.path("type"));
    auto real = [&](const char* key) {
        return read_real(f.required(key), f.path(key));
    };
    auto expect = [&](Manifold want) {
        if (manifold != want) {
            throw ConfigError(f.path("type"), type + " acts on the "
                                                  + to_string(want)
                                                  + ", system is on the "
                                                  + to_string(manifold));
        }
    };
    // Constructor range errors name the parameter that broke them.
    auto build = [&](const char* key, auto&& make) -> Diffeo {
        try {
            return make();
        } catch (const DomainError& e) {
            throw ConfigError(f.path(key), e.what());
        }
    };

    Diffeo out = [&]() -> Diffeo {
        if (type == "rotation") {
            expect(Manifold::circle);
            const double alpha = real("alpha");
            return build("alpha", [&] { return Diffeo::rotation(alpha); });
        }
        if (type == "north_south") {
            expect(Manifold::circle);
            const double c = real("c");
            return build("c", [&] { return Diffeo::north_south(c); });
        }
        if (type == "flat_ns") {
            expect(Manifold::circle);
            const double c = real("c");
            const double r0 = real("r0");
            const double kappa0 = real("kappa0");
            if (!(c > -1.0 / (2.0 * M_PI) && c < 0.0)) {
                return build("c", [&] { return Diffeo::north_south(c); });
            }
            if (!(r0 > 0.0 && r0 <= 0.125)) {
                return build("r0", [&] { return Diffeo::flat_ns(c, r0, kappa0); });
            }
            return build("kappa0", [&] { return Diffeo::flat_ns(c, r0, kappa0); });
        }
        if (type == "equivariant_ns") {
            expect(Manifold::circle);
            const double c = real("c");
            return build("c", [&] { return Diffeo::equivariant_ns(c); });
        }
        if (type == "sphere_rotation") {
            expect(Manifold::sphere);
            const Eigen::Vector3d axis = read_vec3(f.required("axis"), f.path("axis"));
            const double angle = real("angle");
            return build("axis",
                         [&] { return Diffeo::sphere_rotation(axis, angle); });
        }
        if (type == "sphere_scale") {
            expect(Manifold::sphere);
            const double lambda = real("lambda");
            if (!(lambda > 0.0 && lambda < 1.0)) {
                throw ConfigError(f.path("lambda"),
                                  "sphere_scale: lambda must lie in (0, 1)");
            }
            return build("lambda", [&] { return Diffeo::sphere_scale(lambda); });
        }
        if (type == "composition") {
            const json& maps = f.required("maps");
            if (!maps.is_array() || maps.empty()) {
                throw ConfigError(f.path("maps"), "expected a nonempty array");
            }
            std::vector<Diffeo> parts;
            for (std::size_t i = 0; i < maps.size(); ++i) {
                parts.push_back(
                    diffeo_from_json(maps[i], manifold, index(f.path("maps"), i)));
            }
            return Diffeo::composition(std::move(parts));
        }
        if (type == "translated") {
            const Diffeo base
                = diffeo_from_json(f.required("base"), manifold, f.path("base"));
            const json& a = f.required("a");
            if (manifold == Manifold::circle) {
                const double shift = read_real(a, f.path("a"));
                return build("a", [&] { return Diffeo::translated(base, shift); });
            }
            const Eigen::Vector3d v = read_vec3(a, f.path("a"));
            return build("a", [&] { return Diffeo::translated(base, v); });
        }
        if (type == "inverse") {
            return inverse(
                diffeo_from_json(f.required("map"), manifold, f.path("map")));
        }
        throw ConfigError(f.path("type"), "unknown map type \"" + type + "\"");
    }();
    f.finish();
    return out;
}

json diffeo_to_json(const Diffeo& map)
{
    return std::visit(
        overloaded{
            [](const family::Rotation& r) {
                return json{{"type", "rotation"}, {"alpha", r.alpha}};
            },
            [](const family::NorthSouthCircle& f) {
                return json{{"type", "north_south"}, {"c", f.c}};
            },
            [](const family::FlatNS& f) {
                return json{{"type", "flat_ns"},
                            {"c", f.c},
                            {"r0", f.r0},
                            {"kappa0", f.kappa0}};
            },
            [](const family::EquivariantNS& f) {
                return json{{"type", "equivariant_ns"}, {"c", f.c}};
            },
            [](const family::SphereRotation& r) {
                return json{{"type", "sphere_rotation"},
                            {"axis", vec3_json(r.axis)},
                            {"angle", r.angle}};
            },
            [](const family::SphereScale& s) {
                return json{{"type", "sphere_scale"}, {"lambda", s.lambda}};
            },
            [](const family::Composition& c) {
                json maps = json::array();
                for (const auto& m : c.maps) {
                    maps.push_back(diffeo_to_json(m));
                }
                return json{{"type", "composition"}, {"maps", maps}};
            },
            [](const family::Translated& t) {
                json a = t.base->manifold() == Manifold::circle
                             ? json(t.a.x())
                             : vec3_json(t.a);
                return json{{"type", "translated"},
                            {"base", diffeo_to_json(*t.base)},
                            {"a", a}};
            },
            [](const family::CircleInverse& inv) {
                return json{{"type", "inverse"}, {"map", diffeo_to_json(*inv.map)}};
            },
        },
        map.node());
}

//---------------------------------------------------------------------------//
// Whole documents
//---------------------------------------------------------------------------//

namespace {

struct ParsedSystem
{
    System system;
    json canonical;
};

ParsedSystem read_system(const json& j)
{
    Fields f(j, "system");
    const Manifold m = read_manifold(f.required("manifold"), f.path("manifold"));
    const json& maps_json = f.required("maps");
    if (!maps_json.is_array() || maps_json.empty()) {
        throw ConfigError(f.path("maps"), "expected a nonempty array");
    }
    std::vector<Diffeo> maps;
    json canonical_maps = json::array();
    for (std::size_t i = 0; i < maps_json.size(); ++i) {
        maps.push_back(diffeo_from_json(maps_json[i], m, index(f.path("maps"), i)));
        canonical_maps.push_back(diffeo_to_json(maps.back()));
    }
    const json* noise_json_ptr = f.find("noise");
    const json* probs_json = f.find("probs");
    f.finish();

    json canonical{{"manifold", to_string(m)}, {"maps", canonical_maps}};
    if (noise_json_ptr != nullptr) {
        if (probs_json != nullptr) {
            throw ConfigError(f.path("probs"),
                              "a random family takes noise, not probabilities");
        }
        if (maps.size() != 1) {
            throw ConfigError(f.path("maps"),
                              "a random family takes exactly one base map");
        }
        NoiseSpec noise = read_noise(*noise_json_ptr, m, f.path("noise"));
        canonical["noise"] = noise_json(noise);
        return {System(RandomFamily{maps.front(), noise}), canonical};
    }
    if (probs_json == nullptr) {
        throw ConfigError(f.path("probs"), "missing required field");
    }
    if (!probs_json->is_array()) {
        throw ConfigError(f.path("probs"), "expected an array of numbers");
    }
    std::vector<double> probs;
    for (std::size_t i = 0; i < probs_json->size(); ++i) {
        probs.push_back(read_real((*probs_json)[i], index(f.path("probs"), i)));
    }
    if (probs.size() != maps.size()) {
        std::ostringstream msg;
        msg << maps.size() << " maps but " << probs.size() << " probabilities";
        throw ConfigError(f.path("probs"), msg.str());
    }
    try {
        ProbabilityVector pv(probs);
        canonical["probs"] = probs;
        return {System(FiniteIfs{std::move(maps), std::move(pv)}), canonical};
    } catch (const DomainError& e) {
        throw ConfigError(f.path("probs"), e.what());
    }
}

} // namespace

ExperimentConfig parse_config(const json& doc)
{
    Fields top(doc, "");
    ParsedSystem sys = read_system(top.required("system"));

    Fields exp(top.required("experiment"), "experiment");
    const std::string kind_name = read_string(exp.required("kind"), exp.path("kind"));
    const auto kind = parse_kind(kind_name);
    if (!kind) {
        throw ConfigError(exp.path("kind"),
                          "unknown experiment kind \"" + kind_name + "\"");
    }
    std::vector<std::string> defaulted;
    ExperimentParams params = read_params(*kind, exp, sys.system, defaulted);
    exp.finish();

    const json& seed = top.required("seed");
    if (!seed.is_number_unsigned()
        && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        throw ConfigError("seed", "expected a 64-bit unsigned integer");
    }
    std::string output = read_string(top.required("output"), "output");
    if (output.empty()) {
        throw ConfigError("output", "must not be empty");
    }
    top.finish();

    return ExperimentConfig{std::move(sys.system),
                            std::move(sys.canonical),
                            *kind,
                            std::move(params),
                            seed.get<std::uint64_t>(),
                            std::move(output),
                            std::move(defaulted)};
}

ExperimentConfig parse_config(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg)
{
    json exp = params_json(cfg.params);
    exp["kind"] = to_string(cfg.kind);
    return {{"system", cfg.system_json},
            {"experiment", exp},
            {"seed", cfg.seed},
            {"output", cfg.output}};
}

//---------------------------------------------------------------------------//
// Schema
//---------------------------------------------------------------------------//

json config_schema()
{
    const json number{{"type", "number"}};
    const json count{{"type", "integer"}, {"minimum", 0}};
    const json vec3{{"type", "array"}, {"items", number}, {"minItems", 3},
                    {"maxItems", 3}};
    const json point{{"oneOf", json::array({number, vec3})}};

    auto map_variant = [&](const char* type, json props, json required) {
        props["type"] = {{"const", type}};
        required.insert(required.begin(), "type");
        return json{{"type", "object"},
                    {"properties", props},
                    {"required", required},
                    {"additionalProperties", false}};
    };
    const json map_ref{{"$ref", "#/$defs/map"}};
    json map_def{
        {"oneOf",
         json::array({
             map_variant("rotation", {{"alpha", number}}, {"alpha"}),
             map_variant("north_south",
                         {{"c", {{"type", "number"},
                                 {"exclusiveMinimum", -1.0 / (2.0 * M_PI)},
                                 {"exclusiveMaximum", 0}}}},
                         {"c"}),
             map_variant("flat_ns",
                         {{"c", number},
                          {"r0", {{"type", "number"},
                                  {"exclusiveMinimum", 0},
                                  {"maximum", 0.125}}},
                          {"kappa0", {{"type", "number"}, {"exclusiveMinimum", 0}}}},
                         {"c", "r0", "kappa0"}),
             map_variant("equivariant_ns",
                         {{"c", {{"type", "number"},
                                 {"exclusiveMinimum", -1.0 / (4.0 * M_PI)},
                                 {"exclusiveMaximum", 0}}}},
                         {"c"}),
             map_variant("sphere_rotation", {{"axis", vec3}, {"angle", number}},
                         {"axis", "angle"}),
             map_variant("sphere_scale",
                         {{"lambda", {{"type", "number"},
                                      {"exclusiveMinimum", 0},
                                      {"exclusiveMaximum", 1}}}},
                         {"lambda"}),
             map_variant("composition",
                         {{"maps", {{"type", "array"},
                                    {"items", map_ref},
                                    {"minItems", 1}}}},
                         {"maps"}),
             map_variant("translated", {{"base", map_ref}, {"a", point}},
                         {"base", "a"}),
             map_variant("inverse", {{"map", map_ref}}, {"map"}),
         })}};

    auto experiment = [&](const char* kind, json props, json required = json::array()) {
        props["kind"] = {{"const", kind}};
        required.insert(required.begin(), "kind");
        return json{{"type", "object"},
                    {"properties", props},
                    {"required", required},
                    {"additionalProperties", false}};
    };
    const json lyap{{"n", count}, {"burn", count}, {"blocks", count},
                    {"x0", point}, {"dump_trajectory", count}};
    const json init{
        {"type", "object"},
        {"properties",
         {{"kind", {{"enum", {"uniform", "delta", "arc"}}}},
          {"x", point},
          {"from", number},
          {"to", number}}},
        {"required", {"kind"}},
        {"additionalProperties", false}};

    return {
        {"$schema", "https://json-schema.org/draft/2020-12/schema"},
        {"title", "ifs-sync experiment configuration"},
        {"type", "object"},
        {"required", {"system", "experiment", "seed", "output"}},
        {"additionalProperties", false},
        {"$defs", {{"map", map_def}}},
        {"properties",
         {{"system",
           {{"type", "object"},
            {"required", {"manifold", "maps"}},
            {"additionalProperties", false},
            {"properties",
             {{"manifold", {{"enum", {"circle", "sphere"}}}},
              {"maps", {{"type", "array"}, {"items", map_ref}, {"minItems", 1}}},
              {"probs", {{"type", "array"}, {"items", number}}},
              {"noise",
               {{"type", "object"},
                {"required", {"distribution", "delta"}},
                {"additionalProperties", false},
                {"properties",
                 {{"distribution", {{"enum", {"uniform", "triangular"}}}},
                  {"delta", {{"type", "number"}, {"minimum", 0}}}}}}}}}}},
          {"experiment",
           {{"oneOf",
             json::array({
                 experiment("lyapunov", lyap),
                 experiment("spectrum", lyap),
                 experiment("stationary",
                            {{"burn", count}, {"n_keep", count},
                             {"resolution", count}, {"samples_per_cell", count},
                             {"tol", number}, {"max_iter", count},
                             {"coverage_floor", number}}),
                 experiment("pullback",
                            {{"depth", count}, {"cluster_radius", number},
                             {"ensemble", count}, {"burn", count},
                             {"thin", count}}),
                 experiment("sync",
                            {{"pairs", count}, {"n", count}, {"tol", number},
                             {"trace_pairs", count}}),
                 experiment("minimality",
                            {{"resolution", count}, {"budget", count},
                             {"x0", number}}),
                 experiment("baker-verify",
                            {{"words", count}, {"length", count},
                             {"points", count}, {"steps", count},
                             {"bins", count}}),
                 experiment("isolate",
                            {{"arc", {{"type", "array"}, {"items", number},
                                      {"minItems", 2}, {"maxItems", 2}}},
                             {"samples", count}},
                            {"arc"}),
                 experiment("unique",
                            {{"burn", count}, {"n_keep", count},
                             {"inits", {{"type", "array"}, {"items", init}}},
                             {"sphere_resolution", count}}),
             })}}},
          {"seed", {{"type", "integer"}, {"minimum", 0},
                    {"maximum", 18446744073709551615ULL}}},
          {"output", {{"type", "string"}, {"minLength", 1}}}}}};
}

} // namespace ifs_sync
