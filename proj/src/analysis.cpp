#include "ifs_sync/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ifs_sync/errors.hpp"
#include "ifs_sync/parallel.hpp"

namespace ifs_sync {
namespace {

constexpr std::size_t kChunk = 4096;

void advance_random(CocycleAccumulator& acc, const System& sys, std::size_t n,
                    Rng& rng)
{
    for (std::size_t done = 0; done < n;) {
        const std::size_t len = std::min(kChunk, n - done);
        advance_cocycle(acc, sys, sys.sample_drive(len, rng));
        done += len;
    }
}

double largest_singular_value(const TangentMatrix& m)
{
    if (m.rows() == 1) {
        return std::abs(m(0, 0));
    }
    const double fro2 = m.squaredNorm();
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    return std::sqrt(0.5 * (fro2 + disc));
}

class DisjointSets
{
  public:
    explicit DisjointSets(std::size_t n) : parent_(n)
    {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t i)
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

  private:
    std::vector<std::size_t> parent_;
};

Point cluster_center(const std::vector<Point>& pts)
{
    if (std::holds_alternative<CirclePoint>(pts.front())) {
        const double ref = std::get<CirclePoint>(pts.front()).x;
        double offset = 0.0;
        for (const auto& p : pts) {
            offset += wrap_signed(std::get<CirclePoint>(p).x - ref);
        }
        return circle_point(ref + offset / static_cast<double>(pts.size()));
    }
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
        sum += std::get<SpherePoint>(p).v;
    }
    if (sum.norm() == 0.0) {
        return pts.front();
    }
    return sphere_point(sum);
}

double diameter(const std::vector<Point>& pts)
{
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            d = std::max(d, distance(pts[i], pts[j]));
        }
    }
    return d;
}

// Lexicographic key for ordering atoms deterministically.
std::array<double, 3> position_key(const Point& p)
{
    if (const auto* c = std::get_if<CirclePoint>(&p)) {
        return {c->x, 0.0, 0.0};
    }
    const Eigen::Vector3d& v = std::get<SpherePoint>(p).v;
    return {v.z(), v.y(), v.x()};
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void require_circle_map(const Diffeo& f, const char* what)
{
    if (f.manifold() != Manifold::circle) {
        throw ManifoldMismatch(std::string(what) + " works on the circle only");
    }
}

} // namespace

//---------------------------------------------------------------------------//
// Lyapunov exponents
//---------------------------------------------------------------------------//

LyapunovEstimate lyapunov_spectrum(const System& sys, const LyapunovParams& p,
                                   Rng& rng)
{
    if (p.blocks < 2 || p.n < p.blocks) {
        throw DomainError("lyapunov: need n >= blocks >= 2");
    }
    const Point x = p.start ? *p.start : uniform_point(sys.manifold(), rng);
    if (manifold_of(x) != sys.manifold()) {
        throw ManifoldMismatch("lyapunov: start point on the wrong manifold");
    }
    CocycleAccumulator acc = start_cocycle(x, canonical_frame(x));
    advance_random(acc, sys, p.burn, rng);

    const std::size_t d = acc.log_sums.size();
    const std::size_t block_len = p.n / p.blocks;
    std::vector<std::vector<double>> means(d, std::vector<double>(p.blocks));
    for (std::size_t b = 0; b < p.blocks; ++b) {
        std::fill(acc.log_sums.begin(), acc.log_sums.end(), 0.0);
        advance_random(acc, sys, block_len, rng);
        for (std::size_t i = 0; i < d; ++i) {
            means[i][b] = acc.log_sums[i] / static_cast<double>(block_len);
        }
    }

    std::vector<std::pair<double, double>> est(d);
    const auto nb = static_cast<double>(p.blocks);
    for (std::size_t i = 0; i < d; ++i) {
        const double mean
            = std::accumulate(means[i].begin(), means[i].end(), 0.0) / nb;
        double ss = 0.0;
        for (double m : means[i]) {
            ss += (m - mean) * (m - mean);
        }
        est[i] = {mean, std::sqrt(ss / (nb - 1.0)) / std::sqrt(nb)};
    }
    std::stable_sort(est.begin(), est.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });

    LyapunovEstimate out;
    for (const auto& [e, se] : est) {
        out.exponents.push_back(e);
        out.std_errors.push_back(se);
    }
    out.steps = block_len * p.blocks;
    out.burn = p.burn;
    out.blocks = p.blocks;
    return out;
}

LyapunovEstimate lyapunov_top(const System& sys, const LyapunovParams& p,
                              Rng& rng)
{
    LyapunovEstimate est = lyapunov_spectrum(sys, p, rng);
    est.exponents.resize(1);
    est.std_errors.resize(1);
    return est;
}

double lyapunov_upper_bound(const FiniteIfs& ifs, const EmpiricalMeasure& m)
{
    if (m.points.empty()) {
        throw DomainError("lyapunov_upper_bound: empty measure");
    }
    double bound = 0.0;
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
        double sum = 0.0;
        for (const auto& x : m.points) {
            const auto [frame, jac] = tangent(ifs.maps[i], canonical_frame(x));
            sum += std::log(largest_singular_value(jac));
        }
        bound += ifs.probs[i] * sum / static_cast<double>(m.points.size());
    }
    return bound;
}

//---------------------------------------------------------------------------//
// Pull-back atoms
//---------------------------------------------------------------------------//

std::vector<std::size_t> single_linkage(const std::vector<Point>& points,
                                        double radius)
{
    const std::size_t n = points.size();
    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (distance(points[i], points[j]) <= radius) {
                sets.unite(i, j);
            }
        }
    }
    std::vector<std::size_t> labels(n);
    std::vector<std::size_t> root_label(n, n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = sets.find(i);
        if (root_label[r] == n) {
            root_label[r] = next++;
        }
        labels[i] = root_label[r];
    }
    return labels;
}

PullbackReport summarize_clusters(const std::vector<Point>& initial,
                                  const std::vector<Point>& images,
                                  double cluster_radius, std::size_t depth)
{
    if (!(cluster_radius > 0.0)) {
        throw DomainError("pullback_atoms: cluster_radius must be positive");
    }
    if (images.empty()) {
        throw DomainError("pullback_atoms: empty ensemble");
    }
    const std::vector<std::size_t> labels = single_linkage(images, cluster_radius);
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<Point>> members(k);
    for (std::size_t i = 0; i < images.size(); ++i) {
        members[labels[i]].push_back(images[i]);
    }

    struct Atom
    {
        Point center;
        double weight;
        double diameter;
    };
    std::vector<Atom> atoms;
    atoms.reserve(k);
    const auto total = static_cast<double>(images.size());
    for (const auto& m : members) {
        atoms.push_back({cluster_center(m), static_cast<double>(m.size()) / total,
                         diameter(m)});
    }
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const Atom& a, const Atom& b) {
                         if (a.weight != b.weight) {
                             return a.weight > b.weight;
                         }
                         return position_key(a.center) < position_key(b.center);
                     });

    PullbackReport r;
    r.depth = depth;
    r.atom_count = k;
    for (const auto& a : atoms) {
        r.centers.push_back(a.center);
        r.weights.push_back(a.weight);
        r.diameters.push_back(a.diameter);
        r.max_diameter = std::max(r.max_diameter, a.diameter);
    }
    if (k > 1) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < images.size(); ++i) {
            for (std::size_t j = i + 1; j < images.size(); ++j) {
                if (labels[i] != labels[j]) {
                    best = std::min(best, distance(images[i], images[j]));
                }
            }
        }
        r.min_inter_distance = best;
    }
    r.initial_spread = diameter(initial);
    r.final_spread = diameter(images);
    r.non_atomic = r.max_diameter > 10.0 * cluster_radius || 2 * k > images.size();
    return r;
}

PullbackReport pullback_atoms(const System& sys, const EmpiricalMeasure& ensemble,
                              std::size_t depth, double cluster_radius, Rng& rng)
{
    if (!(cluster_radius > 0.0)) {
        throw DomainError("pullback_atoms: cluster_radius must be positive");
    }
    if (ensemble.points.size() < 20) {
        throw DomainError("pullback_atoms: ensemble needs at least 20 points");
    }
    const Drive past = sys.sample_drive(depth, rng);
    const std::vector<Point> images = pullback_compose(sys, past, ensemble.points);
    return summarize_clusters(ensemble.points, images, cluster_radius, depth);
}

//---------------------------------------------------------------------------//
// Synchronization
//---------------------------------------------------------------------------//

std::vector<double> sync_trace(const System& sys, const Drive& w,
                               const Point& x, const Point& y)
{
    sys.check(w);
    const std::size_t n = drive_length(w);
    std::vector<double> d;
    d.reserve(n + 1);
    Point a = x;
    Point b = y;
    d.push_back(distance(a, b));
    for (std::size_t j = 0; j < n; ++j) {
        a = sys.step(w, j, a);
        b = sys.step(w, j, b);
        d.push_back(distance(a, b));
    }
    return d;
}

std::optional<double> fit_decay_rate(const std::vector<double>& trace,
                                     double tol)
{
    if (trace.empty()) {
        return std::nullopt;
    }
    const double lo = 10.0 * tol;
    const double hi = trace.front() / 10.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < trace.size(); ++j) {
        const double d = trace[j];
        if (d > lo && d < hi) {
            const auto x = static_cast<double>(j);
            const double y = std::log(d);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
    }
    if (n < 2) {
        return std::nullopt;
    }
    const auto nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (denom <= 0.0) {
        return std::nullopt;
    }
    return (nn * sxy - sx * sy) / denom;
}

SyncReport sync_experiment(const System& sys, std::size_t pairs,
                           std::size_t steps, double tol, Rng& rng,
                           std::size_t trace_pairs)
{
    if (pairs < 1 || steps < 2) {
        throw DomainError("sync_experiment: need pairs >= 1 and steps >= 2");
    }
    if (!(tol > 0.0)) {
        throw DomainError("sync_experiment: tol must be positive");
    }
    struct Outcome
    {
        bool synced = false;
        std::optional<std::size_t> first_sync;
        std::optional<double> rate;
        std::vector<double> trace;
    };
    const std::uint64_t key = rng();
    std::vector<Outcome> outcomes(pairs);
    parallel_for(pairs, [&](std::size_t i) {
        Rng task(key, i);
        const Point x = uniform_point(sys.manifold(), task);
        const Point y = uniform_point(sys.manifold(), task);
        const Drive w = sys.sample_drive(steps, task);
        std::vector<double> d = sync_trace(sys, w, x, y);
        Outcome& o = outcomes[i];
        o.synced = d.back() < tol;
        if (o.synced) {
            const auto it = std::find_if(d.begin(), d.end(),
                                         [&](double v) { return v < tol; });
            o.first_sync = static_cast<std::size_t>(it - d.begin());
        }
        o.rate = fit_decay_rate(d, tol);
        if (i < trace_pairs) {
            o.trace = std::move(d);
        }
    });

    SyncReport r;
    r.pairs = pairs;
    r.steps = steps;
    r.tol = tol;
    std::vector<double> firsts;
    double rate_sum = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const Outcome& o = outcomes[i];
        if (o.synced) {
            ++r.synced;
            firsts.push_back(static_cast<double>(*o.first_sync));
        }
        if (o.rate) {
            rate_sum += *o.rate;
            ++r.fitted_pairs;
        }
        if (i < trace_pairs) {
            r.traces.push_back({i, o.trace});
        }
    }
    r.synced_fraction = static_cast<double>(r.synced) / static_cast<double>(pairs);
    if (!firsts.empty()) {
        r.median_first_sync = median(std::move(firsts));
    }
    if (r.fitted_pairs > 0) {
        r.decay_rate = rate_sum / static_cast<double>(r.fitted_pairs);
    }
    return r;
}

//---------------------------------------------------------------------------//
// Minimality, covering and isolation
//---------------------------------------------------------------------------//

MinimalityReport reachability_cover(const FiniteIfs& ifs, double x0,
                                    std::size_t cells, std::size_t budget)
{
    for (const auto& f : ifs.maps) {
        require_circle_map(f, "reachability_cover");
    }
    if (cells < 2 || cells > (std::size_t{1} << 24)) {
        throw DomainError("reachability_cover: cell count out of range");
    }
    if (budget < 1) {
        throw DomainError("reachability_cover: step budget must be >= 1");
    }
    constexpr double guard = 1e-9; // in cell units
    const auto n = static_cast<double>(cells);
    std::vector<char> covered(cells, 0);
    std::vector<std::size_t> frontier{
        std::min(static_cast<std::size_t>(wrap_unit(x0) * n), cells - 1)};
    covered[frontier.front()] = 1;
    std::size_t count = 1;

    MinimalityReport r;
    r.cells = cells;
    r.budget = budget;
    if (count == cells) {
        r.steps_to_full_cover = 0;
    }
    std::vector<std::size_t> next;
    for (std::size_t round = 1; round <= budget && count < cells
                                && !frontier.empty();
         ++round) {
        next.clear();
        for (std::size_t c : frontier) {
            for (const auto& f : ifs.maps) {
                const double lo = lift(f, static_cast<double>(c) / n) * n;
                const double hi = lift(f, static_cast<double>(c + 1) / n) * n;
                auto first = static_cast<long long>(std::floor(lo + guard));
                auto last = static_cast<long long>(std::ceil(hi - guard)) - 1;
                if (last - first + 1 >= static_cast<long long>(cells)) {
                    last = first + static_cast<long long>(cells) - 1;
                }
                for (long long j = first; j <= last; ++j) {
                    const auto cell = static_cast<std::size_t>(
                        ((j % static_cast<long long>(cells))
                         + static_cast<long long>(cells))
                        % static_cast<long long>(cells));
                    if (!covered[cell]) {
                        covered[cell] = 1;
                        ++count;
                        next.push_back(cell);
                    }
                }
            }
        }
        frontier.swap(next);
        r.rounds = round;
        if (count == cells) {
            r.steps_to_full_cover = round;
        }
    }
    r.covered_fraction = static_cast<double>(count) / n;
    return r;
}

namespace {

void require_arc(const Arc& a)
{
    const double len = a.to - a.from;
    if (!(len > 0.0 && len < 1.0)) {
        throw DomainError("arc must satisfy 0 < to - from < 1");
    }
}

} // namespace

bool covering_check(const Diffeo& f, const Diffeo& g, const Arc& b)
{
    require_circle_map(f, "covering_check");
    require_circle_map(g, "covering_check");
    require_arc(b);
    constexpr double guard = 1e-10;
    const std::array<std::pair<double, double>, 2> images{{
        {lift(f, b.from), lift(f, b.to)},
        {lift(f, lift(g, b.from)), lift(f, lift(g, b.to))},
    }};

    std::vector<std::pair<double, double>> pieces;
    for (const auto& [lo, hi] : images) {
        if (hi - lo >= 1.0 - guard) {
            return true;
        }
        const auto k0 = static_cast<long long>(std::floor(b.from - hi)) - 1;
        const auto k1 = static_cast<long long>(std::ceil(b.to - lo)) + 1;
        for (long long k = k0; k <= k1; ++k) {
            const auto shift = static_cast<double>(k);
            pieces.emplace_back(lo + shift, hi + shift);
        }
    }
    std::sort(pieces.begin(), pieces.end());
    double reached = b.from;
    for (const auto& [lo, hi] : pieces) {
        if (hi < reached) {
            continue;
        }
        if (lo > reached + guard) {
            return false;
        }
        reached = hi;
        if (reached >= b.to - guard) {
            return true;
        }
    }
    return false;
}

bool isolating_check(const Diffeo& base, const NoiseSpec& noise, const Arc& u,
                     std::size_t n_samples, Rng& rng)
{
    require_circle_map(base, "isolating_check");
    if (noise.manifold != Manifold::circle) {
        throw ManifoldMismatch("isolating_check: circle noise required");
    }
    validate(noise);
    require_arc(u);
    constexpr double margin = 1e-9;
    const double lo0 = lift(base, u.from);
    const double hi0 = lift(base, u.to);
    const double center = 0.5 * (u.from + u.to);
    const std::size_t draws = std::max<std::size_t>(n_samples, 1);
    for (std::size_t s = 0; s < draws; ++s) {
        const double a
            = noise.delta == 0.0 ? 0.0 : sample_noise_parameter(noise, rng).x();
        const double lo = lo0 + a;
        const double hi = hi0 + a;
        const double shift = std::round(center - 0.5 * (lo + hi));
        if (!(lo + shift >= u.from + margin && hi + shift <= u.to - margin)) {
            return false;
        }
    }
    return true;
}

//---------------------------------------------------------------------------//
// Uniqueness
//---------------------------------------------------------------------------//

double uniqueness_probe(const System& sys,
                        const std::vector<InitialDistribution>& inits,
                        std::size_t n_burn, std::size_t n_keep, Rng& rng,
                        std::size_t sphere_resolution)
{
    if (inits.size() < 2) {
        throw DomainError("uniqueness_probe: needs at least two initial laws");
    }
    const std::uint64_t key = rng();
    std::vector<EmpiricalMeasure> runs(inits.size());
    parallel_for(inits.size(), [&](std::size_t i) {
        Rng task(key, i);
        runs[i] = stationary_mc(sys, n_burn, n_keep, task, inits[i]);
    });

    const bool circle = sys.manifold() == Manifold::circle;
    std::optional<PartitionSpec> part;
    if (!circle) {
        part = make_partition(Manifold::sphere, sphere_resolution);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            worst = std::max(
                worst, measure_distance(runs[i], runs[j],
                                        circle ? DistanceKind::wasserstein1_circle
                                               : DistanceKind::tv_histogram,
                                        part));
        }
    }
    return worst;
}

} // namespace ifs_sync
