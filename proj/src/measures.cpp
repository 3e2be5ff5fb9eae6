#include "ifs_sync/measures.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ifs_sync/errors.hpp"
#include "ifs_sync/parallel.hpp"

namespace ifs_sync {
namespace {

constexpr std::size_t kChunk = 4096;

std::size_t clamp_index(double scaled, std::size_t n)
{
    if (!(scaled > 0.0)) {
        return 0;
    }
    const auto i = static_cast<std::size_t>(scaled);
    return std::min(i, n - 1);
}

} // namespace

//---------------------------------------------------------------------------//
// Partitions and histograms
//---------------------------------------------------------------------------//

PartitionSpec PartitionSpec::circle(std::size_t n)
{
    if (n < 2) {
        throw DomainError("partition: resolution must be at least 2");
    }
    PartitionSpec p;
    p.manifold_ = Manifold::circle;
    p.n_ = n;
    return p;
}

PartitionSpec PartitionSpec::sphere(std::size_t n_lat, std::size_t n_lon)
{
    if (n_lat < 2 || n_lon < 2) {
        throw DomainError("partition: resolution must be at least 2");
    }
    PartitionSpec p;
    p.manifold_ = Manifold::sphere;
    p.n_lat_ = n_lat;
    p.n_lon_ = n_lon;
    return p;
}

PartitionSpec make_partition(Manifold m, std::size_t resolution)
{
    return m == Manifold::circle ? PartitionSpec::circle(resolution)
                                 : PartitionSpec::sphere(resolution,
                                                         2 * resolution);
}

std::size_t PartitionSpec::cell_of(const Point& p) const
{
    if (manifold_of(p) != manifold_) {
        throw ManifoldMismatch("partition: point on the wrong manifold");
    }
    if (manifold_ == Manifold::circle) {
        return clamp_index(std::get<CirclePoint>(p).x * static_cast<double>(n_),
                           n_);
    }
    const Eigen::Vector3d& v = std::get<SpherePoint>(p).v;
    const std::size_t band
        = clamp_index(0.5 * (1.0 - v.z()) * static_cast<double>(n_lat_), n_lat_);
    const double phi = std::atan2(v.y(), v.x()) + std::numbers::pi;
    const std::size_t sector = clamp_index(
        phi / (2.0 * std::numbers::pi) * static_cast<double>(n_lon_), n_lon_);
    return band * n_lon_ + sector;
}

Point PartitionSpec::sample_in_cell(std::size_t cell, Rng& rng) const
{
    if (cell >= size()) {
        throw DomainError("partition: cell index out of range");
    }
    if (manifold_ == Manifold::circle) {
        return circle_point((static_cast<double>(cell) + rng.uniform())
                            / static_cast<double>(n_));
    }
    const std::size_t band = cell / n_lon_;
    const std::size_t sector = cell % n_lon_;
    const double z = 1.0
                     - 2.0 * (static_cast<double>(band) + rng.uniform())
                           / static_cast<double>(n_lat_);
    const double phi = -std::numbers::pi
                       + 2.0 * std::numbers::pi
                             * (static_cast<double>(sector) + rng.uniform())
                             / static_cast<double>(n_lon_);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return sphere_point({r * std::cos(phi), r * std::sin(phi), z});
}

double PartitionSpec::cell_volume(std::size_t cell) const
{
    if (cell >= size()) {
        throw DomainError("partition: cell index out of range");
    }
    if (manifold_ == Manifold::circle) {
        return 1.0 / static_cast<double>(n_);
    }
    // Archimedes: band area is proportional to its z-extent.
    const double dz = 2.0 / static_cast<double>(n_lat_);
    return dz / 2.0 / static_cast<double>(n_lon_);
}

UlamHistogram uniform_histogram(const PartitionSpec& part)
{
    return {part, std::vector<double>(part.size(),
                                      1.0 / static_cast<double>(part.size()))};
}

UlamHistogram histogram(const EmpiricalMeasure& m, const PartitionSpec& part)
{
    if (m.points.empty()) {
        throw DomainError("histogram of an empty measure");
    }
    std::vector<std::size_t> counts(part.size(), 0);
    for (const auto& p : m.points) {
        ++counts[part.cell_of(p)];
    }
    UlamHistogram h{part, std::vector<double>(part.size())};
    const double total = static_cast<double>(m.points.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        h.mass[c] = static_cast<double>(counts[c]) / total;
    }
    return h;
}

//---------------------------------------------------------------------------//
// Transfer operator
//---------------------------------------------------------------------------//

UlamMatrix ulam_matrix(const FiniteIfs& ifs, const PartitionSpec& part,
                       std::size_t samples_per_cell, Rng& rng)
{
    if (samples_per_cell < 1) {
        throw DomainError("ulam_matrix: samples_per_cell must be >= 1");
    }
    for (const auto& f : ifs.maps) {
        if (f.manifold() != part.manifold()) {
            throw ManifoldMismatch("ulam_matrix: map and partition differ");
        }
    }
    const std::size_t n = part.size();
    const std::size_t k = ifs.maps.size();
    const std::uint64_t key = rng();
    UlamMatrix out{part, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                               static_cast<Eigen::Index>(n))};

    parallel_for(n, [&](std::size_t cell) {
        Rng cell_rng(key, cell);
        std::vector<std::size_t> targets(k * samples_per_cell);
        for (std::size_t s = 0; s < samples_per_cell; ++s) {
            const Point x = part.sample_in_cell(cell, cell_rng);
            for (std::size_t i = 0; i < k; ++i) {
                targets[i * samples_per_cell + s]
                    = part.cell_of(eval(ifs.maps[i], x));
            }
        }
        const double inv = 1.0 / static_cast<double>(samples_per_cell);
        for (std::size_t i = 0; i < k; ++i) {
            auto first = targets.begin()
                         + static_cast<std::ptrdiff_t>(i * samples_per_cell);
            auto last = first + static_cast<std::ptrdiff_t>(samples_per_cell);
            std::sort(first, last);
            for (auto it = first; it != last;) {
                auto next = std::upper_bound(it, last, *it);
                const auto count = static_cast<double>(next - it);
                out.matrix(static_cast<Eigen::Index>(cell),
                           static_cast<Eigen::Index>(*it))
                    += ifs.probs[i] * (count * inv);
                it = next;
            }
        }
    });
    return out;
}

EmpiricalMeasure transfer_push(const FiniteIfs& ifs, const EmpiricalMeasure& m,
                               Rng& rng)
{
    EmpiricalMeasure out;
    out.points.reserve(m.points.size());
    for (const auto& p : m.points) {
        const Symbol i = ifs.probs.strip_index(rng.uniform());
        out.points.push_back(eval(ifs.maps[i], p));
    }
    return out;
}

StationaryVector stationary_power(const UlamMatrix& m, double tol,
                                  std::size_t max_iter)
{
    const Eigen::Index n = m.matrix.rows();
    if (n == 0 || m.matrix.cols() != n) {
        throw DomainError("stationary_power: matrix must be square");
    }
    // v_{n+1}^T = M^T v_n^T, with M^T held sparse.
    const Eigen::SparseMatrix<double> mt
        = m.matrix.transpose().sparseView(0.0, 0.0);

    const Eigen::VectorXd start
        = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd v = start;
    Eigen::VectorXd sum = start;
    auto finish = [&](Eigen::VectorXd x, std::size_t it, double res,
                      bool cesaro) {
        x /= x.sum();
        StationaryVector out;
        out.histogram.partition = m.partition;
        out.histogram.mass.assign(x.data(), x.data() + n);
        out.iterations = it;
        out.residual = res;
        out.cesaro = cesaro;
        return out;
    };

    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd next = mt * v;
        const double plain = (next - v).lpNorm<1>();
        if (plain <= tol) {
            return finish(std::move(v), it, plain, false);
        }
        // Average of v_0..v_{it-1} has residual ||v_it - v_0||_1 / it.
        const double averaged
            = (next - start).lpNorm<1>() / static_cast<double>(it);
        if (averaged <= tol) {
            return finish(sum / static_cast<double>(it), it, averaged, true);
        }
        sum += next;
        v = std::move(next);
    }
    std::ostringstream msg;
    msg << "stationary_power: no convergence to " << tol << " in " << max_iter
        << " iterations";
    throw ComputationError(msg.str());
}

//---------------------------------------------------------------------------//
// Monte Carlo stationary measures
//---------------------------------------------------------------------------//

Point InitialDistribution::sample(Manifold m, Rng& rng) const
{
    switch (kind) {
    case Kind::uniform:
        return uniform_point(m, rng);
    case Kind::delta:
        if (!point || manifold_of(*point) != m) {
            throw ManifoldMismatch("initial delta point on the wrong manifold");
        }
        return *point;
    case Kind::arc:
        if (m != Manifold::circle) {
            throw ManifoldMismatch("arc initial law is circle only");
        }
        return circle_point(rng.uniform(from, to));
    }
    throw DomainError("unknown initial distribution");
}

EmpiricalMeasure stationary_mc(const System& sys, std::size_t n_burn,
                               std::size_t n_keep, Rng& rng,
                               const InitialDistribution& init)
{
    if (n_keep < 1) {
        throw DomainError("stationary_mc: n_keep must be >= 1");
    }
    Point x = init.sample(sys.manifold(), rng);
    for (std::size_t done = 0; done < n_burn;) {
        const std::size_t len = std::min(kChunk, n_burn - done);
        x = iterate_word(sys, sys.sample_drive(len, rng), x);
        done += len;
    }
    EmpiricalMeasure out;
    out.points.reserve(n_keep);
    out.points.push_back(x);
    while (out.points.size() < n_keep) {
        const std::size_t len = std::min(kChunk, n_keep - out.points.size());
        const Drive w = sys.sample_drive(len, rng);
        for (std::size_t j = 0; j < len; ++j) {
            x = sys.step(w, j, x);
            out.points.push_back(x);
        }
    }
    return out;
}

//---------------------------------------------------------------------------//
// Distances
//---------------------------------------------------------------------------//

double wasserstein1_circle(const EmpiricalMeasure& a, const EmpiricalMeasure& b)
{
    if (a.points.empty() || b.points.empty()) {
        throw DomainError("wasserstein1_circle: empty measure");
    }
    struct Event
    {
        double x;
        double dmass;
    };
    std::vector<Event> events;
    events.reserve(a.points.size() + b.points.size());
    const double wa = 1.0 / static_cast<double>(a.points.size());
    const double wb = 1.0 / static_cast<double>(b.points.size());
    for (const auto& p : a.points) {
        if (!std::holds_alternative<CirclePoint>(p)) {
            throw ManifoldMismatch("wasserstein1_circle: sphere point");
        }
        events.push_back({std::get<CirclePoint>(p).x, wa});
    }
    for (const auto& p : b.points) {
        if (!std::holds_alternative<CirclePoint>(p)) {
            throw ManifoldMismatch("wasserstein1_circle: sphere point");
        }
        events.push_back({std::get<CirclePoint>(p).x, -wb});
    }
    std::sort(events.begin(), events.end(),
              [](const Event& l, const Event& r) { return l.x < r.x; });

    // Piecewise constant D = F_a - F_b as (value, length) segments.
    std::vector<std::pair<double, double>> segments;
    segments.reserve(events.size() + 1);
    double value = 0.0;
    double pos = 0.0;
    for (const auto& e : events) {
        if (e.x > pos) {
            segments.emplace_back(value, e.x - pos);
            pos = e.x;
        }
        value += e.dmass;
    }
    if (pos < 1.0) {
        segments.emplace_back(value, 1.0 - pos);
    }

    // The optimal rotation constant is a Lebesgue median of D.
    std::vector<std::pair<double, double>> sorted = segments;
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    double median = sorted.back().first;
    for (const auto& [v, len] : sorted) {
        acc += len;
        if (acc >= 0.5) {
            median = v;
            break;
        }
    }
    double w1 = 0.0;
    for (const auto& [v, len] : segments) {
        w1 += len * std::abs(v - median);
    }
    return w1;
}

double tv_distance(const UlamHistogram& a, const UlamHistogram& b)
{
    if (!(a.partition == b.partition) || a.mass.size() != b.mass.size()) {
        throw DomainError("tv_distance: partition mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) {
        s += std::abs(a.mass[i] - b.mass[i]);
    }
    return 0.5 * s;
}

double measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        DistanceKind kind,
                        const std::optional<PartitionSpec>& part)
{
    if (kind == DistanceKind::wasserstein1_circle) {
        return wasserstein1_circle(a, b);
    }
    if (!part) {
        throw DomainError("measure_distance: tv_histogram needs a partition");
    }
    return tv_distance(histogram(a, *part), histogram(b, *part));
}

double support_coverage(const UlamHistogram& h, double floor)
{
    if (!(floor >= 0.0 && floor < 1.0)) {
        throw DomainError("support_coverage: floor must lie in [0, 1)");
    }
    const double cells = static_cast<double>(h.mass.size());
    const double threshold = floor / cells;
    const auto covered = std::count_if(h.mass.begin(), h.mass.end(),
                                       [&](double m) { return m > threshold; });
    return static_cast<double>(covered) / cells;
}

} // namespace ifs_sync
