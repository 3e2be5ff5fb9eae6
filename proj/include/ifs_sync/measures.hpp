#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <vector>

#include "ifs_sync/cocycle.hpp"
#include "ifs_sync/geometry.hpp"

namespace ifs_sync {

/*!
 * Finite partition of the fiber manifold.
 *
 * Circle: N arcs [j/N, (j+1)/N). Sphere: n_lat equal-area bands (equal
 * slices in z, band 0 at the north pole) times n_lon longitude sectors;
 * cell index = band * n_lon + sector.
 */
class PartitionSpec
{
  public:
    static PartitionSpec circle(std::size_t n);
    static PartitionSpec sphere(std::size_t n_lat, std::size_t n_lon);

    Manifold manifold() const { return manifold_; }
    std::size_t size() const { return manifold_ == Manifold::circle ? n_ : n_lat_ * n_lon_; }
    std::size_t arcs() const { return n_; }
    std::size_t bands() const { return n_lat_; }
    std::size_t sectors() const { return n_lon_; }

    std::size_t cell_of(const Point& p) const;
    //! Uniform (normalized-volume) sample inside a cell.
    Point sample_in_cell(std::size_t cell, Rng& rng) const;
    //! Normalized volume of a cell (exactly 1 / size()).
    double cell_volume(std::size_t cell) const;

    bool operator==(const PartitionSpec&) const = default;

  private:
    Manifold manifold_ = Manifold::circle;
    std::size_t n_ = 0;
    std::size_t n_lat_ = 0;
    std::size_t n_lon_ = 0;
};

//! Circle: resolution arcs. Sphere: resolution bands by 2 * resolution sectors.
PartitionSpec make_partition(Manifold m, std::size_t resolution);

struct UlamHistogram
{
    PartitionSpec partition;
    std::vector<double> mass;
};

UlamHistogram uniform_histogram(const PartitionSpec& part);

//! Equal-weight point cloud.
struct EmpiricalMeasure
{
    std::vector<Point> points;
};

UlamHistogram histogram(const EmpiricalMeasure& m, const PartitionSpec& part);

//! Row-stochastic discretization of the transfer operator.
struct UlamMatrix
{
    PartitionSpec partition;
    Eigen::MatrixXd matrix;
};

/*!
 * Entry [c][c'] = sum_i p_i * (fraction of samples drawn uniformly in cell c
 * that f_i maps into c'). Cells are processed in parallel, each with its own
 * substream, so the result does not depend on the worker count.
 */
UlamMatrix ulam_matrix(const FiniteIfs& ifs, const PartitionSpec& part,
                       std::size_t samples_per_cell, Rng& rng);

//! One Markov step of every point: f_i with probability p_i.
EmpiricalMeasure transfer_push(const FiniteIfs& ifs, const EmpiricalMeasure& m,
                               Rng& rng);

struct StationaryVector
{
    UlamHistogram histogram;
    std::size_t iterations = 0;
    //! || v M - v ||_1 of the returned vector.
    double residual = 0.0;
    //! True when the running Cesaro average was returned.
    bool cesaro = false;
};

/*!
 * Power iteration from the uniform vector with Cesaro averaging.
 *
 * Stops as soon as either the plain iterate or the running average has
 * fixed-point residual <= tol; the Cesaro average converges for periodic
 * (permutation-like) matrices where plain iterates cycle. Throws
 * ComputationError when max_iter is exceeded.
 */
StationaryVector stationary_power(const UlamMatrix& m, double tol,
                                  std::size_t max_iter);

/*!
 * Initial law of a stationary run: uniform, a point mass, or uniform on an
 * arc [from, to] (circle only).
 */
struct InitialDistribution
{
    enum class Kind
    {
        uniform,
        delta,
        arc
    };
    Kind kind = Kind::uniform;
    std::optional<Point> point;
    double from = 0.0;
    double to = 0.0;

    Point sample(Manifold m, Rng& rng) const;
};

//! One long orbit; discard n_burn states, keep the next n_keep.
EmpiricalMeasure stationary_mc(const System& sys, std::size_t n_burn,
                               std::size_t n_keep, Rng& rng,
                               const InitialDistribution& init = {});

enum class DistanceKind
{
    wasserstein1_circle,
    tv_histogram
};

//! W1 on the circle: min over t of the integral of |F_a - F_b - t|.
double wasserstein1_circle(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
//! Half the L1 distance of cell masses; partitions must match.
double tv_distance(const UlamHistogram& a, const UlamHistogram& b);

//! tv_histogram needs the partition to bin both measures on.
double measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        DistanceKind kind,
                        const std::optional<PartitionSpec>& part = std::nullopt);

//! Fraction of cells whose mass exceeds floor / cells.
double support_coverage(const UlamHistogram& h, double floor);

} // namespace ifs_sync
