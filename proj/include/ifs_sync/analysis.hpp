#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ifs_sync/cocycle.hpp"
#include "ifs_sync/measures.hpp"

namespace ifs_sync {

//---------------------------------------------------------------------------//
// Lyapunov exponents
//---------------------------------------------------------------------------//

struct LyapunovParams
{
    std::size_t n = 100000;    //!< steps averaged after burn-in
    std::size_t burn = 1000;   //!< steps discarded first
    std::size_t blocks = 10;   //!< batch means for the standard error
    std::optional<Point> start; //!< uniform random when absent
};

//! Exponents per step (natural log), sorted descending, with block-means
//! standard errors aligned to them.
struct LyapunovEstimate
{
    std::vector<double> exponents;
    std::vector<double> std_errors;
    std::size_t steps = 0;
    std::size_t burn = 0;
    std::size_t blocks = 0;
};

/*!
 * Birkhoff averages of log R_ii along one random orbit.
 *
 * The steps are split into `blocks` equal blocks (a remainder of
 * n mod blocks steps is not used); the estimate is the mean of block means
 * and the standard error is their sample deviation over sqrt(blocks).
 */
LyapunovEstimate lyapunov_spectrum(const System& sys, const LyapunovParams& p,
                                   Rng& rng);

//! lyapunov_spectrum restricted to the top exponent.
LyapunovEstimate lyapunov_top(const System& sys, const LyapunovParams& p,
                              Rng& rng);

//! sum_i p_i * mean over m of ln ||Df_i||, an upper bound for the top exponent.
double lyapunov_upper_bound(const FiniteIfs& ifs, const EmpiricalMeasure& m);

//---------------------------------------------------------------------------//
// Pull-back atoms
//---------------------------------------------------------------------------//

//! Connected components of the graph joining points at distance <= radius.
//! Labels are numbered in order of first appearance.
std::vector<std::size_t> single_linkage(const std::vector<Point>& points,
                                        double radius);

struct PullbackReport
{
    std::size_t depth = 0;
    std::size_t atom_count = 0;
    //! Sorted by weight (descending), then by position.
    std::vector<Point> centers;
    std::vector<double> weights;
    std::vector<double> diameters;
    double max_diameter = 0.0;
    //! Smallest distance between points of different clusters (none if K = 1).
    std::optional<double> min_inter_distance;
    //! Diameter of the ensemble before and after the pull-back.
    double initial_spread = 0.0;
    double final_spread = 0.0;
    //! Some cluster is wider than 10 radii, or more than half the points stay singletons.
    bool non_atomic = false;
};

//! Cluster an already pulled-back cloud.
PullbackReport summarize_clusters(const std::vector<Point>& initial,
                                  const std::vector<Point>& images,
                                  double cluster_radius, std::size_t depth);

/*!
 * Draw a past word of length `depth`, push the ensemble through
 * pullback_compose, and cluster the images by single linkage.
 * Needs cluster_radius > 0 and at least 20 ensemble points.
 */
PullbackReport pullback_atoms(const System& sys, const EmpiricalMeasure& ensemble,
                              std::size_t depth, double cluster_radius,
                              Rng& rng);

//---------------------------------------------------------------------------//
// Synchronization
//---------------------------------------------------------------------------//

//! d(f^j_w x, f^j_w y) for j = 0..|w|.
std::vector<double> sync_trace(const System& sys, const Drive& w,
                               const Point& x, const Point& y);

//! Least-squares slope of ln d against step over the steps whose distance
//! lies in (10 tol, d_0 / 10); none with fewer than two such steps.
std::optional<double> fit_decay_rate(const std::vector<double>& trace,
                                     double tol);

struct PairTrace
{
    std::size_t pair_id = 0;
    std::vector<double> distances;
};

struct SyncReport
{
    std::size_t pairs = 0;
    std::size_t steps = 0;
    double tol = 0.0;
    std::size_t synced = 0;
    double synced_fraction = 0.0;
    std::optional<double> median_first_sync;
    //! Mean fitted slope of ln d per step (negative when contracting).
    std::optional<double> decay_rate;
    std::size_t fitted_pairs = 0;
    std::vector<PairTrace> traces;
};

/*!
 * Independent uniform pairs, each pair driven by its own shared word of
 * length steps. Pair i uses substream i of a key drawn from rng, so the
 * report does not depend on the worker count. The first trace_pairs
 * distance traces are kept.
 */
SyncReport sync_experiment(const System& sys, std::size_t pairs,
                           std::size_t steps, double tol, Rng& rng,
                           std::size_t trace_pairs = 0);

//---------------------------------------------------------------------------//
// Minimality, covering and isolation (circle)
//---------------------------------------------------------------------------//

struct MinimalityReport
{
    std::size_t cells = 0;
    std::size_t budget = 0;
    std::size_t rounds = 0;
    double covered_fraction = 0.0;
    std::optional<std::size_t> steps_to_full_cover;
};

/*!
 * Breadth-first expansion over cells of width 1/cells: a cell reaches every
 * cell met by its image arc under some map. Starts from the cell of x0 and
 * runs at most `budget` rounds.
 */
MinimalityReport reachability_cover(const FiniteIfs& ifs, double x0,
                                    std::size_t cells, std::size_t budget);

//! Closed arc [from, to] given on the lift, 0 < to - from < 1.
struct Arc
{
    double from = 0.0;
    double to = 0.0;
};

//! B within f(B) union f(g(B)), with a 1e-10 guard band.
bool covering_check(const Diffeo& f, const Diffeo& g, const Arc& b);

//! f_a(U) inside the interior of U, 1e-9 margin, for every sampled a.
bool isolating_check(const Diffeo& base, const NoiseSpec& noise, const Arc& u,
                     std::size_t n_samples, Rng& rng);

//---------------------------------------------------------------------------//
// Uniqueness
//---------------------------------------------------------------------------//

/*!
 * stationary_mc from each initial law, then the largest pairwise distance:
 * W1 on the circle, TV of histograms on the sphere partition with
 * `sphere_resolution` bands.
 */
double uniqueness_probe(const System& sys,
                        const std::vector<InitialDistribution>& inits,
                        std::size_t n_burn, std::size_t n_keep, Rng& rng,
                        std::size_t sphere_resolution = 8);

} // namespace ifs_sync
