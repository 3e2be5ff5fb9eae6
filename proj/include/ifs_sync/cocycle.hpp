#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <variant>
#include <vector>

#include "ifs_sync/driving.hpp"
#include "ifs_sync/geometry.hpp"

namespace ifs_sync {

//! Finitely many maps picked i.i.d. with probabilities p.
struct FiniteIfs
{
    std::vector<Diffeo> maps;
    ProbabilityVector probs;
};

//! One base map post-composed with an absolutely continuous random rotation.
struct RandomFamily
{
    Diffeo base;
    NoiseSpec noise;
};

//! Drawn noise parameters play the role of symbols for a RandomFamily.
struct ParameterWord
{
    std::vector<Eigen::Vector3d> params;
};

using Drive = std::variant<SymbolWord, ParameterWord>;

std::size_t drive_length(const Drive& w);

/*!
 * Either kind of random system, with the skew-product step shared by both.
 *
 * Construction validates the invariants: nonempty maps on a common
 * manifold, one probability per map, noise on the base map's manifold.
 */
class System
{
  public:
    explicit System(FiniteIfs ifs);
    explicit System(RandomFamily family);

    Manifold manifold() const { return manifold_; }
    bool is_finite() const { return std::holds_alternative<FiniteIfs>(spec_); }
    //! Throws DomainError for a RandomFamily.
    const FiniteIfs& finite() const;
    const std::variant<FiniteIfs, RandomFamily>& spec() const { return spec_; }

    Drive sample_drive(std::size_t n, Rng& rng) const;

    //! Throws DomainError when the drive does not fit the system.
    void check(const Drive& w) const;

    //! Map number j of the drive applied to x.
    Point step(const Drive& w, std::size_t j, const Point& x) const;
    std::pair<TangentFrame, TangentMatrix>
    step_tangent(const Drive& w, std::size_t j, const TangentFrame& f) const;

    //! The map applied at step j, as a catalog value.
    Diffeo map_at(const Drive& w, std::size_t j) const;

  private:
    std::variant<FiniteIfs, RandomFamily> spec_;
    Manifold manifold_;
};

//! f_{w(n-1)} o ... o f_{w(0)}(x); the empty word returns x.
Point iterate_word(const System& sys, const Drive& w, const Point& x);

//! The n + 1 states x, f_{w(0)}(x), ..., iterate_word(sys, w, x).
std::vector<Point> trajectory(const System& sys, const Drive& w,
                              const Point& x);

/*!
 * Apply the past block (omega(-n), ..., omega(-1)), stored with w(0) =
 * omega(-n), to every point: f_{omega(-1)} o ... o f_{omega(-n)}.
 */
std::vector<Point> pullback_compose(const System& sys, const Drive& w,
                                    std::vector<Point> ensemble);

//! Running state of the derivative cocycle under QR re-orthonormalization.
struct CocycleAccumulator
{
    Point point;
    TangentFrame frame;
    //! Sum over steps of log R_ii, one entry per tangent direction.
    std::vector<double> log_sums;
    std::size_t steps = 0;
};

struct PositiveQR
{
    TangentMatrix q;
    TangentMatrix r;
};

//! QR with positive diagonal of R; throws ComputationError if |R_ii| < 1e-300.
PositiveQR qr_positive(const TangentMatrix& m);

CocycleAccumulator start_cocycle(const Point& x, const TangentFrame& frame);

//! Continue the cocycle along w.
void advance_cocycle(CocycleAccumulator& acc, const System& sys,
                     const Drive& w);

CocycleAccumulator qr_cocycle(const System& sys, const Drive& w,
                              const Point& x, const TangentFrame& frame);

} // namespace ifs_sync
