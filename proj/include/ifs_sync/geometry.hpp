#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ifs_sync/rng.hpp"

namespace ifs_sync {

enum class Manifold
{
    circle,
    sphere
};

std::string to_string(Manifold m);

//! Angle on S^1 measured in revolutions, always reduced to [0, 1).
struct CirclePoint
{
    double x = 0.0;
};

//! Unit vector on S^2.
struct SpherePoint
{
    Eigen::Vector3d v{0.0, 0.0, 1.0};
};

using Point = std::variant<CirclePoint, SpherePoint>;

CirclePoint circle_point(double x);
SpherePoint sphere_point(const Eigen::Vector3d& v);
Manifold manifold_of(const Point& p);
int dimension(Manifold m);

//! Reduce an angle in revolutions to [0, 1).
double wrap_unit(double x);
//! Signed representative of x mod 1 in [-1/2, 1/2).
double wrap_signed(double x);

Point uniform_point(Manifold m, Rng& rng);

//! Orthonormal basis of the tangent space at a point.
//!
//! On the sphere both columns of `basis` are used. On the circle only
//! basis(0, 0) matters: it is the orientation (+1 or -1) of the frame
//! relative to increasing angle.
struct TangentFrame
{
    Point base;
    Eigen::Matrix<double, 3, 2> basis = Eigen::Matrix<double, 3, 2>::Zero();

    int dim() const;
};

//! Deterministic frame: (e3 x v, v x (e3 x v)) normalized, with an
//! e1-based fallback near the poles. Circle frames are positively oriented.
TangentFrame canonical_frame(const Point& p);

//! At most 2x2, stack allocated.
using TangentMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

class Diffeo;

namespace family {
struct Rotation
{
    double alpha;
};
struct NorthSouthCircle
{
    double c;
};
//! North-south map whose lift derivative is forced to kappa0 on B(0, r0).
struct FlatNS
{
    double c;
    double r0;
    double kappa0;
    double bump; //!< amplitude restoring the lift increment over [r0, 2 r0]
};
struct EquivariantNS
{
    double c;
};
struct SphereRotation
{
    Eigen::Vector3d axis;
    double angle;
    Eigen::Matrix3d matrix;
};
//! Stereographic scaling z -> lambda z (projection from the north pole).
struct SphereScale
{
    double lambda;
};
//! maps.front() is applied first.
struct Composition
{
    std::vector<Diffeo> maps;
};
//! base followed by Rotation(a[0]) (circle) or the rotation with
//! axis-angle vector a (sphere).
struct Translated
{
    std::shared_ptr<const Diffeo> base;
    Eigen::Vector3d a;
};
//! Inverse of a circle map, evaluated by bisection on the monotone lift.
struct CircleInverse
{
    std::shared_ptr<const Diffeo> map;
};
} // namespace family

using DiffeoNode = std::variant<family::Rotation,
                                family::NorthSouthCircle,
                                family::FlatNS,
                                family::EquivariantNS,
                                family::SphereRotation,
                                family::SphereScale,
                                family::Composition,
                                family::Translated,
                                family::CircleInverse>;

/*!
 * Immutable handle to a diffeomorphism from the built-in catalog.
 *
 * Constructors validate parameters and throw DomainError when a parameter
 * leaves the range where the family is a diffeomorphism.
 */
class Diffeo
{
  public:
    static Diffeo rotation(double alpha);
    //! x -> x + c sin(2 pi x), c in (-1/(2 pi), 0).
    static Diffeo north_south(double c);
    static Diffeo flat_ns(double c, double r0, double kappa0);
    //! x -> x + c sin(4 pi x), c in (-1/(4 pi), 0).
    static Diffeo equivariant_ns(double c);
    static Diffeo sphere_rotation(const Eigen::Vector3d& axis, double angle);
    //! Any lambda > 0 is representable; lambda < 1 attracts to the south pole.
    static Diffeo sphere_scale(double lambda);
    static Diffeo composition(std::vector<Diffeo> maps);
    static Diffeo translated(const Diffeo& base, double a);
    static Diffeo translated(const Diffeo& base, const Eigen::Vector3d& a);

    Manifold manifold() const { return manifold_; }
    const DiffeoNode& node() const { return *node_; }
    std::string family_name() const;

  private:
    Diffeo(std::shared_ptr<const DiffeoNode> node, Manifold m)
        : node_(std::move(node)), manifold_(m)
    {
    }
    friend Diffeo inverse(const Diffeo& map);

    std::shared_ptr<const DiffeoNode> node_;
    Manifold manifold_;
};

Point eval(const Diffeo& map, const Point& x);

//! Degree-one lift F of a circle map: F(x + 1) = F(x) + 1, F' > 0.
double lift(const Diffeo& map, double x);
double lift_derivative(const Diffeo& map, double x);

//! Image frame (canonical at the image point) and the derivative matrix
//! from the input frame to it.
std::pair<TangentFrame, TangentMatrix> tangent(const Diffeo& map,
                                               const TangentFrame& frame);

//! Central differences along geodesics, same frame convention as tangent.
TangentMatrix tangent_fd(const Diffeo& map, const TangentFrame& frame,
                         double h);

Diffeo inverse(const Diffeo& map);

double distance(const Point& a, const Point& b);

//! Rotation matrix of an axis-angle vector (identity for a = 0).
Eigen::Matrix3d axis_angle_matrix(const Eigen::Vector3d& a);

enum class NoiseDistribution
{
    uniform,
    triangular
};

/*!
 * Parameter noise. Circle: a in [-delta, delta]. Sphere: axis-angle vector
 * in the closed delta-ball (uniform in the ball, or a uniform direction with
 * a triangular signed magnitude).
 */
struct NoiseSpec
{
    Manifold manifold = Manifold::circle;
    NoiseDistribution distribution = NoiseDistribution::uniform;
    double delta = 0.0;
};

void validate(const NoiseSpec& noise);

//! Density of the parameter law at a (circle: a[0] only).
double noise_density(const NoiseSpec& noise, const Eigen::Vector3d& a);

Eigen::Vector3d sample_noise_parameter(const NoiseSpec& noise, Rng& rng);

//! Post-compose a point with the noise rotation of parameter a.
Point apply_noise(const Point& x, const Eigen::Vector3d& a);

//! Translated(base, a) with a drawn from the noise law; delta = 0 returns base.
Diffeo sample_random_map(const Diffeo& base, const NoiseSpec& noise, Rng& rng);

} // namespace ifs_sync
