#include "ifs_sync/geometry.hpp"

#include <Eigen/Geometry>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ifs_sync/errors.hpp"

namespace ifs_sync {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template<class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};

const CirclePoint& as_circle(const Point& p)
{
    if (const auto* c = std::get_if<CirclePoint>(&p)) {
        return *c;
    }
    throw ManifoldMismatch("expected a circle point");
}

const SpherePoint& as_sphere(const Point& p)
{
    if (const auto* s = std::get_if<SpherePoint>(&p)) {
        return *s;
    }
    throw ManifoldMismatch("expected a sphere point");
}

void require_manifold(const Diffeo& map, Manifold m)
{
    if (map.manifold() != m) {
        throw ManifoldMismatch(map.family_name() + " acts on the "
                               + to_string(map.manifold()) + ", not the "
                               + to_string(m));
    }
}

//---------------------------------------------------------------------------//
// Flattened north-south map
//---------------------------------------------------------------------------//

double ns_derivative(double c, double u)
{
    return 1.0 + kTwoPi * c * std::cos(kTwoPi * u);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }
double bump(double t) { return t * t * (1.0 - t) * (1.0 - t); }

// Lift derivative of FlatNS at |x| = u without the bump term.
double flat_blend(const family::FlatNS& f, double u)
{
    const double t = (u - f.r0) / f.r0;
    return f.kappa0 + smoothstep(t) * (ns_derivative(f.c, u) - f.kappa0);
}

double flat_phi(const family::FlatNS& f, double u)
{
    if (u <= f.r0) {
        return f.kappa0;
    }
    if (u >= 2.0 * f.r0) {
        return ns_derivative(f.c, u);
    }
    return flat_blend(f, u) + f.bump * bump((u - f.r0) / f.r0);
}

using Quadrature = boost::math::quadrature::gauss<double, 30>;

// Odd half of the lift on [0, 1/2].
double flat_half_lift(const family::FlatNS& f, double u)
{
    if (u <= f.r0) {
        return f.kappa0 * u;
    }
    if (u >= 2.0 * f.r0) {
        return u + f.c * std::sin(kTwoPi * u);
    }
    return f.kappa0 * f.r0
           + Quadrature::integrate([&](double s) { return flat_phi(f, s); },
                                   f.r0, u);
}

double flat_lift(const family::FlatNS& f, double x)
{
    const double n = std::floor(x + 0.5);
    const double u = x - n;
    const double g = flat_half_lift(f, std::abs(u));
    return n + (u < 0.0 ? -g : g);
}

double flat_derivative(const family::FlatNS& f, double x)
{
    return flat_phi(f, std::abs(wrap_signed(x)));
}

//---------------------------------------------------------------------------//
// Stereographic scaling
//---------------------------------------------------------------------------//

struct ScaleStep
{
    Eigen::Vector3d image;
    Eigen::Matrix3d jacobian;
};

// Polar angle theta from the north pole maps to theta' with
// tan(theta'/2) = tan(theta/2) / lambda, azimuth unchanged. The differential
// is the conformal factor times the meridian rotation taking v to v'.
ScaleStep scale_step(double lambda, const Eigen::Vector3d& v)
{
    const double s = std::hypot(v.x(), v.y());
    const double theta = std::atan2(s, v.z());
    const double half = 0.5 * theta;
    const double ch = std::cos(half);
    const double sh = std::sin(half);
    const double theta_new = 2.0 * std::atan2(sh, lambda * ch);
    const double factor = lambda / (lambda * lambda * ch * ch + sh * sh);

    if (s == 0.0) {
        return {v, factor * Eigen::Matrix3d::Identity()};
    }
    const double cphi = v.x() / s;
    const double sphi = v.y() / s;
    const double beta = theta_new - theta;
    const Eigen::Vector3d e_theta(v.z() * cphi, v.z() * sphi, -s);
    Eigen::Vector3d image = std::cos(beta) * v + std::sin(beta) * e_theta;
    image.normalize();
    const Eigen::Vector3d axis(-sphi, cphi, 0.0);
    const Eigen::Matrix3d rot
        = Eigen::AngleAxisd(beta, axis).toRotationMatrix();
    return {image, factor * rot};
}

//---------------------------------------------------------------------------//
// Ambient sphere step: image and 3x3 differential
//---------------------------------------------------------------------------//

ScaleStep sphere_step(const Diffeo& map, const Eigen::Vector3d& v)
{
    return std::visit(
        overloaded{
            [&](const family::SphereRotation& r) -> ScaleStep {
                return {(r.matrix * v).normalized(), r.matrix};
            },
            [&](const family::SphereScale& s) -> ScaleStep {
                return scale_step(s.lambda, v);
            },
            [&](const family::Composition& c) -> ScaleStep {
                ScaleStep acc{v, Eigen::Matrix3d::Identity()};
                for (const auto& m : c.maps) {
                    const ScaleStep next = sphere_step(m, acc.image);
                    acc.image = next.image;
                    acc.jacobian = next.jacobian * acc.jacobian;
                }
                return acc;
            },
            [&](const family::Translated& t) -> ScaleStep {
                const ScaleStep base = sphere_step(*t.base, v);
                const Eigen::Matrix3d r = axis_angle_matrix(t.a);
                return {(r * base.image).normalized(), r * base.jacobian};
            },
            [&](const auto&) -> ScaleStep {
                throw ManifoldMismatch(map.family_name()
                                       + " is not a sphere map");
            },
        },
        map.node());
}

std::shared_ptr<const Diffeo> share(const Diffeo& d)
{
    return std::make_shared<const Diffeo>(d);
}

} // namespace

//---------------------------------------------------------------------------//
// Points and frames
//---------------------------------------------------------------------------//

std::string to_string(Manifold m)
{
    return m == Manifold::circle ? "circle" : "sphere";
}

double wrap_unit(double x)
{
    double r = x - std::floor(x);
    if (r >= 1.0) {
        r = 0.0;
    }
    return r;
}

double wrap_signed(double x)
{
    double r = x - std::floor(x + 0.5);
    if (r >= 0.5) {
        r -= 1.0;
    }
    return r;
}

CirclePoint circle_point(double x) { return CirclePoint{wrap_unit(x)}; }

SpherePoint sphere_point(const Eigen::Vector3d& v)
{
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DomainError("sphere point needs a finite nonzero vector");
    }
    return SpherePoint{v / n};
}

Manifold manifold_of(const Point& p)
{
    return std::holds_alternative<CirclePoint>(p) ? Manifold::circle
                                                  : Manifold::sphere;
}

int dimension(Manifold m) { return m == Manifold::circle ? 1 : 2; }

Point uniform_point(Manifold m, Rng& rng)
{
    if (m == Manifold::circle) {
        return CirclePoint{rng.uniform()};
    }
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = kTwoPi * rng.uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return sphere_point({r * std::cos(phi), r * std::sin(phi), z});
}

int TangentFrame::dim() const { return dimension(manifold_of(base)); }

TangentFrame canonical_frame(const Point& p)
{
    TangentFrame frame{p, Eigen::Matrix<double, 3, 2>::Zero()};
    if (std::holds_alternative<CirclePoint>(p)) {
        frame.basis(0, 0) = 1.0;
        return frame;
    }
    const Eigen::Vector3d& v = std::get<SpherePoint>(p).v;
    const Eigen::Vector3d pole = std::abs(v.z()) > 1.0 - 1e-8
                                     ? Eigen::Vector3d::UnitX()
                                     : Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d t1 = pole.cross(v).normalized();
    const Eigen::Vector3d t2 = v.cross(t1).normalized();
    frame.basis.col(0) = t1;
    frame.basis.col(1) = t2;
    return frame;
}

Eigen::Matrix3d axis_angle_matrix(const Eigen::Vector3d& a)
{
    const double angle = a.norm();
    if (angle == 0.0) {
        return Eigen::Matrix3d::Identity();
    }
    return Eigen::AngleAxisd(angle, a / angle).toRotationMatrix();
}

//---------------------------------------------------------------------------//
// Catalog
//---------------------------------------------------------------------------//

Diffeo Diffeo::rotation(double alpha)
{
    if (!std::isfinite(alpha)) {
        throw DomainError("rotation: alpha must be finite");
    }
    return Diffeo(std::make_shared<const DiffeoNode>(family::Rotation{alpha}),
                  Manifold::circle);
}

Diffeo Diffeo::north_south(double c)
{
    if (!(c > -1.0 / kTwoPi && c < 0.0)) {
        std::ostringstream msg;
        msg << "north_south: c = " << c << " outside (-1/(2 pi), 0)";
        throw DomainError(msg.str());
    }
    return Diffeo(
        std::make_shared<const DiffeoNode>(family::NorthSouthCircle{c}),
        Manifold::circle);
}

Diffeo Diffeo::flat_ns(double c, double r0, double kappa0)
{
    if (!(c > -1.0 / kTwoPi && c < 0.0)) {
        std::ostringstream msg;
        msg << "flat_ns: c = " << c << " outside (-1/(2 pi), 0)";
        throw DomainError(msg.str());
    }
    if (!(r0 > 0.0 && r0 <= 0.125)) {
        std::ostringstream msg;
        msg << "flat_ns: r0 = " << r0 << " outside (0, 1/8]";
        throw DomainError(msg.str());
    }
    if (!(kappa0 > 0.0 && std::isfinite(kappa0))) {
        std::ostringstream msg;
        msg << "flat_ns: kappa0 = " << kappa0 << " must be positive";
        throw DomainError(msg.str());
    }
    family::FlatNS f{c, r0, kappa0, 0.0};
    // The bump restores the lift increment of the unmodified map over
    // [0, 2 r0], so the map agrees with north_south(c) outside B(0, 2 r0).
    const double target = 2.0 * r0 + c * std::sin(2.0 * kTwoPi * r0);
    const double blended = Quadrature::integrate(
        [&](double s) { return flat_blend(f, s); }, r0, 2.0 * r0);
    constexpr double bump_integral = 1.0 / 30.0;
    f.bump = (target - kappa0 * r0 - blended) / (r0 * bump_integral);

    constexpr int grid = 2000;
    for (int i = 0; i <= grid; ++i) {
        const double u = r0 + r0 * i / grid;
        if (!(flat_phi(f, u) > 0.0)) {
            throw DomainError(
                "flat_ns: parameters do not give a diffeomorphism");
        }
    }
    return Diffeo(std::make_shared<const DiffeoNode>(f), Manifold::circle);
}

Diffeo Diffeo::equivariant_ns(double c)
{
    if (!(c > -1.0 / (2.0 * kTwoPi) && c < 0.0)) {
        std::ostringstream msg;
        msg << "equivariant_ns: c = " << c << " outside (-1/(4 pi), 0)";
        throw DomainError(msg.str());
    }
    return Diffeo(std::make_shared<const DiffeoNode>(family::EquivariantNS{c}),
                  Manifold::circle);
}

Diffeo Diffeo::sphere_rotation(const Eigen::Vector3d& axis, double angle)
{
    const double n = axis.norm();
    if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(angle)) {
        throw DomainError("sphere_rotation: axis must be nonzero and finite");
    }
    const Eigen::Vector3d u = axis / n;
    const Eigen::Matrix3d m = Eigen::AngleAxisd(angle, u).toRotationMatrix();
    return Diffeo(std::make_shared<const DiffeoNode>(
                      family::SphereRotation{u, angle, m}),
                  Manifold::sphere);
}

Diffeo Diffeo::sphere_scale(double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        std::ostringstream msg;
        msg << "sphere_scale: lambda = " << lambda << " must be positive";
        throw DomainError(msg.str());
    }
    return Diffeo(
        std::make_shared<const DiffeoNode>(family::SphereScale{lambda}),
        Manifold::sphere);
}

Diffeo Diffeo::composition(std::vector<Diffeo> maps)
{
    if (maps.empty()) {
        throw DomainError("composition: needs at least one map");
    }
    const Manifold m = maps.front().manifold();
    for (const auto& f : maps) {
        require_manifold(f, m);
    }
    return Diffeo(
        std::make_shared<const DiffeoNode>(family::Composition{std::move(maps)}),
        m);
}

Diffeo Diffeo::translated(const Diffeo& base, double a)
{
    require_manifold(base, Manifold::circle);
    return translated(base, Eigen::Vector3d(a, 0.0, 0.0));
}

Diffeo Diffeo::translated(const Diffeo& base, const Eigen::Vector3d& a)
{
    if (!a.allFinite()) {
        throw DomainError("translated: parameter must be finite");
    }
    Eigen::Vector3d param = a;
    if (base.manifold() == Manifold::circle) {
        param.tail<2>().setZero();
    }
    return Diffeo(std::make_shared<const DiffeoNode>(
                      family::Translated{share(base), param}),
                  base.manifold());
}

std::string Diffeo::family_name() const
{
    return std::visit(
        overloaded{
            [](const family::Rotation&) { return "rotation"; },
            [](const family::NorthSouthCircle&) { return "north_south"; },
            [](const family::FlatNS&) { return "flat_ns"; },
            [](const family::EquivariantNS&) { return "equivariant_ns"; },
            [](const family::SphereRotation&) { return "sphere_rotation"; },
            [](const family::SphereScale&) { return "sphere_scale"; },
            [](const family::Composition&) { return "composition"; },
            [](const family::Translated&) { return "translated"; },
            [](const family::CircleInverse&) { return "inverse"; },
        },
        *node_);
}

//---------------------------------------------------------------------------//
// Circle lifts
//---------------------------------------------------------------------------//

double lift(const Diffeo& map, double x)
{
    return std::visit(
        overloaded{
            [&](const family::Rotation& r) { return x + r.alpha; },
            [&](const family::NorthSouthCircle& f) {
                return x + f.c * std::sin(kTwoPi * x);
            },
            [&](const family::FlatNS& f) { return flat_lift(f, x); },
            [&](const family::EquivariantNS& f) {
                return x + f.c * std::sin(2.0 * kTwoPi * x);
            },
            [&](const family::Composition& c) {
                double y = x;
                for (const auto& m : c.maps) {
                    y = lift(m, y);
                }
                return y;
            },
            [&](const family::Translated& t) {
                return lift(*t.base, x) + t.a.x();
            },
            [&](const family::CircleInverse& inv) {
                const Diffeo& f = *inv.map;
                double lo = x - 1.0;
                double hi = x + 1.0;
                while (lift(f, lo) > x) {
                    lo -= 1.0;
                }
                while (lift(f, hi) < x) {
                    hi += 1.0;
                }
                boost::uintmax_t iterations = 200;
                const auto root = boost::math::tools::bisect(
                    [&](double u) { return lift(f, u) - x; }, lo, hi,
                    boost::math::tools::eps_tolerance<double>(), iterations);
                if (iterations >= 200) {
                    throw ComputationError(
                        "inverse: bisection did not reach tolerance");
                }
                return 0.5 * (root.first + root.second);
            },
            [&](const auto&) -> double {
                throw ManifoldMismatch(map.family_name()
                                       + " is not a circle map");
            },
        },
        map.node());
}

double lift_derivative(const Diffeo& map, double x)
{
    return std::visit(
        overloaded{
            [&](const family::Rotation&) { return 1.0; },
            [&](const family::NorthSouthCircle& f) {
                return ns_derivative(f.c, x);
            },
            [&](const family::FlatNS& f) { return flat_derivative(f, x); },
            [&](const family::EquivariantNS& f) {
                return 1.0 + 2.0 * kTwoPi * f.c * std::cos(2.0 * kTwoPi * x);
            },
            [&](const family::Composition& c) {
                double y = x;
                double d = 1.0;
                for (const auto& m : c.maps) {
                    d *= lift_derivative(m, y);
                    y = lift(m, y);
                }
                return d;
            },
            [&](const family::Translated& t) {
                return lift_derivative(*t.base, x);
            },
            [&](const family::CircleInverse& inv) {
                return 1.0 / lift_derivative(*inv.map, lift(map, x));
            },
            [&](const auto&) -> double {
                throw ManifoldMismatch(map.family_name()
                                       + " is not a circle map");
            },
        },
        map.node());
}

//---------------------------------------------------------------------------//
// Evaluation and derivatives
//---------------------------------------------------------------------------//

Point eval(const Diffeo& map, const Point& x)
{
    if (map.manifold() == Manifold::circle) {
        return CirclePoint{wrap_unit(lift(map, as_circle(x).x))};
    }
    return SpherePoint{sphere_step(map, as_sphere(x).v).image};
}

std::pair<TangentFrame, TangentMatrix> tangent(const Diffeo& map,
                                               const TangentFrame& frame)
{
    if (map.manifold() == Manifold::circle) {
        const double x = as_circle(frame.base).x;
        TangentMatrix m(1, 1);
        m(0, 0) = lift_derivative(map, x) * frame.basis(0, 0);
        return {canonical_frame(CirclePoint{wrap_unit(lift(map, x))}), m};
    }
    const ScaleStep step = sphere_step(map, as_sphere(frame.base).v);
    TangentFrame out = canonical_frame(SpherePoint{step.image});
    TangentMatrix m = out.basis.transpose() * step.jacobian * frame.basis;
    return {std::move(out), m};
}

TangentMatrix tangent_fd(const Diffeo& map, const TangentFrame& frame, double h)
{
    if (!(h > 0.0 && h <= 1e-4)) {
        throw DomainError("tangent_fd: step must lie in (0, 1e-4]");
    }
    if (map.manifold() == Manifold::circle) {
        const double x = as_circle(frame.base).x;
        TangentMatrix m(1, 1);
        m(0, 0) = (lift(map, x + h) - lift(map, x - h)) / (2.0 * h)
                  * frame.basis(0, 0);
        return m;
    }
    const Eigen::Vector3d& v = as_sphere(frame.base).v;
    const TangentFrame out
        = canonical_frame(SpherePoint{sphere_step(map, v).image});
    TangentMatrix m(2, 2);
    for (int j = 0; j < 2; ++j) {
        const Eigen::Vector3d e = frame.basis.col(j);
        const Eigen::Vector3d plus = std::cos(h) * v + std::sin(h) * e;
        const Eigen::Vector3d minus = std::cos(h) * v - std::sin(h) * e;
        const Eigen::Vector3d diff
            = (sphere_step(map, plus.normalized()).image
               - sphere_step(map, minus.normalized()).image)
              / (2.0 * h);
        m.col(j) = out.basis.transpose() * diff;
    }
    return m;
}

Diffeo inverse(const Diffeo& map)
{
    return std::visit(
        overloaded{
            [&](const family::Rotation& r) { return Diffeo::rotation(-r.alpha); },
            [&](const family::SphereRotation& r) {
                return Diffeo::sphere_rotation(r.axis, -r.angle);
            },
            [&](const family::SphereScale& s) {
                return Diffeo::sphere_scale(1.0 / s.lambda);
            },
            [&](const family::Composition& c) {
                std::vector<Diffeo> inv;
                inv.reserve(c.maps.size());
                for (auto it = c.maps.rbegin(); it != c.maps.rend(); ++it) {
                    inv.push_back(inverse(*it));
                }
                return Diffeo::composition(std::move(inv));
            },
            [&](const family::Translated& t) {
                Diffeo undo = map.manifold() == Manifold::circle
                                  ? Diffeo::rotation(-t.a.x())
                                  : (t.a.norm() == 0.0
                                         ? Diffeo::sphere_rotation(
                                             Eigen::Vector3d::UnitZ(), 0.0)
                                         : Diffeo::sphere_rotation(
                                             t.a, -t.a.norm()));
                return Diffeo::composition({undo, inverse(*t.base)});
            },
            [&](const family::CircleInverse& inv) { return *inv.map; },
            [&](const auto&) {
                return Diffeo(std::make_shared<const DiffeoNode>(
                                  family::CircleInverse{share(map)}),
                              Manifold::circle);
            },
        },
        map.node());
}

double distance(const Point& a, const Point& b)
{
    if (manifold_of(a) != manifold_of(b)) {
        throw ManifoldMismatch("distance between points on different manifolds");
    }
    if (const auto* ca = std::get_if<CirclePoint>(&a)) {
        const double d = std::abs(ca->x - std::get<CirclePoint>(b).x);
        return std::min(d, 1.0 - d);
    }
    const Eigen::Vector3d& u = std::get<SpherePoint>(a).v;
    const Eigen::Vector3d& w = std::get<SpherePoint>(b).v;
    // Same value as arccos(<u, w>) but accurate for nearby points.
    return std::atan2(u.cross(w).norm(), u.dot(w));
}

//---------------------------------------------------------------------------//
// Noise
//---------------------------------------------------------------------------//

void validate(const NoiseSpec& noise)
{
    if (!(noise.delta >= 0.0) || !std::isfinite(noise.delta)) {
        throw DomainError("noise: delta must be finite and nonnegative");
    }
    if (noise.manifold == Manifold::circle && !(noise.delta <= 0.5)) {
        std::ostringstream msg;
        msg << "noise: circle delta = " << noise.delta << " must be <= 1/2";
        throw DomainError(msg.str());
    }
    if (noise.manifold == Manifold::sphere
        && !(noise.delta <= std::numbers::pi)) {
        throw DomainError("noise: sphere delta must be <= pi");
    }
}

double noise_density(const NoiseSpec& noise, const Eigen::Vector3d& a)
{
    const double d = noise.delta;
    if (noise.manifold == Manifold::circle) {
        const double r = std::abs(a.x());
        if (r > d) {
            return 0.0;
        }
        return noise.distribution == NoiseDistribution::uniform
                   ? 1.0 / (2.0 * d)
                   : (d - r) / (d * d);
    }
    const double r = a.norm();
    if (r > d) {
        return 0.0;
    }
    if (noise.distribution == NoiseDistribution::uniform) {
        return 3.0 / (4.0 * std::numbers::pi * d * d * d);
    }
    return (d - r) / (d * d * 2.0 * std::numbers::pi * r * r);
}

Eigen::Vector3d sample_noise_parameter(const NoiseSpec& noise, Rng& rng)
{
    const double d = noise.delta;
    if (noise.manifold == Manifold::circle) {
        const double a = noise.distribution == NoiseDistribution::uniform
                             ? d * (2.0 * rng.uniform() - 1.0)
                             : d * (rng.uniform() + rng.uniform() - 1.0);
        return {a, 0.0, 0.0};
    }
    if (noise.distribution == NoiseDistribution::uniform) {
        for (;;) {
            const Eigen::Vector3d a(rng.uniform(-1.0, 1.0),
                                    rng.uniform(-1.0, 1.0),
                                    rng.uniform(-1.0, 1.0));
            if (a.squaredNorm() <= 1.0) {
                return d * a;
            }
        }
    }
    const Eigen::Vector3d dir
        = std::get<SpherePoint>(uniform_point(Manifold::sphere, rng)).v;
    return d * (rng.uniform() + rng.uniform() - 1.0) * dir;
}

Point apply_noise(const Point& x, const Eigen::Vector3d& a)
{
    if (const auto* c = std::get_if<CirclePoint>(&x)) {
        return CirclePoint{wrap_unit(c->x + a.x())};
    }
    return SpherePoint{
        (axis_angle_matrix(a) * std::get<SpherePoint>(x).v).normalized()};
}

Diffeo sample_random_map(const Diffeo& base, const NoiseSpec& noise, Rng& rng)
{
    if (noise.manifold != base.manifold()) {
        throw ManifoldMismatch("noise and base map act on different manifolds");
    }
    validate(noise);
    if (noise.delta == 0.0) {
        return base;
    }
    return Diffeo::translated(base, sample_noise_parameter(noise, rng));
}

} // namespace ifs_sync
