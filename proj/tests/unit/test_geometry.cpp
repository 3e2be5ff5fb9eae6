#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/LU>

#include "helpers.hpp"
#include "ifs_sync/errors.hpp"
#include "ifs_sync/geometry.hpp"
#include "ifs_sync/rng.hpp"

using namespace ifs_sync;
using test::cp;
using test::cx;
using test::sp;
using test::sv;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<Diffeo> circle_catalog()
{
    const Diffeo ns = Diffeo::north_south(-0.1);
    return {Diffeo::rotation(0.3),
            ns,
            Diffeo::flat_ns(-0.12, 0.05, 0.01),
            Diffeo::equivariant_ns(-0.06),
            Diffeo::composition({ns, Diffeo::rotation(test::golden)}),
            Diffeo::translated(Diffeo::equivariant_ns(-0.05), 0.07),
            inverse(ns),
            Diffeo::composition({inverse(Diffeo::north_south(-0.14)),
                                 Diffeo::rotation(0.02)})};
}

std::vector<Diffeo> sphere_catalog()
{
    const Diffeo scale = Diffeo::sphere_scale(0.8);
    const Diffeo rot = Diffeo::sphere_rotation(Eigen::Vector3d(1, 2, 3), 0.7);
    return {rot,
            scale,
            inverse(scale),
            Diffeo::composition({scale, rot}),
            Diffeo::translated(scale, Eigen::Vector3d(0.1, -0.2, 0.05))};
}

//! Central differences on the lift, written without the library helpers.
double circle_fd(const Diffeo& f, double x, double h)
{
    const double up = cx(eval(f, cp(x + h)));
    const double down = cx(eval(f, cp(x - h)));
    double diff = up - down;
    diff -= std::round(diff);
    return diff / (2.0 * h);
}

//! Ambient Jacobian by central differences along great circles, projected on
//! orthonormal frames built here from the same rule as the library frames.
Eigen::Matrix2d sphere_fd(const Diffeo& f, const Eigen::Vector3d& v,
                          const Eigen::Matrix<double, 3, 2>& in,
                          const Eigen::Matrix<double, 3, 2>& out, double h)
{
    Eigen::Matrix2d m;
    for (int k = 0; k < 2; ++k) {
        const Eigen::Vector3d t = in.col(k);
        const Eigen::Vector3d plus = std::cos(h) * v + std::sin(h) * t;
        const Eigen::Vector3d minus = std::cos(h) * v - std::sin(h) * t;
        const Eigen::Vector3d d
            = (sv(eval(f, SpherePoint{plus})) - sv(eval(f, SpherePoint{minus})))
              / (2.0 * h);
        m(0, k) = out.col(0).dot(d);
        m(1, k) = out.col(1).dot(d);
    }
    return m;
}

} // namespace

TEST_SUITE("geometry")
{
    TEST_CASE("eval examples")
    {
        CHECK(cx(eval(Diffeo::north_south(-0.1), cp(0.0))) == 0.0);
        CHECK(cx(eval(Diffeo::rotation(0.25), cp(0.1)))
              == doctest::Approx(0.35).epsilon(1e-15));
        CHECK(cx(eval(Diffeo::north_south(-0.1), cp(0.25)))
              == doctest::Approx(0.15).epsilon(1e-15));
    }

    TEST_CASE("canonical forms")
    {
        CHECK(cx(cp(1.3)) == doctest::Approx(0.3));
        CHECK(cx(cp(-0.25)) == doctest::Approx(0.75));
        CHECK(cx(cp(-1e-18)) < 1.0);
        CHECK(cx(cp(1.0)) == 0.0);
        Rng rng(1, 0);
        const Diffeo rot = Diffeo::sphere_rotation(Eigen::Vector3d(0, 1, 1), 2.0);
        for (int i = 0; i < 1000; ++i) {
            const Point x = uniform_point(Manifold::circle, rng);
            const double y = cx(eval(Diffeo::rotation(0.9), x));
            CHECK((y >= 0.0 && y < 1.0));
            Point p = uniform_point(Manifold::sphere, rng);
            for (int k = 0; k < 50; ++k) {
                p = eval(rot, p);
            }
            CHECK(std::abs(sv(p).norm() - 1.0) <= 1e-12);
        }
        CHECK_THROWS_AS(sphere_point(Eigen::Vector3d::Zero()), DomainError);
    }

    TEST_CASE("tangent frames are orthonormal")
    {
        Rng rng(2, 0);
        std::vector<Point> pts{sp(0, 0, 1), sp(0, 0, -1), sp(1e-9, 0, 1),
                               sp(1, 0, 0)};
        for (int i = 0; i < 200; ++i) {
            pts.push_back(uniform_point(Manifold::sphere, rng));
        }
        for (const auto& p : pts) {
            const TangentFrame f = canonical_frame(p);
            const Eigen::Vector3d& v = sv(p);
            CHECK(std::abs(f.basis.col(0).norm() - 1.0) <= 1e-10);
            CHECK(std::abs(f.basis.col(1).norm() - 1.0) <= 1e-10);
            CHECK(std::abs(f.basis.col(0).dot(f.basis.col(1))) <= 1e-10);
            CHECK(std::abs(f.basis.col(0).dot(v)) <= 1e-10);
            CHECK(std::abs(f.basis.col(1).dot(v)) <= 1e-10);
        }
        CHECK(canonical_frame(cp(0.4)).dim() == 1);
    }

    TEST_CASE("tangent examples")
    {
        const auto [f1, m1] = tangent(Diffeo::rotation(0.7), canonical_frame(cp(0.2)));
        CHECK(m1.rows() == 1);
        CHECK(m1(0, 0) == 1.0);
        CHECK(cx(f1.base) == doctest::Approx(0.9));

        const double c = -0.1;
        const auto [f2, m2] = tangent(Diffeo::north_south(c), canonical_frame(cp(0.0)));
        CHECK(m2(0, 0) == doctest::Approx(1.0 + 2.0 * pi * c).epsilon(1e-14));

        Rng rng(3, 0);
        const Diffeo rot = Diffeo::sphere_rotation(Eigen::Vector3d(0.3, -1, 2), 1.1);
        for (int i = 0; i < 100; ++i) {
            const auto [f, m] = tangent(rot, canonical_frame(uniform_point(Manifold::sphere, rng)));
            const Eigen::Matrix2d q = m;
            CHECK((q.transpose() * q - Eigen::Matrix2d::Identity()).norm() <= 1e-10);
            CHECK(std::abs(q.determinant() - 1.0) <= 1e-10);
        }
    }

    TEST_CASE("tangent_fd examples")
    {
        const TangentMatrix r = tangent_fd(Diffeo::rotation(0.3), canonical_frame(cp(0.6)), 1e-6);
        CHECK(std::abs(r(0, 0) - 1.0) <= 1e-8);
        const TangentMatrix n
            = tangent_fd(Diffeo::north_south(-0.1), canonical_frame(cp(0.25)), 1e-6);
        CHECK(std::abs(n(0, 0) - 1.0) <= 1e-6);
        CHECK_THROWS_AS(tangent_fd(Diffeo::rotation(0.1), canonical_frame(cp(0.1)), 0.0),
                        DomainError);
        CHECK_THROWS_AS(tangent_fd(Diffeo::rotation(0.1), canonical_frame(cp(0.1)), 1e-3),
                        DomainError);
    }

    TEST_CASE("closed-form tangents match finite differences")
    {
        Rng rng(4, 0);
        for (const auto& f : circle_catalog()) {
            CAPTURE(f.family_name());
            for (int i = 0; i < 100; ++i) {
                const double x = rng.uniform();
                const TangentFrame frame = canonical_frame(cp(x));
                const double exact = tangent(f, frame).second(0, 0);
                CHECK(std::abs(exact - circle_fd(f, x, 1e-6)) <= 1e-5 * std::abs(exact));
                CHECK(std::abs(exact - tangent_fd(f, frame, 1e-6)(0, 0))
                      <= 1e-5 * std::abs(exact));
            }
        }
        for (const auto& f : sphere_catalog()) {
            CAPTURE(f.family_name());
            for (int i = 0; i < 100; ++i) {
                const Point p = uniform_point(Manifold::sphere, rng);
                const TangentFrame frame = canonical_frame(p);
                const auto [out, m] = tangent(f, frame);
                const Eigen::Matrix2d exact = m;
                const Eigen::Matrix2d oracle
                    = sphere_fd(f, sv(p), frame.basis, out.basis, 1e-6);
                CHECK((exact - oracle).norm() <= 1e-5 * exact.norm());
                const Eigen::Matrix2d lib = tangent_fd(f, frame, 1e-6);
                CHECK((exact - lib).norm() <= 1e-5 * exact.norm());
            }
        }
    }

    TEST_CASE("sphere scale has conformal factor lambda at the south pole")
    {
        const auto [f, m] = tangent(Diffeo::sphere_scale(0.8), canonical_frame(sp(0, 0, -1)));
        CHECK(std::abs(sv(f.base).z() + 1.0) <= 1e-15);
        const Eigen::Matrix2d j = m;
        CHECK((j.transpose() * j - 0.64 * Eigen::Matrix2d::Identity()).norm() <= 1e-12);
        const auto [g, n] = tangent(Diffeo::sphere_scale(0.8), canonical_frame(sp(0, 0, 1)));
        const Eigen::Matrix2d k = n;
        CHECK((k.transpose() * k - Eigen::Matrix2d::Identity() / 0.64).norm() <= 1e-10);
        CHECK(std::abs(sv(g.base).z() - 1.0) <= 1e-15);
    }

    TEST_CASE("inverse")
    {
        const Diffeo r = inverse(Diffeo::rotation(0.3));
        REQUIRE(std::holds_alternative<family::Rotation>(r.node()));
        CHECK(std::get<family::Rotation>(r.node()).alpha == -0.3);

        const Diffeo s = inverse(Diffeo::sphere_scale(0.8));
        REQUIRE(std::holds_alternative<family::SphereScale>(s.node()));
        CHECK(std::get<family::SphereScale>(s.node()).lambda == doctest::Approx(1.25));
        // Poles exchange roles: the north pole attracts under the inverse.
        Point p = sp(0.3, 0.2, 0.1);
        for (int i = 0; i < 300; ++i) {
            p = eval(s, p);
        }
        CHECK(sv(p).z() > 1.0 - 1e-9);

        Rng rng(5, 0);
        for (const auto& f : circle_catalog()) {
            const Diffeo g = inverse(f);
            for (int i = 0; i < 100; ++i) {
                const Point x = uniform_point(Manifold::circle, rng);
                CHECK(test::circle_gap(cx(eval(g, eval(f, x))), cx(x)) <= 1e-10);
                CHECK(test::circle_gap(cx(eval(f, eval(g, x))), cx(x)) <= 1e-10);
            }
        }
        for (const auto& f : sphere_catalog()) {
            const Diffeo g = inverse(f);
            for (int i = 0; i < 100; ++i) {
                const Point x = uniform_point(Manifold::sphere, rng);
                CHECK((sv(eval(g, eval(f, x))) - sv(x)).norm() <= 1e-10);
            }
        }
    }

    TEST_CASE("distance examples")
    {
        CHECK(distance(cp(0.1), cp(0.9)) == doctest::Approx(0.2));
        CHECK(distance(cp(0.37), cp(0.37)) == 0.0);
        CHECK(distance(sp(0, 0, 1), sp(0, 0, -1)) == doctest::Approx(pi));
        CHECK(distance(sp(1, 2, 3), sp(1, 2, 3)) == 0.0);
        CHECK(distance(sp(1, 0, 0), sp(0, 1, 0)) == doctest::Approx(pi / 2));
        CHECK_THROWS_AS(distance(cp(0.1), sp(1, 0, 0)), ManifoldMismatch);
    }

    TEST_CASE("isometries preserve distances")
    {
        Rng rng(6, 0);
        const Diffeo r = Diffeo::rotation(test::golden);
        const Diffeo q = Diffeo::sphere_rotation(Eigen::Vector3d(-1, 0.5, 0.2), 2.5);
        for (int i = 0; i < 1000; ++i) {
            const Point x = uniform_point(Manifold::circle, rng);
            const Point y = uniform_point(Manifold::circle, rng);
            CHECK(std::abs(distance(eval(r, x), eval(r, y)) - distance(x, y)) <= 1e-10);
            const Point u = uniform_point(Manifold::sphere, rng);
            const Point v = uniform_point(Manifold::sphere, rng);
            CHECK(std::abs(distance(eval(q, u), eval(q, v)) - distance(u, v)) <= 1e-10);
        }
    }

    TEST_CASE("circle families have positive lift derivative")
    {
        for (const auto& f : circle_catalog()) {
            CAPTURE(f.family_name());
            double worst = 1.0;
            for (int i = 0; i < 10000; ++i) {
                worst = std::min(worst, lift_derivative(f, i / 10000.0));
            }
            CHECK(worst > 0.0);
            CHECK(lift(f, 0.3 + 1.0) == doctest::Approx(lift(f, 0.3) + 1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("flat north-south map")
    {
        const double c = -0.12;
        const double r0 = 0.05;
        const double k0 = 0.01;
        const Diffeo f = Diffeo::flat_ns(c, r0, k0);
        const double inner = r0 * (1.0 - 1e-6);
        for (int i = 0; i <= 1000; ++i) {
            const double x = -inner + 2.0 * inner * i / 1000.0;
            CHECK(std::abs(lift_derivative(f, x) - k0) <= 1e-8);
        }
        for (int i = 0; i <= 1000; ++i) {
            const double x = 2.0 * r0 + (1.0 - 4.0 * r0) * i / 1000.0;
            const double ns = 1.0 + 2.0 * pi * c * std::cos(2.0 * pi * x);
            CHECK(std::abs(lift_derivative(f, x) - ns) <= 1e-12);
            CHECK(test::circle_gap(cx(eval(f, cp(x))),
                                   x + c * std::sin(2.0 * pi * x))
                  <= 1e-12);
        }
        CHECK(cx(eval(f, cp(0.0))) == 0.0);
        CHECK(test::circle_gap(cx(eval(f, cp(0.5))), 0.5) <= 1e-15);

        CHECK_THROWS_AS(Diffeo::flat_ns(c, 0.0, k0), DomainError);
        CHECK_THROWS_AS(Diffeo::flat_ns(c, 0.2, k0), DomainError);
        CHECK_THROWS_AS(Diffeo::flat_ns(c, r0, 0.0), DomainError);
        CHECK_THROWS_AS(Diffeo::flat_ns(0.1, r0, k0), DomainError);
    }

    TEST_CASE("equivariant map commutes with the half turn")
    {
        const Diffeo f = Diffeo::equivariant_ns(-0.06);
        Rng rng(7, 0);
        for (int i = 0; i < 1000; ++i) {
            const double x = rng.uniform();
            CHECK(distance(eval(f, cp(x + 0.5)), cp(cx(eval(f, cp(x))) + 0.5)) <= 1e-12);
        }
    }

    TEST_CASE("constructor ranges")
    {
        CHECK_THROWS_AS(Diffeo::north_south(0.2), DomainError);
        CHECK_THROWS_AS(Diffeo::north_south(-0.2), DomainError);
        CHECK_THROWS_AS(Diffeo::north_south(0.0), DomainError);
        CHECK_NOTHROW(Diffeo::north_south(-0.15));
        CHECK_THROWS_AS(Diffeo::equivariant_ns(-0.1), DomainError);
        CHECK_THROWS_AS(Diffeo::sphere_rotation(Eigen::Vector3d::Zero(), 1.0), DomainError);
        CHECK_THROWS_AS(Diffeo::sphere_scale(0.0), DomainError);
        CHECK_THROWS_AS(Diffeo::composition({}), DomainError);
        CHECK_THROWS_AS(Diffeo::composition({Diffeo::rotation(0.1), Diffeo::sphere_scale(0.5)}),
                        ManifoldMismatch);
        CHECK_THROWS_AS(eval(Diffeo::rotation(0.1), sp(1, 0, 0)), ManifoldMismatch);
        CHECK_THROWS_AS(eval(Diffeo::sphere_scale(0.5), cp(0.1)), ManifoldMismatch);
    }

    TEST_CASE("composition applies the first map first")
    {
        const Diffeo ns = Diffeo::north_south(-0.1);
        const Diffeo r = Diffeo::rotation(0.25);
        const Diffeo c = Diffeo::composition({ns, r});
        CHECK(cx(eval(c, cp(0.25))) == doctest::Approx(0.4));
        CHECK(cx(eval(Diffeo::translated(ns, 0.25), cp(0.25))) == doctest::Approx(0.4));
    }

    TEST_CASE("noise sampling")
    {
        const Diffeo base = Diffeo::north_south(-0.1);
        Rng rng(8, 0);
        const Diffeo same = sample_random_map(base, {Manifold::circle, NoiseDistribution::uniform, 0.0}, rng);
        CHECK(&same.node() == &base.node());

        SUBCASE("uniform parameters pass a Kolmogorov-Smirnov band")
        {
            const NoiseSpec n{Manifold::circle, NoiseDistribution::uniform, 0.1};
            const std::size_t count = 100000;
            std::vector<double> a(count);
            for (auto& v : a) {
                const Diffeo m = sample_random_map(Diffeo::rotation(0.0), n, rng);
                v = std::get<family::Translated>(m.node()).a.x();
            }
            std::sort(a.begin(), a.end());
            double d = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                const double cdf = (a[i] + 0.1) / 0.2;
                d = std::max({d, std::abs(cdf - double(i) / count),
                              std::abs(cdf - double(i + 1) / count)});
            }
            // 0.997 quantile of the Kolmogorov distribution.
            CHECK(std::sqrt(double(count)) * d <= 1.73);
            CHECK(a.front() >= -0.1);
            CHECK(a.back() <= 0.1);
        }

        SUBCASE("half-width one half spreads a point uniformly")
        {
            const NoiseSpec n{Manifold::circle, NoiseDistribution::uniform, 0.5};
            const Diffeo id = Diffeo::rotation(0.0);
            std::vector<double> hist(256, 0.0);
            const std::size_t count = 1000000;
            for (std::size_t i = 0; i < count; ++i) {
                const double y = cx(eval(sample_random_map(id, n, rng), cp(0.3)));
                hist[std::min<std::size_t>(255, std::size_t(y * 256))] += 1.0 / count;
            }
            double tv = 0.0;
            for (double h : hist) {
                tv += 0.5 * std::abs(h - 1.0 / 256);
            }
            CHECK(tv <= 0.02);
        }

        SUBCASE("densities integrate to one")
        {
            for (auto dist : {NoiseDistribution::uniform, NoiseDistribution::triangular}) {
                const NoiseSpec c{Manifold::circle, dist, 0.2};
                const NoiseSpec s{Manifold::sphere, dist, 0.7};
                double ic = 0.0;
                double is = 0.0;
                const int m = 200000;
                for (int i = 0; i < m; ++i) {
                    const double t = (i + 0.5) / m;
                    ic += noise_density(c, Eigen::Vector3d(-0.25 + 0.5 * t, 0, 0)) * 0.5 / m;
                    const double r = 0.8 * t;
                    is += noise_density(s, Eigen::Vector3d(0, r, 0)) * 4.0 * pi * r * r * 0.8 / m;
                }
                CHECK(ic == doctest::Approx(1.0).epsilon(1e-4));
                CHECK(is == doctest::Approx(1.0).epsilon(1e-4));
            }
        }

        SUBCASE("sphere parameters stay in the ball")
        {
            for (auto dist : {NoiseDistribution::uniform, NoiseDistribution::triangular}) {
                const NoiseSpec s{Manifold::sphere, dist, 0.3};
                double mean_r = 0.0;
                for (int i = 0; i < 20000; ++i) {
                    const double r = sample_noise_parameter(s, rng).norm();
                    CHECK(r <= 0.3);
                    mean_r += r / 20000;
                }
                // E|a| = 3 delta / 4 (uniform ball), delta / 3 (triangular).
                const double expect = dist == NoiseDistribution::uniform ? 0.225 : 0.1;
                CHECK(std::abs(mean_r - expect) <= 0.005);
            }
        }

        CHECK_THROWS_AS(validate({Manifold::circle, NoiseDistribution::uniform, 0.6}), DomainError);
        CHECK_THROWS_AS(validate({Manifold::sphere, NoiseDistribution::uniform, 4.0}), DomainError);
        CHECK_THROWS_AS(validate({Manifold::circle, NoiseDistribution::uniform, -0.1}), DomainError);
        CHECK_THROWS_AS(sample_random_map(base, {Manifold::sphere, NoiseDistribution::uniform, 0.1}, rng),
                        ManifoldMismatch);
    }
}
