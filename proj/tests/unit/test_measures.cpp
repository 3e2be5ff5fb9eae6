#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "ifs_sync/errors.hpp"
#include "ifs_sync/measures.hpp"
#include "ifs_sync/parallel.hpp"

using namespace ifs_sync;
using test::cp;
using test::cx;

namespace {

FiniteIfs two_rotations()
{
    return {{Diffeo::rotation(0.6180339887), Diffeo::rotation(0.4142135624)},
            ProbabilityVector({0.5, 0.5})};
}

EmpiricalMeasure points(std::initializer_list<double> xs)
{
    EmpiricalMeasure m;
    for (double x : xs) {
        m.points.push_back(cp(x));
    }
    return m;
}

//! W1 on the circle by brute force over the additive constant of the CDF
//! difference, sampled on a fine grid.
double w1_oracle(const EmpiricalMeasure& a, const EmpiricalMeasure& b)
{
    const int grid = 20000;
    std::vector<double> diff(grid, 0.0);
    auto add = [&](const EmpiricalMeasure& m, double sign) {
        for (const auto& p : m.points) {
            const int start = int(std::ceil(cx(p) * grid));
            for (int g = start; g < grid; ++g) {
                diff[g] += sign / m.points.size();
            }
        }
    };
    add(a, 1.0);
    add(b, -1.0);
    double best = 1e300;
    for (int t = -2000; t <= 2000; ++t) {
        const double shift = t / 2000.0;
        double s = 0.0;
        for (double d : diff) {
            s += std::abs(d - shift) / grid;
        }
        best = std::min(best, s);
    }
    return best;
}

} // namespace

TEST_SUITE("measures")
{
    TEST_CASE("partitions")
    {
        const PartitionSpec c = make_partition(Manifold::circle, 4);
        CHECK(c.size() == 4);
        CHECK(c.cell_of(cp(0.3)) == 1);
        CHECK(c.cell_of(cp(0.0)) == 0);
        CHECK(c.cell_of(cp(0.9999999999)) == 3);

        const PartitionSpec s = PartitionSpec::sphere(4, 8);
        CHECK(s.size() == 32);
        double total = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s.cell_volume(i) == doctest::Approx(1.0 / 32).epsilon(1e-12));
            total += s.cell_volume(i);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(make_partition(Manifold::sphere, 4).size() == 32);

        Rng rng(31, 0);
        std::vector<std::size_t> counts(s.size(), 0);
        const std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t cell = s.cell_of(uniform_point(Manifold::sphere, rng));
            REQUIRE(cell < s.size());
            ++counts[cell];
        }
        CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == n);
        const double q = 1.0 / 32;
        for (auto k : counts) {
            CHECK(std::abs(double(k) - n * q) <= 4.0 * std::sqrt(n * q * (1 - q)));
        }
        for (std::size_t cell = 0; cell < s.size(); ++cell) {
            for (int i = 0; i < 20; ++i) {
                CHECK(s.cell_of(s.sample_in_cell(cell, rng)) == cell);
                CHECK(c.cell_of(c.sample_in_cell(cell % 4, rng)) == cell % 4);
            }
        }
        CHECK_THROWS_AS(make_partition(Manifold::circle, 1), DomainError);
        CHECK_THROWS_AS(PartitionSpec::sphere(1, 4), DomainError);
    }

    TEST_CASE("ulam matrix")
    {
        Rng rng(32, 0);
        SUBCASE("identity")
        {
            const FiniteIfs id{{Diffeo::rotation(0.0)}, ProbabilityVector({1.0})};
            const UlamMatrix u = ulam_matrix(id, make_partition(Manifold::circle, 32), 50, rng);
            CHECK(u.matrix == Eigen::MatrixXd::Identity(32, 32));
        }
        SUBCASE("rotation by one cell")
        {
            const std::size_t n = 64;
            const FiniteIfs rot{{Diffeo::rotation(1.0 / n)}, ProbabilityVector({1.0})};
            const UlamMatrix u = ulam_matrix(rot, make_partition(Manifold::circle, n), 100, rng);
            Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                perm(i, (i + 1) % n) = 1.0;
            }
            CHECK(u.matrix == perm);
        }
        SUBCASE("rows are stochastic")
        {
            const FiniteIfs sys{{Diffeo::flat_ns(-0.12, 0.05, 0.01),
                                 Diffeo::rotation(test::golden),
                                 Diffeo::equivariant_ns(-0.05)},
                                ProbabilityVector({0.3, 0.3, 0.4})};
            const UlamMatrix u = ulam_matrix(sys, make_partition(Manifold::circle, 100), 37, rng);
            for (Eigen::Index r = 0; r < u.matrix.rows(); ++r) {
                CHECK(std::abs(u.matrix.row(r).sum() - 1.0) <= 1e-12);
                CHECK(u.matrix.row(r).minCoeff() >= 0.0);
            }
            const FiniteIfs sph{{Diffeo::sphere_scale(0.8),
                                 Diffeo::sphere_rotation(Eigen::Vector3d(1, 1, 0), 0.4)},
                                ProbabilityVector({0.5, 0.5})};
            const UlamMatrix v = ulam_matrix(sph, make_partition(Manifold::sphere, 6), 23, rng);
            for (Eigen::Index r = 0; r < v.matrix.rows(); ++r) {
                CHECK(std::abs(v.matrix.row(r).sum() - 1.0) <= 1e-12);
            }
        }
        SUBCASE("worker count does not change the matrix")
        {
            const FiniteIfs sys{{Diffeo::north_south(-0.1), Diffeo::rotation(0.3)},
                                ProbabilityVector({0.5, 0.5})};
            const auto part = make_partition(Manifold::circle, 50);
            const std::size_t saved = worker_count();
            set_worker_count(1);
            Rng a(99, 1);
            const UlamMatrix one = ulam_matrix(sys, part, 40, a);
            set_worker_count(4);
            Rng b(99, 1);
            const UlamMatrix four = ulam_matrix(sys, part, 40, b);
            set_worker_count(saved);
            CHECK(one.matrix == four.matrix);
        }
    }

    TEST_CASE("stationary_power")
    {
        const auto part8 = make_partition(Manifold::circle, 8);
        const UlamMatrix id{part8, Eigen::MatrixXd::Identity(8, 8)};
        const StationaryVector a = stationary_power(id, 1e-12, 10);
        for (double m : a.histogram.mass) {
            CHECK(m == doctest::Approx(0.125));
        }
        // Cesaro limit of a point mass pushed around a cycle.
        Eigen::MatrixXd cyc = Eigen::MatrixXd::Zero(8, 8);
        for (int i = 0; i < 8; ++i) {
            cyc(i, (i + 1) % 8) = 1.0;
        }
        const StationaryVector b = stationary_power({part8, cyc}, 1e-10, 1000);
        for (double m : b.histogram.mass) {
            CHECK(std::abs(m - 0.125) <= 1e-10);
        }

        // Two-state chain with stationary law (2/3, 1/3).
        const auto part2 = make_partition(Manifold::circle, 2);
        Eigen::MatrixXd two(2, 2);
        two << 0.9, 0.1, 0.2, 0.8;
        const StationaryVector c = stationary_power({part2, two}, 1e-12, 100000);
        CHECK(c.histogram.mass[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
        Eigen::RowVectorXd v(2);
        v << c.histogram.mass[0], c.histogram.mass[1];
        CHECK((v * two - v).lpNorm<1>() <= 10 * 1e-12);

        Eigen::MatrixXd skew(2, 2);
        skew << 0.5, 0.5, 0.0, 1.0;
        CHECK_THROWS_AS(stationary_power({part2, skew}, 1e-300, 5), ComputationError);
    }

    TEST_CASE("stationary_power residual bound on a sampled matrix")
    {
        Rng rng(33, 0);
        const FiniteIfs sys{{Diffeo::flat_ns(-0.12, 0.05, 0.01), Diffeo::rotation(test::golden)},
                            ProbabilityVector({0.5, 0.5})};
        const UlamMatrix u = ulam_matrix(sys, make_partition(Manifold::circle, 128), 50, rng);
        const double tol = 1e-9;
        const StationaryVector sv = stationary_power(u, tol, 1000000);
        Eigen::RowVectorXd v = Eigen::Map<const Eigen::RowVectorXd>(
            sv.histogram.mass.data(), Eigen::Index(sv.histogram.mass.size()));
        CHECK((v * u.matrix - v).lpNorm<1>() <= 10 * tol);
        CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v.minCoeff() >= 0.0);
    }

    TEST_CASE("transfer_push")
    {
        Rng rng(34, 0);
        EmpiricalMeasure m;
        for (int i = 0; i < 1000; ++i) {
            m.points.push_back(uniform_point(Manifold::circle, rng));
        }
        const FiniteIfs id{{Diffeo::rotation(0.0)}, ProbabilityVector({1.0})};
        const EmpiricalMeasure same = transfer_push(id, m, rng);
        REQUIRE(same.points.size() == m.points.size());
        for (std::size_t i = 0; i < m.points.size(); ++i) {
            CHECK(cx(same.points[i]) == cx(m.points[i]));
        }

        const FiniteIfs ns{{Diffeo::north_south(-0.12)}, ProbabilityVector({1.0})};
        EmpiricalMeasure away;
        for (int i = 0; i < 200; ++i) {
            away.points.push_back(cp(0.45 * (2.0 * (i + 0.5) / 200 - 1.0)));
        }
        for (int k = 0; k < 500; ++k) {
            away = transfer_push(ns, away, rng);
        }
        for (const auto& p : away.points) {
            CHECK(distance(p, cp(0.0)) <= 1e-8);
        }

        EmpiricalMeasure cloud;
        const std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            cloud.points.push_back(uniform_point(Manifold::circle, rng));
        }
        const FiniteIfs rot = two_rotations();
        for (int k = 0; k < 5; ++k) {
            cloud = transfer_push(rot, cloud, rng);
        }
        CHECK(cloud.points.size() == n);
        const UlamHistogram h = histogram(cloud, make_partition(Manifold::circle, 32));
        const double q = 1.0 / 32;
        for (double mass : h.mass) {
            CHECK(std::abs(mass * n - n * q) <= 4.0 * std::sqrt(n * q * (1 - q)));
        }
    }

    TEST_CASE("stationary_mc")
    {
        Rng rng(35, 0);
        const System one(FiniteIfs{{Diffeo::rotation(test::golden)}, ProbabilityVector({1.0})});
        CHECK(stationary_mc(one, 10, 1, rng).points.size() == 1);

        const auto part = make_partition(Manifold::circle, 256);
        const EmpiricalMeasure a = stationary_mc(one, 1000, 1000000, rng);
        CHECK(a.points.size() == 1000000);
        CHECK(tv_distance(histogram(a, part), uniform_histogram(part)) <= 0.02);

        const System two(two_rotations());
        const EmpiricalMeasure b = stationary_mc(two, 1000, 1000000, rng);
        CHECK(tv_distance(histogram(b, part), uniform_histogram(part)) <= 0.02);

        InitialDistribution at;
        at.kind = InitialDistribution::Kind::delta;
        at.point = cp(0.3);
        const EmpiricalMeasure c = stationary_mc(one, 0, 3, rng, at);
        CHECK(cx(c.points[0]) == 0.3);
        CHECK(test::circle_gap(cx(c.points[2]), 0.3 + 2 * test::golden) <= 1e-14);
        CHECK_THROWS_AS(stationary_mc(one, 0, 0, rng), DomainError);
    }

    TEST_CASE("monte carlo and ulam agree for two rotations")
    {
        Rng rng(36, 0);
        const FiniteIfs rot = two_rotations();
        const auto part = make_partition(Manifold::circle, 256);
        const UlamMatrix u = ulam_matrix(rot, part, 400, rng);
        const StationaryVector sv = stationary_power(u, 1e-10, 1000000);
        const EmpiricalMeasure mc = stationary_mc(System(rot), 1000, 1000000, rng);
        CHECK(tv_distance(sv.histogram, histogram(mc, part)) <= 0.05);
    }

    TEST_CASE("distances")
    {
        const EmpiricalMeasure a = points({0.1, 0.4, 0.7});
        CHECK(wasserstein1_circle(a, a) == 0.0);
        CHECK(wasserstein1_circle(points({0.0}), points({0.5})) == doctest::Approx(0.5));
        CHECK(wasserstein1_circle(points({0.1}), points({0.9})) == doctest::Approx(0.2));
        CHECK(wasserstein1_circle(points({0.2, 0.6}), points({0.3, 0.7}))
              == doctest::Approx(0.1));

        Rng rng(37, 0);
        for (int trial = 0; trial < 5; ++trial) {
            EmpiricalMeasure x;
            EmpiricalMeasure y;
            for (int i = 0; i < 7; ++i) {
                x.points.push_back(uniform_point(Manifold::circle, rng));
            }
            for (int i = 0; i < 5; ++i) {
                y.points.push_back(uniform_point(Manifold::circle, rng));
            }
            CHECK(wasserstein1_circle(x, y) == doctest::Approx(w1_oracle(x, y)).epsilon(2e-3));
            CHECK(measure_distance(x, y, DistanceKind::wasserstein1_circle)
                  == wasserstein1_circle(x, y));
        }

        const auto p4 = make_partition(Manifold::circle, 4);
        const UlamHistogram u = uniform_histogram(p4);
        UlamHistogram d{p4, {1.0, 0.0, 0.0, 0.0}};
        CHECK(tv_distance(u, u) == 0.0);
        CHECK(tv_distance(u, d) == doctest::Approx(0.75));
        CHECK(measure_distance(points({0.1}), points({0.6}), DistanceKind::tv_histogram, p4)
              == doctest::Approx(1.0));
        CHECK_THROWS_AS(tv_distance(u, uniform_histogram(make_partition(Manifold::circle, 8))),
                        DomainError);
        CHECK_THROWS_AS(measure_distance(a, a, DistanceKind::tv_histogram), DomainError);
    }

    TEST_CASE("support coverage")
    {
        const auto part = make_partition(Manifold::circle, 256);
        CHECK(support_coverage(uniform_histogram(part), 0.5) == 1.0);
        UlamHistogram d{part, std::vector<double>(256, 0.0)};
        d.mass[17] = 1.0;
        CHECK(support_coverage(d, 0.5) == doctest::Approx(1.0 / 256));
    }
}
