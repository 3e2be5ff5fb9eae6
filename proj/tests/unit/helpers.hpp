#pragma once

#include <doctest.h>

#include <cmath>

#include "ifs_sync/geometry.hpp"

namespace test {

inline ifs_sync::Point cp(double x) { return ifs_sync::circle_point(x); }

inline double cx(const ifs_sync::Point& p)
{
    return std::get<ifs_sync::CirclePoint>(p).x;
}

inline ifs_sync::Point sp(double x, double y, double z)
{
    return ifs_sync::sphere_point(Eigen::Vector3d(x, y, z));
}

inline const Eigen::Vector3d& sv(const ifs_sync::Point& p)
{
    return std::get<ifs_sync::SpherePoint>(p).v;
}

//! Distance on R/Z, independent of the library implementation.
inline double circle_gap(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 1.0);
    return std::min(d, 1.0 - d);
}

constexpr double golden = 0.6180339887498949;

} // namespace test
