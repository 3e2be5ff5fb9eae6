#include "ifs_sync/cocycle.hpp"

#include <cmath>
#include <sstream>

#include "ifs_sync/errors.hpp"

namespace ifs_sync {

std::size_t drive_length(const Drive& w)
{
    return std::visit(
        [](const auto& d) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>,
                                         SymbolWord>) {
                return d.size();
            } else {
                return d.params.size();
            }
        },
        w);
}

System::System(FiniteIfs ifs) : spec_(std::move(ifs))
{
    const auto& f = std::get<FiniteIfs>(spec_);
    if (f.maps.empty()) {
        throw DomainError("system: needs at least one map");
    }
    if (f.maps.size() != f.probs.size()) {
        std::ostringstream msg;
        msg << "system: " << f.maps.size() << " maps but " << f.probs.size()
            << " probabilities";
        throw DomainError(msg.str());
    }
    manifold_ = f.maps.front().manifold();
    for (const auto& m : f.maps) {
        if (m.manifold() != manifold_) {
            throw ManifoldMismatch("system: maps act on different manifolds");
        }
    }
}

System::System(RandomFamily family) : spec_(std::move(family))
{
    const auto& r = std::get<RandomFamily>(spec_);
    manifold_ = r.base.manifold();
    if (r.noise.manifold != manifold_) {
        throw ManifoldMismatch("system: noise and base map manifolds differ");
    }
    validate(r.noise);
}

const FiniteIfs& System::finite() const
{
    if (const auto* f = std::get_if<FiniteIfs>(&spec_)) {
        return *f;
    }
    throw DomainError("operation needs a finite iterated function system");
}

Drive System::sample_drive(std::size_t n, Rng& rng) const
{
    if (const auto* f = std::get_if<FiniteIfs>(&spec_)) {
        return sample_word(f->probs, n, rng);
    }
    const auto& r = std::get<RandomFamily>(spec_);
    ParameterWord w;
    w.params.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        w.params.push_back(sample_noise_parameter(r.noise, rng));
    }
    return w;
}

void System::check(const Drive& w) const
{
    if (const auto* f = std::get_if<FiniteIfs>(&spec_)) {
        const auto* word = std::get_if<SymbolWord>(&w);
        if (word == nullptr) {
            throw DomainError("finite system driven by a parameter word");
        }
        word->validate(f->maps.size());
    } else if (!std::holds_alternative<ParameterWord>(w)) {
        throw DomainError("random family driven by a symbol word");
    }
}

Point System::step(const Drive& w, std::size_t j, const Point& x) const
{
    if (const auto* f = std::get_if<FiniteIfs>(&spec_)) {
        return eval(f->maps[std::get<SymbolWord>(w)[j]], x);
    }
    const auto& r = std::get<RandomFamily>(spec_);
    return apply_noise(eval(r.base, x), std::get<ParameterWord>(w).params[j]);
}

Diffeo System::map_at(const Drive& w, std::size_t j) const
{
    if (const auto* f = std::get_if<FiniteIfs>(&spec_)) {
        return f->maps[std::get<SymbolWord>(w)[j]];
    }
    const auto& r = std::get<RandomFamily>(spec_);
    return Diffeo::translated(r.base, std::get<ParameterWord>(w).params[j]);
}

std::pair<TangentFrame, TangentMatrix>
System::step_tangent(const Drive& w, std::size_t j, const TangentFrame& f) const
{
    if (const auto* ifs = std::get_if<FiniteIfs>(&spec_)) {
        return tangent(ifs->maps[std::get<SymbolWord>(w)[j]], f);
    }
    // Rotation post-composition: transport the frame rigidly.
    const auto& r = std::get<RandomFamily>(spec_);
    const Eigen::Vector3d& a = std::get<ParameterWord>(w).params[j];
    auto [frame, m] = tangent(r.base, f);
    if (manifold_ == Manifold::circle) {
        frame.base = apply_noise(frame.base, a);
        return {std::move(frame), m};
    }
    const Eigen::Matrix3d rot = axis_angle_matrix(a);
    const Point image = apply_noise(frame.base, a);
    TangentFrame out = canonical_frame(image);
    const TangentMatrix change
        = out.basis.transpose() * rot * frame.basis;
    return {std::move(out), change * m};
}

Point iterate_word(const System& sys, const Drive& w, const Point& x)
{
    sys.check(w);
    Point p = x;
    const std::size_t n = drive_length(w);
    for (std::size_t j = 0; j < n; ++j) {
        p = sys.step(w, j, p);
    }
    return p;
}

std::vector<Point> trajectory(const System& sys, const Drive& w,
                              const Point& x)
{
    sys.check(w);
    const std::size_t n = drive_length(w);
    std::vector<Point> out;
    out.reserve(n + 1);
    out.push_back(x);
    for (std::size_t j = 0; j < n; ++j) {
        out.push_back(sys.step(w, j, out.back()));
    }
    return out;
}

std::vector<Point> pullback_compose(const System& sys, const Drive& w,
                                    std::vector<Point> ensemble)
{
    sys.check(w);
    const std::size_t n = drive_length(w);
    for (auto& p : ensemble) {
        for (std::size_t j = 0; j < n; ++j) {
            p = sys.step(w, j, p);
        }
    }
    return ensemble;
}

PositiveQR qr_positive(const TangentMatrix& m)
{
    constexpr double tiny = 1e-300;
    PositiveQR out;
    if (m.rows() == 1) {
        out.q = TangentMatrix::Constant(1, 1, m(0, 0) < 0.0 ? -1.0 : 1.0);
        out.r = TangentMatrix::Constant(1, 1, std::abs(m(0, 0)));
    } else {
        // 2x2: q0 from the first column, q1 its perpendicular, r22 = det/r11.
        const double r11 = std::hypot(m(0, 0), m(1, 0));
        if (!(r11 >= tiny)) {
            throw ComputationError("cocycle: singular derivative matrix");
        }
        const double q00 = m(0, 0) / r11;
        const double q10 = m(1, 0) / r11;
        double q01 = -q10;
        double q11 = q00;
        const double r12 = q00 * m(0, 1) + q10 * m(1, 1);
        double r22 = q01 * m(0, 1) + q11 * m(1, 1);
        if (r22 < 0.0) {
            q01 = -q01;
            q11 = -q11;
            r22 = -r22;
        }
        out.q.resize(2, 2);
        out.q << q00, q01, q10, q11;
        out.r.resize(2, 2);
        out.r << r11, r12, 0.0, r22;
    }
    for (Eigen::Index i = 0; i < out.r.rows(); ++i) {
        if (!(out.r(i, i) >= tiny)) {
            throw ComputationError("cocycle: singular derivative matrix");
        }
    }
    return out;
}

CocycleAccumulator start_cocycle(const Point& x, const TangentFrame& frame)
{
    if (manifold_of(frame.base) != manifold_of(x)) {
        throw ManifoldMismatch("cocycle: frame and point on different manifolds");
    }
    CocycleAccumulator acc{x, frame, {}, 0};
    acc.log_sums.assign(static_cast<std::size_t>(frame.dim()), 0.0);
    return acc;
}

void advance_cocycle(CocycleAccumulator& acc, const System& sys,
                     const Drive& w)
{
    sys.check(w);
    const std::size_t n = drive_length(w);
    const int d = acc.frame.dim();
    for (std::size_t j = 0; j < n; ++j) {
        auto [image_frame, m] = sys.step_tangent(w, j, acc.frame);
        const PositiveQR qr = qr_positive(m);
        for (int i = 0; i < d; ++i) {
            acc.log_sums[static_cast<std::size_t>(i)] += std::log(qr.r(i, i));
        }
        if (d == 1) {
            image_frame.basis(0, 0) *= qr.q(0, 0);
        } else {
            image_frame.basis = (image_frame.basis * qr.q).eval();
        }
        acc.point = image_frame.base;
        acc.frame = std::move(image_frame);
        ++acc.steps;
    }
}

CocycleAccumulator qr_cocycle(const System& sys, const Drive& w,
                              const Point& x, const TangentFrame& frame)
{
    CocycleAccumulator acc = start_cocycle(x, frame);
    advance_cocycle(acc, sys, w);
    return acc;
}

} // namespace ifs_sync
