#include "ifs_sync/driving.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ifs_sync/errors.hpp"

namespace ifs_sync {
namespace {

// Largest double below 1; keeps Baker coordinates in [0, 1).
double clamp_unit(double v)
{
    constexpr double below_one = 1.0 - 0x1.0p-53;
    return std::clamp(v, 0.0, below_one);
}

} // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> p) : p_(std::move(p))
{
    if (p_.empty()) {
        throw DomainError("probability vector is empty");
    }
    for (std::size_t i = 0; i < p_.size(); ++i) {
        if (!(p_[i] > 0.0) || !std::isfinite(p_[i])) {
            std::ostringstream msg;
            msg << "probability p[" << i << "] = " << p_[i]
                << " must be positive";
            throw DomainError(msg.str());
        }
    }
    const double sum = std::accumulate(p_.begin(), p_.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "probabilities sum to " << sum;
        throw DomainError(msg.str());
    }
    left_.resize(p_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
        left_[i] = acc;
        acc += p_[i];
    }
}

ProbabilityVector ProbabilityVector::uniform(std::size_t k)
{
    return ProbabilityVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Symbol ProbabilityVector::strip_index(double y) const
{
    // Count of boundaries l_1..l_{k-1} that are <= y.
    const auto it = std::upper_bound(left_.begin() + 1, left_.end(), y);
    return static_cast<Symbol>(it - (left_.begin() + 1));
}

void SymbolWord::validate(std::size_t k) const
{
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i] >= k) {
            std::ostringstream msg;
            msg << "symbol " << symbols[i] << " at position " << i
                << " out of range for " << k << " maps";
            throw DomainError(msg.str());
        }
    }
}

SymbolWord SymbolWord::shifted() const
{
    if (symbols.empty()) {
        return {};
    }
    return SymbolWord{{symbols.begin() + 1, symbols.end()}};
}

std::string SymbolWord::digits() const
{
    const bool wide = std::any_of(symbols.begin(), symbols.end(),
                                  [](Symbol s) { return s >= 10; });
    std::string out;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (wide && i > 0) {
            out += ',';
        }
        out += std::to_string(symbols[i]);
    }
    return out;
}

SymbolWord sample_word(const ProbabilityVector& p, std::size_t n, Rng& rng)
{
    SymbolWord w;
    w.symbols.resize(n);
    for (auto& s : w.symbols) {
        s = p.strip_index(rng.uniform());
    }
    return w;
}

BakerState baker_forward(const BakerState& s, const ProbabilityVector& p)
{
    const Symbol i = p.strip_index(s.y);
    return {clamp_unit((s.y - p.left(i)) / p[i]),
            clamp_unit(p[i] * s.z + p.left(i))};
}

BakerState baker_backward(const BakerState& s, const ProbabilityVector& p)
{
    const Symbol i = p.strip_index(s.z);
    return {clamp_unit(p[i] * s.y + p.left(i)),
            clamp_unit((s.z - p.left(i)) / p[i])};
}

Encoding encode_plus(const SymbolWord& future, const ProbabilityVector& p)
{
    future.validate(p.size());
    double y = 0.0;
    double scale = 1.0;
    for (Symbol s : future.symbols) {
        y += p.left(s) * scale;
        scale *= p[s];
    }
    return {y, scale};
}

BakerState encode_full(const SymbolWord& past, const SymbolWord& future,
                       const ProbabilityVector& p)
{
    past.validate(p.size());
    double z = 0.0;
    double scale = 1.0;
    for (Symbol s : past.symbols) {
        z += p.left(s) * scale;
        scale *= p[s];
    }
    return {encode_plus(future, p).y, z};
}

} // namespace ifs_sync
