#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ifs_sync/rng.hpp"

namespace ifs_sync {

using Symbol = std::uint32_t;

/*!
 * Probabilities p_0..p_{k-1} with their strip data l_i = sum_{j<i} p_j.
 *
 * Every p_i is positive and the sum is 1 within 1e-12.
 */
class ProbabilityVector
{
  public:
    explicit ProbabilityVector(std::vector<double> p);

    static ProbabilityVector uniform(std::size_t k);

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    //! Left end l_i of strip I_i = [l_i, l_i + p_i).
    double left(std::size_t i) const { return left_[i]; }
    std::span<const double> values() const { return p_; }

    //! The i with y in [l_i, l_i + p_i); left closed, clamped to k-1.
    Symbol strip_index(double y) const;

  private:
    std::vector<double> p_;
    std::vector<double> left_;
};

//! Finite word over {0, ..., k-1}.
struct SymbolWord
{
    std::vector<Symbol> symbols;

    std::size_t size() const { return symbols.size(); }
    bool empty() const { return symbols.empty(); }
    Symbol operator[](std::size_t i) const { return symbols[i]; }

    //! Throws DomainError when a symbol is >= k.
    void validate(std::size_t k) const;
    //! Drop the first symbol.
    SymbolWord shifted() const;
    //! Digit string, e.g. "0110" (symbols >= 10 are comma separated).
    std::string digits() const;
};

struct BakerState
{
    double y = 0.0;
    double z = 0.0;
};

SymbolWord sample_word(const ProbabilityVector& p, std::size_t n, Rng& rng);

inline Symbol strip_index(double y, const ProbabilityVector& p)
{
    return p.strip_index(y);
}

//! Expands the strip of y by 1/p_i, contracts z by p_i into I_i.
BakerState baker_forward(const BakerState& s, const ProbabilityVector& p);
//! Inverse branch selected by the strip of z.
BakerState baker_backward(const BakerState& s, const ProbabilityVector& p);

struct Encoding
{
    double y;
    //! Product of the word's probabilities: bound on the truncated tail.
    double tail;
};

//! Itinerary of a future word (w(0) first) to a point of [0, 1).
Encoding encode_plus(const SymbolWord& future, const ProbabilityVector& p);

//! Past stored most recent first: past[0] = omega(-1).
BakerState encode_full(const SymbolWord& past, const SymbolWord& future,
                       const ProbabilityVector& p);

} // namespace ifs_sync
