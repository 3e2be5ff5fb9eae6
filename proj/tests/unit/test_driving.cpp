#include <algorithm>
#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "ifs_sync/driving.hpp"
#include "ifs_sync/errors.hpp"

using namespace ifs_sync;

namespace {

SymbolWord word(std::initializer_list<Symbol> s) { return SymbolWord{s}; }

} // namespace

TEST_SUITE("driving")
{
    TEST_CASE("probability vectors")
    {
        const ProbabilityVector p({0.2, 0.3, 0.5});
        CHECK(p.size() == 3);
        CHECK(p.left(0) == 0.0);
        CHECK(p.left(1) == doctest::Approx(0.2));
        CHECK(p.left(2) == doctest::Approx(0.5));
        CHECK_THROWS_WITH_AS(ProbabilityVector({0.5, 0.6}), "probabilities sum to 1.1",
                             DomainError);
        CHECK_THROWS_AS(ProbabilityVector({1.0, 0.0}), DomainError);
        CHECK_THROWS_AS(ProbabilityVector({1.2, -0.2}), DomainError);
        CHECK_THROWS_AS(ProbabilityVector(std::vector<double>{}), DomainError);
        CHECK_NOTHROW(ProbabilityVector({0.5, 0.5 + 5e-13}));
        CHECK(ProbabilityVector::uniform(4)[3] == 0.25);
    }

    TEST_CASE("sample_word")
    {
        Rng rng(11, 0);
        const SymbolWord one = sample_word(ProbabilityVector({1.0}), 5, rng);
        CHECK(one.symbols == std::vector<Symbol>{0, 0, 0, 0, 0});
        CHECK(sample_word(ProbabilityVector::uniform(3), 17, rng).size() == 17);
        CHECK(sample_word(ProbabilityVector::uniform(3), 0, rng).empty());

        const std::size_t n = 100000;
        const SymbolWord w = sample_word(ProbabilityVector({0.7, 0.3}), n, rng);
        const double freq = double(std::count(w.symbols.begin(), w.symbols.end(), 0u)) / n;
        CHECK(std::abs(freq - 0.7) <= 3.0 * std::sqrt(0.21 / n));
    }

    TEST_CASE("strip_index")
    {
        const ProbabilityVector half({0.5, 0.5});
        CHECK(strip_index(0.25, half) == 0);
        CHECK(strip_index(0.75, half) == 1);
        for (int i = 0; i < 100; ++i) {
            const double y = i / 100.0;
            CHECK(strip_index(y, half) == Symbol(std::floor(2 * y)));
        }
        const ProbabilityVector p({0.2, 0.8});
        CHECK(strip_index(0.1, p) == 0);
        CHECK(strip_index(0.5, p) == 1);
        const ProbabilityVector q({0.25, 0.25, 0.5});
        CHECK(strip_index(0.25, q) == 1);
        CHECK(strip_index(0.5, q) == 2);
        CHECK(strip_index(0.0, q) == 0);
    }

    TEST_CASE("baker map examples")
    {
        const ProbabilityVector half({0.5, 0.5});
        const BakerState a = baker_forward({0.25, 0.5}, half);
        CHECK(a.y == doctest::Approx(0.5));
        CHECK(a.z == doctest::Approx(0.25));
        const ProbabilityVector p({0.2, 0.8});
        const BakerState b = baker_forward({0.5, 0.0}, p);
        CHECK(b.y == doctest::Approx(0.375));
        CHECK(b.z == doctest::Approx(0.2));
        const BakerState c = baker_backward({0.5, 0.25}, half);
        CHECK(c.y == doctest::Approx(0.25));
        CHECK(c.z == doctest::Approx(0.5));
    }

    TEST_CASE("baker round trips")
    {
        Rng rng(12, 0);
        const ProbabilityVector p({0.7, 0.3});
        for (int i = 0; i < 10000; ++i) {
            const BakerState s{rng.uniform(), rng.uniform()};
            const BakerState f = baker_forward(s, p);
            const BakerState bf = baker_backward(f, p);
            CHECK(std::abs(bf.y - s.y) <= 1e-12);
            CHECK(std::abs(bf.z - s.z) <= 1e-12);
            const BakerState fb = baker_forward(baker_backward(s, p), p);
            CHECK(std::abs(fb.y - s.y) <= 1e-12);
            CHECK(std::abs(fb.z - s.z) <= 1e-12);
            CHECK((f.y >= 0.0 && f.y < 1.0 && f.z >= 0.0 && f.z < 1.0));
        }
    }

    TEST_CASE("backward steps preserve Lebesgue measure")
    {
        Rng rng(13, 0);
        const ProbabilityVector p({0.7, 0.3});
        const std::size_t n = 100000;
        const std::size_t bins = 16;
        std::vector<double> counts(bins * bins, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            BakerState s{rng.uniform(), rng.uniform()};
            for (int k = 0; k < 10; ++k) {
                s = baker_backward(s, p);
            }
            counts[std::size_t(s.y * bins) * bins + std::size_t(s.z * bins)] += 1.0;
        }
        const double q = 1.0 / (bins * bins);
        const double sigma = std::sqrt(n * q * (1.0 - q));
        for (double c : counts) {
            CHECK(std::abs(c - n * q) <= 4.0 * sigma);
        }
    }

    TEST_CASE("encodings")
    {
        const ProbabilityVector half({0.5, 0.5});
        const ProbabilityVector p({0.2, 0.8});
        CHECK(encode_plus(word({0, 0, 0, 0, 0, 0}), p).y == 0.0);
        CHECK(encode_plus(word({1, 0, 0, 0}), half).y == 0.5);
        CHECK(encode_plus(word({1, 1, 0, 0, 0}), p).y == doctest::Approx(0.36).epsilon(1e-15));
        CHECK(encode_plus(word({1, 1, 0}), p).tail == doctest::Approx(0.8 * 0.8 * 0.2));

        CHECK(encode_full(word({0, 0, 0}), word({1}), half).z == 0.0);
        CHECK(encode_full(word({1}), word({0}), half).z == 0.5);
        CHECK_THROWS_AS(encode_plus(word({2}), half), DomainError);
    }

    TEST_CASE("itinerary consistency")
    {
        Rng rng(14, 0);
        const ProbabilityVector p({0.2, 0.5, 0.3});
        for (int i = 0; i < 2000; ++i) {
            const SymbolWord w = sample_word(p, 30, rng);
            CHECK(strip_index(encode_plus(w, p).y, p) == w[0]);
        }
    }

    TEST_CASE("cylinders are ordered intervals of the right length")
    {
        const ProbabilityVector p({0.35, 0.65});
        for (std::size_t len = 1; len <= 10; ++len) {
            double prev_end = 0.0;
            for (std::size_t code = 0; code < (std::size_t{1} << len); ++code) {
                SymbolWord w;
                for (std::size_t j = 0; j < len; ++j) {
                    w.symbols.push_back(Symbol((code >> (len - 1 - j)) & 1u));
                }
                const Encoding e = encode_plus(w, p);
                double length = 1.0;
                for (Symbol s : w.symbols) {
                    length *= p[s];
                }
                CHECK(e.y == doctest::Approx(prev_end).epsilon(1e-12));
                CHECK(e.tail == doctest::Approx(length).epsilon(1e-12));
                prev_end = e.y + e.tail;
            }
            CHECK(prev_end == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("semiconjugacy on random words")
    {
        Rng rng(15, 0);
        const ProbabilityVector p({0.7, 0.3});
        for (int i = 0; i < 1000; ++i) {
            const SymbolWord future = sample_word(p, 40, rng);
            const SymbolWord past = sample_word(p, 40, rng);
            const BakerState f = baker_forward(encode_full(past, future, p), p);

            SymbolWord next_past = future;
            next_past.symbols.resize(1);
            next_past.symbols.insert(next_past.symbols.end(), past.symbols.begin(),
                                     past.symbols.end());
            const BakerState g = encode_full(next_past, future.shifted(), p);
            CHECK(std::abs(f.y - g.y) <= 1e-9);
            CHECK(std::abs(f.z - g.z) <= 1e-9);
            CHECK(encode_plus(future, p).tail <= std::pow(0.7, 40));
        }
    }

    TEST_CASE("words")
    {
        const SymbolWord w = word({1, 0, 2});
        CHECK(w.shifted().symbols == std::vector<Symbol>{0, 2});
        CHECK(w.digits() == "102");
        CHECK_THROWS_AS(w.validate(2), DomainError);
        CHECK_NOTHROW(w.validate(3));
    }
}
