#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace mtrack {

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a; stable across platforms, used to turn labels into seed material.
std::uint64_t hash_label(std::string_view label);

inline std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t part) {
    return splitmix64(seed ^ splitmix64(part + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t combine_seed(std::uint64_t seed, std::string_view part) {
    return combine_seed(seed, hash_label(part));
}

// Derive an independent stream seed from a root seed and a path of entity keys,
// e.g. derive_seed(root, "respondent", 17, "question", 3).
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t root, Parts&&... parts) {
    std::uint64_t s = splitmix64(root);
    ((s = combine_seed(s, std::forward<Parts>(parts))), ...);
    return s;
}

// mt19937_64 with hand-rolled distributions so sequences are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                     // [0, 1)
    double uniform(double lo, double hi); // [lo, hi)
    std::size_t below(std::size_t n);     // [0, n), unbiased
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double lognormal(double log_mean, double log_sd) ;
    int poisson(double lambda);
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mtrack
