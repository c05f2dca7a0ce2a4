#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace toruslab {

// Stateless seed mixer.  Deriving per-task seeds as mix(seed, task_index)
// keeps parallel sweeps reproducible independent of worker count.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t salt = 0) {
    return std::mt19937_64(mix_seed(seed, salt));
}

// iid complex standard Gaussians.
inline std::vector<std::complex<double>> gaussian_coeffs(std::size_t n, std::mt19937_64& eng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::complex<double>> out(n);
    for (auto& c : out) {
        double re = g(eng);
        double im = g(eng);
        c = {re, im};
    }
    return out;
}

}  // namespace toruslab
