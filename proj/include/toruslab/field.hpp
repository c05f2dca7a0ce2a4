#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "toruslab/fft.hpp"
#include "toruslab/lattice.hpp"

namespace toruslab {

using cd = std::complex<double>;

// e^{2 pi i x} with the argument reduced to [-1/2, 1/2] first.  Keeps unit
// multipliers exact for integer x and avoids accuracy loss for large phases.
inline cd phase_unit(double x) {
    double r = x - std::nearbyint(x);
    return {std::cos(2.0 * M_PI * r), std::sin(2.0 * M_PI * r)};
}

// One lattice point as seen by a multiplier callback.
struct LatticeSite {
    std::span<const std::int32_t> xi;
    std::int64_t nsq;    // |xi|^2
    std::int64_t nsq_y;  // |xi_2|^2 over the trailing k coordinates
};

using Multiplier = std::function<cd(const LatticeSite&)>;

// Band-limited function on T^{d-k} x T^k held as Fourier coefficients over a
// FrequencyLattice.  Values are immutable; operations return new fields.
// Grid samples are synthesized on demand and memoized per grid size.
class SpectralField {
public:
    SpectralField(LatticePtr lattice, std::vector<cd> coeffs);

    static SpectralField zero(LatticePtr lattice);
    // coefficient delta at frequency xi (a plane wave in space)
    static SpectralField plane_wave(LatticePtr lattice, std::span<const int> xi, cd amplitude = 1.0);

    const FrequencyLattice& lattice() const { return *lat_; }
    const LatticePtr& lattice_ptr() const { return lat_; }
    const std::vector<cd>& coeffs() const { return coeffs_; }

    double l2_norm() const;  // sqrt(sum |a|^2), Parseval-exact

    // Samples on the grid (row-major M^d).  Cached per M.
    std::shared_ptr<const std::vector<cd>> samples(const TorusGrid& grid) const;

    SpectralField(const SpectralField& o) : lat_(o.lat_), coeffs_(o.coeffs_) {}
    SpectralField& operator=(const SpectralField& o);
    SpectralField(SpectralField&&) noexcept = default;
    SpectralField& operator=(SpectralField&&) noexcept = default;

private:
    LatticePtr lat_;
    std::vector<cd> coeffs_;
    mutable std::mutex cache_mutex_;
    mutable int cache_M_ = 0;
    mutable std::shared_ptr<const std::vector<cd>> cache_;
};

// samples(z_m) = sum_xi a(xi) e^{2 pi i <z_m, xi>}; requires M >= 2N+1
std::vector<cd> synthesize(const FrequencyLattice& lat, std::span<const cd> coeffs,
                           const TorusGrid& grid);
// same, into a caller-owned buffer (resized to M^d)
void synthesize_into(const FrequencyLattice& lat, std::span<const cd> coeffs,
                     const TorusGrid& grid, std::vector<cd>& buf);
// Exact inverse of synthesize on the truncated band (M >= 2N+1 enforced).
std::vector<cd> analyze(const FrequencyLattice& lat, std::span<const cd> samples,
                        const TorusGrid& grid);
SpectralField analyze_field(LatticePtr lat, std::span<const cd> samples, const TorusGrid& grid);

// Free flow: coefficient xi picks up the phase e^{2 pi i t |xi|^2}.
SpectralField free_propagate(const SpectralField& f, double t);

SpectralField apply_multiplier(const SpectralField& f, const Multiplier& m);

// <grad>^s: (1 + |xi|^2)^{s/2}
Multiplier bessel_multiplier(double s);
// <grad_y>^s: (1 + |xi_2|^2)^{s/2}
Multiplier bessel_y_multiplier(double s);
// |grad|^s: |xi|^s, with value 0 at xi = 0 for s != 0 (projects out the mean)
Multiplier riesz_multiplier(double s);

// Flat binary record {magic, d, k, N, M, coeffs interleaved re/im in
// lexicographic xi order}; layout documented in the README.
void save_field(const SpectralField& f, int M, const std::string& path);
std::pair<SpectralField, int> load_field(const std::string& path);

// Random band-limited field with iid complex Gaussian coefficients.
SpectralField random_field(LatticePtr lattice, std::uint64_t seed, std::uint64_t salt = 0);

}  // namespace toruslab
