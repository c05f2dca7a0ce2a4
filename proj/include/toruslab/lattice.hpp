#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "toruslab/errors.hpp"

namespace toruslab {

// Truncated frequency cube Z^d ∩ [-N,N]^d with the (d-k, k) coordinate split:
// the first d-k coordinates belong to the x-block, the trailing k to the
// y-block.  Points are enumerated lexicographically with the last coordinate
// fastest, matching row-major grid storage.
class FrequencyLattice {
public:
    FrequencyLattice(int d, int k, int N);

    int d() const { return d_; }
    int k() const { return k_; }
    int N() const { return N_; }
    std::size_t size() const { return nsq_.size(); }
    int side() const { return 2 * N_ + 1; }

    std::span<const std::int32_t> point(std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
    }
    std::int64_t nsq(std::size_t i) const { return nsq_[i]; }
    std::int64_t nsq_y(std::size_t i) const { return nsq_y_[i]; }
    const std::vector<std::int64_t>& nsq_all() const { return nsq_; }

    // lexicographic index of a point; throws if outside the cube
    std::size_t index_of(std::span<const int> xi) const;

    bool same_shape(const FrequencyLattice& o) const {
        return d_ == o.d_ && k_ == o.k_ && N_ == o.N_;
    }

private:
    int d_, k_, N_;
    std::vector<std::int32_t> coords_;  // size() * d, lexicographic
    std::vector<std::int64_t> nsq_;
    std::vector<std::int64_t> nsq_y_;
};

using LatticePtr = std::shared_ptr<const FrequencyLattice>;

LatticePtr build_lattice(int d, int k, int N);

// Uniform M^d sampling of the unit torus, z_m = m/M per axis, with product
// quadrature weight M^{-d}.
struct TorusGrid {
    int d = 1;
    int k = 1;
    int M = 1;

    TorusGrid() = default;
    TorusGrid(int d_, int k_, int M_);

    double cell_weight() const;
    std::size_t points() const;

    // Default dealiased grid: M = 4(2N+1) rounded up to a power of two,
    // enough margin for cubic products of band-N fields.
    static TorusGrid dealiased_for(int d, int k, int N);
    // Cheaper grid for pure norm probes: exact uniform quadrature through
    // trigonometric degree 4N per axis (covers |f|^2 and |f|^4 of band-N data).
    static TorusGrid norm_grade_for(int d, int k, int N);
};

int next_pow2_at_least(int n);

}  // namespace toruslab
