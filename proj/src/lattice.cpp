#include "toruslab/lattice.hpp"

#include <cmath>
#include <string>

namespace toruslab {

FrequencyLattice::FrequencyLattice(int d, int k, int N) : d_(d), k_(k), N_(N) {
    if (d < 1) throw ParamError("lattice dimension must be >= 1, got " + std::to_string(d));
    if (k < 1 || k > d)
        throw ParamError("split index k must satisfy 1 <= k <= d, got k=" + std::to_string(k));
    if (N < 1) throw ParamError("truncation radius must be >= 1, got " + std::to_string(N));

    const int side = 2 * N + 1;
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(side);

    coords_.resize(count * static_cast<std::size_t>(d));
    nsq_.resize(count);
    nsq_y_.resize(count);

    std::vector<int> xi(d, -N);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::int64_t s = 0, sy = 0;
        for (int i = 0; i < d; ++i) {
            coords_[idx * d + i] = static_cast<std::int32_t>(xi[i]);
            s += static_cast<std::int64_t>(xi[i]) * xi[i];
            if (i >= d - k) sy += static_cast<std::int64_t>(xi[i]) * xi[i];
        }
        nsq_[idx] = s;
        nsq_y_[idx] = sy;
        // increment odometer, last coordinate fastest
        for (int i = d - 1; i >= 0; --i) {
            if (++xi[i] <= N) break;
            xi[i] = -N;
        }
    }
}

std::size_t FrequencyLattice::index_of(std::span<const int> xi) const {
    if (static_cast<int>(xi.size()) != d_) throw ParamError("point dimension mismatch");
    std::size_t idx = 0;
    for (int i = 0; i < d_; ++i) {
        if (xi[i] < -N_ || xi[i] > N_)
            throw ParamError("frequency outside the truncation cube");
        idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(xi[i] + N_);
    }
    return idx;
}

LatticePtr build_lattice(int d, int k, int N) {
    return std::make_shared<const FrequencyLattice>(d, k, N);
}

TorusGrid::TorusGrid(int d_, int k_, int M_) : d(d_), k(k_), M(M_) {
    if (d < 1 || k < 1 || k > d) throw ParamError("invalid grid split");
    if (M < 2) throw ParamError("grid must have at least 2 samples per axis");
}

double TorusGrid::cell_weight() const { return std::pow(static_cast<double>(M), -d); }

std::size_t TorusGrid::points() const {
    std::size_t n = 1;
    for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(M);
    return n;
}

int next_pow2_at_least(int n) {
    int m = 1;
    while (m < n) m *= 2;
    return m;
}

TorusGrid TorusGrid::dealiased_for(int d, int k, int N) {
    return TorusGrid(d, k, next_pow2_at_least(4 * (2 * N + 1)));
}

TorusGrid TorusGrid::norm_grade_for(int d, int k, int N) {
    return TorusGrid(d, k, next_pow2_at_least(4 * N + 2));
}

}  // namespace toruslab
