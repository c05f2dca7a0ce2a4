#include "toruslab/littlewood_paley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toruslab/errors.hpp"
#include "toruslab/norms.hpp"

namespace toruslab {

namespace {

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

double radius(std::span<const std::int32_t> xi) {
    double s = 0.0;
    for (auto c : xi) s += static_cast<double>(c) * c;
    return std::sqrt(s);
}

}  // namespace

double CutoffProfile::bump(double rho) {
    if (rho <= 1.0) return 1.0;
    if (rho >= 2.0) return 0.0;
    auto h = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    const double a = h(2.0 - rho);
    const double b = h(rho - 1.0);
    return a / (a + b);
}

double CutoffProfile::low_pass(std::span<const std::int32_t> xi, int N) const {
    if (N < 1) return 0.0;
    if (kind == Kind::sharp) {
        for (auto c : xi)
            if (c > N || c < -N) return 0.0;
        return 1.0;
    }
    return bump(radius(xi) / N);
}

double CutoffProfile::shell(std::span<const std::int32_t> xi, int N) const {
    if (N == 1) return low_pass(xi, 1);
    return low_pass(xi, N) - low_pass(xi, N / 2);
}

int covering_level(const CutoffProfile& profile, int band, int d) {
    double reach = profile.kind == CutoffProfile::Kind::sharp
                       ? static_cast<double>(band)
                       : std::sqrt(static_cast<double>(d)) * band;
    int L = 1;
    while (L < reach) L *= 2;
    return L;
}

ProjectorBank::ProjectorBank(LatticePtr lattice, CutoffProfile profile)
    : lat_(std::move(lattice)), profile_(profile) {
    const int top = covering_level(profile_, lat_->N(), lat_->d());
    for (int N = 1; N <= top; N *= 2) levels_.push_back(N);
    shells_.resize(levels_.size());
    for (std::size_t l = 0; l < levels_.size(); ++l) {
        shells_[l].resize(lat_->size());
        for (std::size_t i = 0; i < lat_->size(); ++i)
            shells_[l][i] = profile_.shell(lat_->point(i), levels_[l]);
    }
}

SpectralField project_leq(const SpectralField& f, int N, const CutoffProfile& profile) {
    if (N < 1) throw ParamError("projection level must be >= 1");
    const auto& lat = f.lattice();
    std::vector<cd> out(f.coeffs());
    for (std::size_t i = 0; i < lat.size(); ++i) out[i] *= profile.low_pass(lat.point(i), N);
    return SpectralField(f.lattice_ptr(), std::move(out));
}

SpectralField project_dyadic(const SpectralField& f, int N, const CutoffProfile& profile) {
    if (!is_pow2(N)) throw ParamError("dyadic level must be a power of two");
    const auto& lat = f.lattice();
    std::vector<cd> out(f.coeffs());
    for (std::size_t i = 0; i < lat.size(); ++i) out[i] *= profile.shell(lat.point(i), N);
    return SpectralField(f.lattice_ptr(), std::move(out));
}

double vector_mixed_norm(std::span<const SpectralField> fields, const TorusGrid& grid,
                         double r, double rt) {
    if (fields.empty()) throw ParamError("empty family");
    std::vector<double> sq(grid.points(), 0.0);
    for (const auto& f : fields) {
        auto s = f.samples(grid);
        for (std::size_t m = 0; m < sq.size(); ++m) sq[m] += std::norm((*s)[m]);
    }
    std::vector<cd> root(sq.size());
    for (std::size_t m = 0; m < sq.size(); ++m) root[m] = std::sqrt(sq[m]);
    return mixed_space_norm_samples(root, grid.d, grid.k, grid.M, r, rt);
}

double square_function_norm(const SpectralField& f, double r, double rt,
                            const CutoffProfile& profile, const TorusGrid& grid) {
    if (!(r > 1.0) || !(rt > 1.0) || std::isinf(r) || std::isinf(rt))
        throw ParamError("square function exponents must lie in (1, inf)");
    ProjectorBank bank(f.lattice_ptr(), profile);
    const auto& lat = f.lattice();
    std::vector<double> sq(grid.points(), 0.0);
    std::vector<cd> piece(lat.size());
    for (std::size_t l = 0; l < bank.levels().size(); ++l) {
        auto psi = bank.shell_values(l);
        bool any = false;
        for (std::size_t i = 0; i < lat.size(); ++i) {
            piece[i] = f.coeffs()[i] * psi[i];
            any = any || piece[i] != cd(0.0, 0.0);
        }
        if (!any) continue;
        auto s = synthesize(lat, piece, grid);
        for (std::size_t m = 0; m < sq.size(); ++m) sq[m] += std::norm(s[m]);
    }
    std::vector<cd> root(sq.size());
    for (std::size_t m = 0; m < sq.size(); ++m) root[m] = std::sqrt(sq[m]);
    return mixed_space_norm_samples(root, grid.d, grid.k, grid.M, r, rt);
}

RatioScan lp_equivalence_scan(const std::function<SpectralField(int)>& sampler,
                              double r, double rt, int trials,
                              const CutoffProfile& profile, const TorusGrid& grid) {
    if (trials < 1) throw ParamError("need at least one trial");
    RatioScan out{std::numeric_limits<double>::infinity(), 0.0, trials};
    for (int t = 0; t < trials; ++t) {
        SpectralField f = sampler(t);
        double denom = mixed_space_norm(f, grid, r, rt);
        if (denom == 0.0) continue;
        double ratio = square_function_norm(f, r, rt, profile, grid) / denom;
        out.min_ratio = std::min(out.min_ratio, ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
    }
    return out;
}

DensitySquareResult density_square_norm(const OrthonormalEnsemble& ens, double r, double rt,
                                        const CutoffProfile& profile, const TorusGrid& grid) {
    ens.validate();
    DensitySquareResult res{};
    res.quasi_norm = r < 1.0 || rt < 1.0;
    if (!(r > 0.5) || !(rt > 0.5)) throw ParamError("density exponents must exceed 1/2");

    const auto& lat = *ens.lattice;
    ProjectorBank bank(ens.lattice, profile);
    std::vector<double> lhs(grid.points(), 0.0);
    std::vector<double> rho(grid.points(), 0.0);
    std::vector<cd> piece(lat.size());
    for (int j = 0; j < ens.J(); ++j) {
        const double w = ens.weights[static_cast<std::size_t>(j)];
        if (w == 0.0) continue;
        SpectralField uj = ens.frame_field(j);
        auto s = uj.samples(grid);
        for (std::size_t m = 0; m < rho.size(); ++m) rho[m] += w * std::norm((*s)[m]);
        for (std::size_t l = 0; l < bank.levels().size(); ++l) {
            auto psi = bank.shell_values(l);
            bool any = false;
            for (std::size_t i = 0; i < lat.size(); ++i) {
                piece[i] = uj.coeffs()[i] * psi[i];
                any = any || piece[i] != cd(0.0, 0.0);
            }
            if (!any) continue;
            auto ps = synthesize(lat, piece, grid);
            for (std::size_t m = 0; m < lhs.size(); ++m) lhs[m] += w * std::norm(ps[m]);
        }
    }
    // quasi-norm range: same formula, documented bias; exponents >= 1 required
    // by mixed_space_norm_samples, so drop through a small local evaluation
    auto norm_of = [&](const std::vector<double>& v) {
        std::size_t block = 1;
        for (int i = 0; i < grid.k; ++i) block *= static_cast<std::size_t>(grid.M);
        const double wy = std::pow(static_cast<double>(grid.M), -grid.k);
        const double wx = std::pow(static_cast<double>(grid.M), -(grid.d - grid.k));
        double outer = 0.0;
        for (std::size_t b = 0; b < v.size() / block; ++b) {
            double inner = 0.0;
            for (std::size_t i = 0; i < block; ++i) inner += std::pow(v[b * block + i], rt);
            outer += std::pow(inner * wy, r / rt);
        }
        return std::pow(outer * wx, 1.0 / r);
    };
    res.square_side = norm_of(lhs);
    res.rho_side = norm_of(rho);
    res.ratio = res.rho_side == 0.0 ? 0.0 : res.square_side / res.rho_side;
    return res;
}

double bernstein_ratio(std::span<const SpectralField> family, double rho, int N,
                       double r, double rt, const TorusGrid& grid,
                       const CutoffProfile& profile) {
    if (family.empty()) throw ParamError("empty family");
    std::vector<SpectralField> projected;
    std::vector<SpectralField> weighted;
    projected.reserve(family.size());
    weighted.reserve(family.size());
    for (const auto& g : family) {
        SpectralField pg = project_dyadic(g, N, profile);
        weighted.push_back(apply_multiplier(pg, bessel_multiplier(rho)));
        projected.push_back(std::move(pg));
    }
    double denom = std::pow(static_cast<double>(N), rho) *
                   vector_mixed_norm(projected, grid, r, rt);
    if (denom == 0.0) throw NumericError("undefined ratio: projected family vanishes");
    return vector_mixed_norm(weighted, grid, r, rt) / denom;
}

double mixed_besov_norm(const SpectralField& f, double s, double r, double rt,
                        const CutoffProfile& profile, const TorusGrid& grid) {
    ProjectorBank bank(f.lattice_ptr(), profile);
    const auto& lat = f.lattice();
    std::vector<cd> piece(lat.size());
    double best = 0.0;
    for (std::size_t l = 0; l < bank.levels().size(); ++l) {
        auto psi = bank.shell_values(l);
        bool any = false;
        for (std::size_t i = 0; i < lat.size(); ++i) {
            piece[i] = f.coeffs()[i] * psi[i];
            any = any || piece[i] != cd(0.0, 0.0);
        }
        if (!any) continue;
        auto samples = synthesize(lat, piece, grid);
        double v = std::pow(static_cast<double>(bank.levels()[l]), s) *
                   mixed_space_norm_samples(samples, grid.d, grid.k, grid.M, r, rt);
        best = std::max(best, v);
    }
    return best;
}

}  // namespace toruslab
