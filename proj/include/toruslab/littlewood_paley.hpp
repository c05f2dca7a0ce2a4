#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "toruslab/field.hpp"
#include "toruslab/lattice.hpp"
#include "toruslab/ons.hpp"

namespace toruslab {

// Dyadic cutoff shape: sharp cube indicator or a fixed radial C-infinity bump
// phi with phi = 1 on |z| <= 1 and phi = 0 on |z| >= 2.
struct CutoffProfile {
    enum class Kind { sharp, smooth };
    Kind kind = Kind::smooth;

    static CutoffProfile sharp() { return {Kind::sharp}; }
    static CutoffProfile smooth() { return {Kind::smooth}; }

    // the concrete radial bump: h(2-rho) / (h(2-rho) + h(rho-1)), h(s)=e^{-1/s}
    static double bump(double rho);

    // eta(xi / N) for the level-N low-pass
    double low_pass(std::span<const std::int32_t> xi, int N) const;
    // psi_N(xi): level N = 1 is the low-pass itself, otherwise the dyadic shell
    double shell(std::span<const std::int32_t> xi, int N) const;

    const char* name() const { return kind == Kind::sharp ? "sharp" : "smooth"; }
};

// Cached psi_N values over a lattice for all dyadic levels needed to cover it.
class ProjectorBank {
public:
    ProjectorBank(LatticePtr lattice, CutoffProfile profile);

    const std::vector<int>& levels() const { return levels_; }
    // psi_N values per lattice point for level index l
    std::span<const double> shell_values(std::size_t l) const { return shells_[l]; }
    const CutoffProfile& profile() const { return profile_; }
    const FrequencyLattice& lattice() const { return *lat_; }

private:
    LatticePtr lat_;
    CutoffProfile profile_;
    std::vector<int> levels_;
    std::vector<std::vector<double>> shells_;
};

// smallest dyadic level whose low-pass equals 1 on the whole band
int covering_level(const CutoffProfile& profile, int band, int d);

// P_{<=N} f: multiply coefficients by eta(xi/N).
SpectralField project_leq(const SpectralField& f, int N, const CutoffProfile& profile);
// P_N f = P_{<=N} f - P_{<=N/2} f (dyadic N, with P_{<=1/2} = 0)
SpectralField project_dyadic(const SpectralField& f, int N, const CutoffProfile& profile);

// || (sum_j |f_j|^2)^{1/2} ||_{L^r_x L^rt_y}
double vector_mixed_norm(std::span<const SpectralField> fields, const TorusGrid& grid,
                         double r, double rt);

// mixed norm of the dyadic square function (sum_N |P_N f|^2)^{1/2}
double square_function_norm(const SpectralField& f, double r, double rt,
                            const CutoffProfile& profile, const TorusGrid& grid);

struct RatioScan {
    double min_ratio;
    double max_ratio;
    int trials;
};

// extreme values of square_function_norm / mixed_space_norm over sampled fields
RatioScan lp_equivalence_scan(const std::function<SpectralField(int)>& sampler,
                              double r, double rt, int trials,
                              const CutoffProfile& profile, const TorusGrid& grid);

struct DensitySquareResult {
    double square_side;  // || sum_N sum_k lambda_k |P_N u_k|^2 ||
    double rho_side;     // || sum_k lambda_k |u_k|^2 ||
    double ratio;        // square_side / rho_side
    bool quasi_norm;     // set when r or rt < 1 (triangle inequality fails)
};

// Operator-density square function vs the plain density.  Exponents below 1
// are allowed but flagged as quasi-norm mode.
DensitySquareResult density_square_norm(const OrthonormalEnsemble& ens, double r, double rt,
                                        const CutoffProfile& profile, const TorusGrid& grid);

// || (sum_j |P_N <grad>^rho g_j|^2)^{1/2} || / (N^rho || (sum_j |P_N g_j|^2)^{1/2} ||)
double bernstein_ratio(std::span<const SpectralField> family, double rho, int N,
                       double r, double rt, const TorusGrid& grid,
                       const CutoffProfile& profile = CutoffProfile::sharp());

// sup over dyadic shells of N^s ||P_N f||_{L^r_x L^rt_y}
double mixed_besov_norm(const SpectralField& f, double s, double r, double rt,
                        const CutoffProfile& profile, const TorusGrid& grid);

}  // namespace toruslab
