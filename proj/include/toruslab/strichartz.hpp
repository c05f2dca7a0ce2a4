#pragma once

#include <span>
#include <vector>

#include "toruslab/admissible.hpp"
#include "toruslab/field.hpp"
#include "toruslab/norms.hpp"
#include "toruslab/ons.hpp"
#include "toruslab/trajectory.hpp"

namespace toruslab {

// ||e^{-it Delta} P_{<=N} f||_{L^r_x L^rt_y} * |t|^beta / ||f||_{L^r'_x L^rt'_y}
// for |t| <= 1/(2N), t != 0, with the sharp cube low-pass.
double fixed_time_decay_ratio(const SpectralField& f, double t, int N,
                              double r, double rt, const TorusGrid& grid);

// Streaming L^q_t L^r_x L^rt_y norm of the free evolution of f over a rule.
double free_spacetime_norm(const SpectralField& f, double q, double r, double rt,
                           const TimeRule& rule, const TorusGrid& grid);

// Uniform sample count making the periodic time quadrature exact (or nearly
// so) for the |u|-power integrands of band-N data in d dimensions.
int full_torus_time_samples(double q, int d, int N);

// ||e^{-it Delta} f||_{L^q(T) L^r L^rt} / ||f||_{H^{1/q}}; the triple must
// satisfy the admissible inequality 2/q >= beta.
double strichartz_ratio(const SpectralField& f, const AdmissibleTriple& triple,
                        const TorusGrid& grid, int n_t = 0);

struct LocalizedRatio {
    double local;   // window I_N = [-1/(2N), 1/(2N)], vs ||f||_{L^2}
    double global;  // full period, vs N^{1/q} ||f||_{L^2}
};

LocalizedRatio localized_strichartz_ratio(const SpectralField& f, int N,
                                          const AdmissibleTriple& triple,
                                          const TorusGrid& grid,
                                          int n_local = 0, int n_global = 0);

// Space-time wave of cube-supported coefficients:
// (E a)(t, z) = sum_xi a(xi) e^{2 pi i (z xi + t |xi|^2)}.
Trajectory extension_apply(const SpectralField& a, const TimeRule& rule);

// Adjoint: integrates a space-time trajectory against conjugate phases over a
// full period; zero off the cube of out_lat.
std::vector<cd> restriction_apply(const Trajectory& F, const FrequencyLattice& out_lat);

// periodic rule with 4(2N^2+1) samples: exact for the pure phases that appear
// when restricting extensions of band-N data (time frequencies <= d N^2)
TimeRule default_restriction_rule(int d, int N);

// ||rho||_{L^q L^r L^rt} / (N^{1/q} ||lambda||_{l^alpha'}) for an orthonormal
// ensemble; requires the sharp condition, gamma below (d+1)/(d-1), and
// alpha' <= 2 gamma/(gamma+1).
double ons_strichartz_ratio(const OrthonormalEnsemble& ens, const AdmissibleTriple& triple,
                            double alpha_prime, const TorusGrid& grid, int n_t = 0);

struct DualityCheck {
    double lhs = 0.0;    // Schatten-alpha norm of W 1_{I_N} (K_N *) 1_{I_N} W
    double rhs = 0.0;    // ||W||^2 in L^{2q'}_t L^{2r'}_x L^{2 gamma'}_y
    double ratio = 0.0;  // lhs / rhs (0 when both vanish)
    int dim = 0;         // active dense dimension
    double alpha = 0.0;  // 2 gamma'
    double frobenius = 0.0;  // entrywise Hilbert-Schmidt norm of the sandwich
};

// Dense space-time check of the Schatten duality inequality.  W is sampled on
// the (n_t x M^d) row-major space-time grid over one period.
DualityCheck duality_schatten_check(std::span<const cd> W, int n_t, const TorusGrid& grid,
                                    const FrequencyLattice& lat, const AdmissibleTriple& triple,
                                    int dim_cap = 4096);

}  // namespace toruslab
