#pragma once

#include <optional>
#include <vector>

#include "toruslab/admissible.hpp"
#include "toruslab/field.hpp"
#include "toruslab/trajectory.hpp"

namespace toruslab {

// Growth-condition nonlinearities |F_p(u)| <= |u|^p:
//   gauge:   F_p(u) = sign |u|^{p-1} u, fed through the convolution source
//   modulus: F_p(u) = sign |u|^p (principal real branch), likewise
//   hartree: G(u) = sign (w * |u|^{p-1}) u, the self-consistent potential form
struct NonlinearitySpec {
    double p = 3.0;
    enum class Kind { gauge, modulus, hartree } kind = Kind::gauge;
    double sign = 1.0;

    void validate() const;
};

struct PotentialSpec {
    SpectralField w;
    std::string regularity_tag;  // e.g. "W^{2/q,1}" or "B^s_{(r',rt'),inf}"

    // real on the grid: coefficients conjugate-symmetric to 1e-10
    void validate() const;
};

// real even potential with coefficients |xi|^{-(d-a)} off the origin, the
// band-limited stand-in for the |z|^{-a} interaction kernels
SpectralField riesz_potential(LatticePtr lattice, double a);
// delta surrogate: all coefficients 1
SpectralField delta_potential(LatticePtr lattice);
// mean-only potential: single coefficient at xi = 0
SpectralField mean_potential(LatticePtr lattice, double value = 1.0);

struct SolverConfig {
    double T = 0.05;
    int n_t = 64;           // time subintervals (nodes = n_t + 1)
    int max_picard = 30;
    double tol = 1e-10;     // fixed-point tolerance in the space-time metric
    TorusGrid grid;         // dealiased product grid
    std::vector<AdmissibleTriple> metric;  // sup over these triples, >= 1 entry
    bool refine = true;     // double n_t until the fixed point moves < tol/4
    int max_refinements = 4;

    void validate() const;
};

// pointwise F_p on the dealiased grid, re-analyzed and re-truncated to the band
SpectralField eval_nonlinearity(const SpectralField& u, const NonlinearitySpec& spec,
                                const TorusGrid& grid);

// Fourier-side product w-hat * F_p(u)-hat (the convolution source term)
SpectralField hartree_term(const SpectralField& u, const SpectralField& w,
                           const NonlinearitySpec& spec, const TorusGrid& grid);

// Dispatch on spec.kind: convolution source for gauge/modulus, self-consistent
// potential times u for hartree.  Output is band-limited to u's lattice.
SpectralField nonlinear_term(const SpectralField& u, const SpectralField& w,
                             const NonlinearitySpec& spec, const TorusGrid& grid);

// e^{-it Delta} f - i int_0^t e^{-i(t-t') Delta} G(t') dt' by propagator-
// weighted trapezoid over the trajectory nodes up to t (t must be a node).
SpectralField duhamel_apply(const SpectralField& f, const Trajectory& G, double t);

struct PicardHistory {
    std::vector<double> distances;  // metric distance per iteration
    bool converged = false;
    int iterations = 0;
    int n_t = 0;                  // final time resolution
    double contraction_ratio = 0.0;  // last observed distance ratio
    double refine_move = 0.0;     // fixed-point movement at the last doubling
};

struct PicardResult {
    Trajectory u;
    PicardHistory history;
};

// Fixed-point iteration u <- e^{-itD}f - i Int e^{-i(t-t')D} G(u) dt' starting
// from the free evolution; throws DivergenceError after three consecutive
// non-contracting iterations.
PicardResult picard_solve(const SpectralField& f, const PotentialSpec& w,
                          const NonlinearitySpec& spec, const SolverConfig& config);

// Strang splitting: half nonlinear substep, exact free flight, half nonlinear
// substep.  The potential-form (hartree) substep is an exact pointwise phase;
// the convolution sources use an explicit midpoint step.  Band truncation is
// enforced after each nonlinear application.
Trajectory splitstep_solve(const SpectralField& f, const PotentialSpec& w,
                           const NonlinearitySpec& spec, const SolverConfig& config);

// Metric triple construction for the contraction argument at split k = 2:
// 1/r = 1/(p+1), 1/rt = 1/2 - e0/(p+1),
// 1/q = (d-2)/4 - (d-2)/(2(p+1)) + e0/(p+1), with e0 the midpoint of its
// admissible window.  Requires d >= 3.
AdmissibleTriple default_wellposedness_triple(int d, const Rational& p, const Rational& s);

struct NonlinearProbe {
    double ratio = 0.0;
    bool degenerate = false;  // input vanished; 0/0 guarded
    double numerator = 0.0;
    double denominator = 0.0;
};

// ratio || <grad_y>^s <grad>^{2/q} G_p(u) ||_{L^{q'} L^{r'} L^{rt'}} /
//       ( ||w||_{W^{2/q,1}} ||u||^p_{L^q L^r W^{s,rt}_y} )
NonlinearProbe nonlinear_estimate_probe(const Trajectory& u, const PotentialSpec& w,
                                        const NonlinearitySpec& spec, double s,
                                        const AdmissibleTriple& triple, const TorusGrid& grid);

}  // namespace toruslab
