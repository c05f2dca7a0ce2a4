#pragma once

#include <span>

#include "toruslab/field.hpp"
#include "toruslab/trajectory.hpp"

namespace toruslab {

// |v|^p with fast paths for the small integer exponents the probes use.
double abs_pow(const cd& v, double p);
double pow_real(double x, double p);

// Nested quadrature norm (int_x (int_y |f|^rt)^{r/rt})^{1/r} over the split
// grid; infinite exponents switch to grid maxima.  Samples are row-major with
// the y-block (trailing k axes) fastest.
double mixed_space_norm_samples(std::span<const cd> samples, int d, int k, int M,
                                double r, double rt);

double mixed_space_norm(const SpectralField& f, const TorusGrid& grid, double r, double rt);

// L^q_t of per-time mixed norms under the trajectory's quadrature rule.
double spacetime_norm(const Trajectory& traj, const TorusGrid& grid,
                      double q, double r, double rt);
// Same composition for precomputed per-time scalars.
double time_q_norm(std::span<const double> values, std::span<const double> weights, double q);

// H^s norm, exact coefficient sum (sum (1+|xi|^2)^s |a|^2)^{1/2}
double sobolev_norm(const SpectralField& f, double s);
// ||<grad>^s f||_{L^r}
double lr_sobolev_norm(const SpectralField& f, double s, double r, const TorusGrid& grid);

// Partial-regularity norm: (sum (1+|xi_2|^2)^{s-1/q} (1+|xi|^2)^{1/q} |a|^2)^{1/2}.
// The documented exponent window is 1/q <= s <= 1 + 1/q; values outside only warn.
double partial_sobolev_norm(const SpectralField& f, double s, double q);

// ||<grad_y>^s f||_{L^r_x L^rt_y}
double mixed_sobolev_y_norm(const SpectralField& f, double s, double r, double rt,
                            const TorusGrid& grid);

}  // namespace toruslab
