#pragma once

#include <complex>
#include <span>
#include <vector>

#include "toruslab/lattice.hpp"

namespace toruslab {

// One-dimensional propagator kernel sum_{|xi| <= N} e^{2 pi i (x xi + t xi^2)}.
std::complex<double> kernel_value_1d(double t, double x, int N);

// Full kernel over the truncation cube; the quadratic phase factors across
// coordinates, so this is a product of 1-D sums.
std::complex<double> kernel_value(double t, std::span<const double> z,
                                  const FrequencyLattice& lat);

// Record of one decay sweep: sup_x |K_N(t, x)| per time sample in
// [eps, 1/(2N)] plus the |t|^{d/2}-weighted values.
struct KernelProbe {
    int d = 1;
    int N = 1;
    std::vector<double> times;
    std::vector<double> sup_abs;   // sup over the x-grid of |K_N|
    std::vector<double> weighted;  // |t|^{d/2} * sup_abs
    double weighted_sup = 0.0;
};

// Log-spaced t in [eps, 1/(2N)] (endpoints included), nx-point x-grid per
// axis.  The sup over the cube grid is the d-th power of the 1-D sup.
KernelProbe kernel_decay_probe(int d, int N, double eps, int nt = 64, int nx = 1024);

struct KernelDecayScan {
    std::vector<KernelProbe> probes;
    double worst_consecutive_ratio = 1.0;  // max over consecutive N of sup ratio (>= 1)
};

KernelDecayScan kernel_decay_scan(int d, std::span<const int> N_list, double eps,
                                  int nt = 64, int nx = 1024);

}  // namespace toruslab
