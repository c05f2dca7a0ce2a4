#include "toruslab/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "toruslab/errors.hpp"
#include "toruslab/field.hpp"

namespace toruslab {

std::complex<double> kernel_value_1d(double t, double x, int N) {
    std::complex<double> acc(0.0, 0.0);
    for (int xi = -N; xi <= N; ++xi)
        acc += phase_unit(x * xi + t * static_cast<double>(xi) * xi);
    return acc;
}

std::complex<double> kernel_value(double t, std::span<const double> z,
                                  const FrequencyLattice& lat) {
    if (static_cast<int>(z.size()) != lat.d()) throw ParamError("point dimension mismatch");
    std::complex<double> prod(1.0, 0.0);
    for (int i = 0; i < lat.d(); ++i) prod *= kernel_value_1d(t, z[i], lat.N());
    return prod;
}

KernelProbe kernel_decay_probe(int d, int N, double eps, int nt, int nx) {
    if (N < 1) throw ParamError("N must be >= 1");
    if (!(eps > 0.0)) throw ParamError("time floor must be positive; t = 0 is outside the window");
    const double t_hi = 1.0 / (2.0 * N);
    if (eps > t_hi) throw ParamError("time floor exceeds the window 1/(2N)");
    if (nt < 2 || nx < 2) throw ParamError("need at least two samples per axis");

    KernelProbe probe;
    probe.d = d;
    probe.N = N;
    probe.times.resize(nt);
    const double lr = std::log(t_hi / eps);
    for (int i = 0; i < nt; ++i)
        probe.times[i] = eps * std::exp(lr * i / (nt - 1));
    probe.times.back() = t_hi;

    probe.sup_abs.resize(nt);
    probe.weighted.resize(nt);
    for (int i = 0; i < nt; ++i) {
        const double t = probe.times[i];
        double sup1 = 0.0;
        for (int m = 0; m < nx; ++m)
            sup1 = std::max(sup1, std::abs(kernel_value_1d(t, static_cast<double>(m) / nx, N)));
        const double sup = std::pow(sup1, d);
        probe.sup_abs[i] = sup;
        probe.weighted[i] = std::pow(t, 0.5 * d) * sup;
        probe.weighted_sup = std::max(probe.weighted_sup, probe.weighted[i]);
    }
    return probe;
}

KernelDecayScan kernel_decay_scan(int d, std::span<const int> N_list, double eps,
                                  int nt, int nx) {
    if (N_list.empty()) throw ParamError("empty N list");
    KernelDecayScan scan;
    for (int N : N_list) scan.probes.push_back(kernel_decay_probe(d, N, eps, nt, nx));
    for (std::size_t i = 1; i < scan.probes.size(); ++i) {
        const double a = scan.probes[i - 1].weighted_sup;
        const double b = scan.probes[i].weighted_sup;
        const double ratio = std::max(a, b) / std::min(a, b);
        scan.worst_consecutive_ratio = std::max(scan.worst_consecutive_ratio, ratio);
    }
    return scan;
}

}  // namespace toruslab
