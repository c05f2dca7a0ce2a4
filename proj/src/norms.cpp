#include "toruslab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "toruslab/errors.hpp"

namespace toruslab {

double pow_real(double x, double p) {
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    if (p == 3.0) return x * x * x;
    if (p == 4.0) { double y = x * x; return y * y; }
    if (p == 0.5) return std::sqrt(x);
    return std::pow(x, p);
}

double abs_pow(const cd& v, double p) {
    if (p == 2.0) return std::norm(v);
    if (p == 1.0) return std::abs(v);
    if (p == 4.0) { double n = std::norm(v); return n * n; }
    return std::pow(std::abs(v), p);
}

double mixed_space_norm_samples(std::span<const cd> samples, int d, int k, int M,
                                double r, double rt) {
    if (r < 1.0 || rt < 1.0) throw ParamError("Lebesgue exponents must be >= 1");
    std::size_t block = 1;
    for (int i = 0; i < k; ++i) block *= static_cast<std::size_t>(M);
    const std::size_t nblocks = samples.size() / block;
    if (nblocks * block != samples.size()) throw ParamError("sample layout mismatch");

    const double wy = std::pow(static_cast<double>(M), -k);
    const double wx = std::pow(static_cast<double>(M), -(d - k));
    const bool rt_inf = std::isinf(rt);
    const bool r_inf = std::isinf(r);

    double outer_acc = 0.0;
    double outer_max = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) {
        std::span<const cd> blk = samples.subspan(b * block, block);
        double inner;      // the y-norm itself
        double inner_pow;  // sum |f|^rt * wy when rt finite
        if (rt_inf) {
            inner = 0.0;
            for (const cd& v : blk) inner = std::max(inner, std::abs(v));
            inner_pow = 0.0;
        } else {
            inner_pow = 0.0;
            for (const cd& v : blk) inner_pow += abs_pow(v, rt);
            inner_pow *= wy;
            inner = 0.0;  // computed lazily below when needed
        }
        if (r_inf) {
            if (!rt_inf) inner = pow_real(inner_pow, 1.0 / rt);
            outer_max = std::max(outer_max, inner);
        } else if (rt_inf) {
            outer_acc += pow_real(inner, r) * wx;
        } else {
            // inner^r = inner_pow^{r/rt}; avoids a root followed by a power
            outer_acc += pow_real(inner_pow, r / rt) * wx;
        }
    }
    return r_inf ? outer_max : pow_real(outer_acc, 1.0 / r);
}

double mixed_space_norm(const SpectralField& f, const TorusGrid& grid, double r, double rt) {
    auto s = f.samples(grid);
    return mixed_space_norm_samples(*s, grid.d, grid.k, grid.M, r, rt);
}

double time_q_norm(std::span<const double> values, std::span<const double> weights, double q) {
    if (values.empty()) throw ParamError("empty trajectory");
    if (q < 1.0) throw ParamError("time exponent must be >= 1");
    if (std::isinf(q)) return *std::max_element(values.begin(), values.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += weights[i] * pow_real(values[i], q);
    return pow_real(acc, 1.0 / q);
}

double spacetime_norm(const Trajectory& traj, const TorusGrid& grid,
                      double q, double r, double rt) {
    traj.validate();
    std::vector<double> vals(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i)
        vals[i] = mixed_space_norm(traj.fields[i], grid, r, rt);
    return time_q_norm(vals, traj.weights, q);
}

double sobolev_norm(const SpectralField& f, double s) {
    const auto& lat = f.lattice();
    double acc = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i)
        acc += std::pow(1.0 + static_cast<double>(lat.nsq(i)), s) * std::norm(f.coeffs()[i]);
    return std::sqrt(acc);
}

double lr_sobolev_norm(const SpectralField& f, double s, double r, const TorusGrid& grid) {
    if (r == 2.0) return sobolev_norm(f, s);
    SpectralField g = apply_multiplier(f, bessel_multiplier(s));
    return mixed_space_norm(g, grid, r, r);
}

double partial_sobolev_norm(const SpectralField& f, double s, double q) {
    if (q < 1.0) throw ParamError("time exponent must be >= 1");
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    if (s < iq || s > 1.0 + iq)
        std::cerr << "[toruslab] warning: partial regularity s=" << s
                  << " outside the documented window [" << iq << ", " << 1.0 + iq << "]\n";
    const auto& lat = f.lattice();
    double acc = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        double wy = std::pow(1.0 + static_cast<double>(lat.nsq_y(i)), s - iq);
        double wfull = std::pow(1.0 + static_cast<double>(lat.nsq(i)), iq);
        acc += wy * wfull * std::norm(f.coeffs()[i]);
    }
    return std::sqrt(acc);
}

double mixed_sobolev_y_norm(const SpectralField& f, double s, double r, double rt,
                            const TorusGrid& grid) {
    SpectralField g = apply_multiplier(f, bessel_y_multiplier(s));
    return mixed_space_norm(g, grid, r, rt);
}

}  // namespace toruslab
