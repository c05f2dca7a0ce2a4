#include "toruslab/strichartz.hpp"

#include <algorithm>
#include <cmath>

#include "toruslab/errors.hpp"
#include "toruslab/kernel.hpp"
#include "toruslab/littlewood_paley.hpp"
#include "toruslab/schatten.hpp"

namespace toruslab {

namespace {

double inv_or_zero(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

double beta_decay(int d, int k, double r, double rt) {
    return (d - k) * (0.5 - inv_or_zero(r)) + k * (0.5 - inv_or_zero(rt));
}

double dual(double p) {
    if (std::isinf(p)) return 1.0;
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return p / (p - 1.0);
}

}  // namespace

double fixed_time_decay_ratio(const SpectralField& f, double t, int N,
                              double r, double rt, const TorusGrid& grid) {
    if (!(rt >= 2.0) || !(r >= rt)) throw ParamError("need 2 <= rt <= r <= inf");
    if (t == 0.0 || std::abs(t) > 1.0 / (2.0 * N))
        throw ParamError("t outside the window (0, 1/(2N)]");
    const auto& lat = f.lattice();
    SpectralField low = project_leq(f, N, CutoffProfile::sharp());
    SpectralField u = free_propagate(low, t);
    const double num = mixed_space_norm(u, grid, r, rt);
    const double den = mixed_space_norm(f, grid, dual(r), dual(rt));
    if (den == 0.0) throw NumericError("zero input field");
    const double beta = beta_decay(lat.d(), lat.k(), r, rt);
    return num * std::pow(std::abs(t), beta) / den;
}

double free_spacetime_norm(const SpectralField& f, double q, double r, double rt,
                           const TimeRule& rule, const TorusGrid& grid) {
    const auto& lat = f.lattice();
    std::vector<double> vals(rule.times.size());
    std::vector<cd> phased(lat.size());
    std::vector<cd> buf;
    for (std::size_t i = 0; i < rule.times.size(); ++i) {
        const double t = rule.times[i];
        for (std::size_t j = 0; j < lat.size(); ++j)
            phased[j] = f.coeffs()[j] * phase_unit(t * static_cast<double>(lat.nsq(j)));
        synthesize_into(lat, phased, grid, buf);
        vals[i] = mixed_space_norm_samples(buf, grid.d, grid.k, grid.M, r, rt);
    }
    return time_q_norm(vals, rule.weights, q);
}

int full_torus_time_samples(double q, int d, int N) {
    const double deg = std::isinf(q) ? 4.0 * d * N * N
                                     : 0.5 * q * d * static_cast<double>(N) * N;
    const int n = static_cast<int>(std::ceil(deg)) + 2;
    return std::clamp(n, 64, 40000);
}

double strichartz_ratio(const SpectralField& f, const AdmissibleTriple& triple,
                        const TorusGrid& grid, int n_t) {
    if (!triple.satisfies_eq_ineq)
        throw ClassificationError("triple fails the admissible inequality 2/q >= beta");
    const auto& lat = f.lattice();
    const double q = triple.q_val(), r = triple.r_val(), rt = triple.rt_val();
    if (n_t <= 0) n_t = full_torus_time_samples(q, lat.d(), lat.N());
    const double den = sobolev_norm(f, std::isinf(q) ? 0.0 : 1.0 / q);
    if (den == 0.0) throw NumericError("zero input field");
    const double num =
        free_spacetime_norm(f, q, r, rt, TimeRule::periodic_uniform(n_t), grid);
    return num / den;
}

LocalizedRatio localized_strichartz_ratio(const SpectralField& f, int N,
                                          const AdmissibleTriple& triple,
                                          const TorusGrid& grid,
                                          int n_local, int n_global) {
    if (!triple.satisfies_eq_ineq)
        throw ClassificationError("triple fails the admissible inequality 2/q >= beta");
    const auto& lat = f.lattice();
    const double q = triple.q_val(), r = triple.r_val(), rt = triple.rt_val();
    SpectralField low = project_leq(f, N, CutoffProfile::sharp());
    const double den = low.l2_norm();
    if (den == 0.0) throw NumericError("band-limited part of f vanishes");

    if (n_local <= 0) {
        // enough Gauss nodes to resolve every oscillation across the window
        double cycles = 0.5 * std::min(std::isinf(q) ? 8.0 : q, 8.0) * lat.d() * N;
        n_local = std::clamp(static_cast<int>(std::ceil(2.0 * cycles)) + 16, 32, 4096);
    }
    TimeRule local_rule = TimeRule::gauss_legendre(n_local, -0.5 / N, 0.5 / N);
    LocalizedRatio out{};
    out.local = free_spacetime_norm(low, q, r, rt, local_rule, grid) / den;

    if (n_global <= 0) n_global = full_torus_time_samples(q, lat.d(), N);
    const double global_norm =
        free_spacetime_norm(low, q, r, rt, TimeRule::periodic_uniform(n_global), grid);
    const double nq = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(N), 1.0 / q);
    out.global = global_norm / (nq * den);
    return out;
}

Trajectory extension_apply(const SpectralField& a, const TimeRule& rule) {
    return free_trajectory(a, rule);
}

TimeRule default_restriction_rule(int d, int N) {
    (void)d;
    return TimeRule::periodic_uniform(4 * (2 * N * N + 1));
}

std::vector<cd> restriction_apply(const Trajectory& F, const FrequencyLattice& out_lat) {
    F.validate();
    const auto& src = F.fields.front().lattice();
    std::vector<cd> out(out_lat.size(), cd(0.0, 0.0));
    std::vector<int> pt(static_cast<std::size_t>(out_lat.d()));
    // map output frequencies to source lattice indices once
    std::vector<std::ptrdiff_t> src_index(out_lat.size(), -1);
    for (std::size_t i = 0; i < out_lat.size(); ++i) {
        auto xi = out_lat.point(i);
        bool inside = true;
        for (int c = 0; c < out_lat.d(); ++c) {
            pt[static_cast<std::size_t>(c)] = xi[c];
            inside = inside && std::abs(xi[c]) <= src.N();
        }
        if (inside) src_index[i] = static_cast<std::ptrdiff_t>(src.index_of(pt));
    }
    for (std::size_t s = 0; s < F.size(); ++s) {
        const double t = F.times[s];
        const double w = F.weights[s];
        const auto& coeffs = F.fields[s].coeffs();
        for (std::size_t i = 0; i < out_lat.size(); ++i) {
            if (src_index[i] < 0) continue;
            out[i] += w * coeffs[static_cast<std::size_t>(src_index[i])] *
                      phase_unit(-t * static_cast<double>(out_lat.nsq(i)));
        }
    }
    return out;
}

double ons_strichartz_ratio(const OrthonormalEnsemble& ens, const AdmissibleTriple& triple,
                            double alpha_prime, const TorusGrid& grid, int n_t) {
    ens.validate();
    if (!triple.sharp_admissible)
        throw ClassificationError("triple fails the sharp condition 2/q + d/gamma = d");
    if (!triple.gamma_below_critical)
        throw ClassificationError("gamma is not below (d+1)/(d-1)");
    if (alpha_prime < 1.0 || alpha_prime > triple.alpha_prime.value() + 1e-12)
        throw ClassificationError("alpha' outside [1, 2 gamma/(gamma+1)]");
    const auto& lat = *ens.lattice;
    const int N = lat.N();
    const double q = triple.q_val(), r = triple.r_val(), rt = triple.rt_val();
    if (n_t <= 0) n_t = full_torus_time_samples(std::isinf(q) ? q : 2.0 * q, lat.d(), N);
    TimeRule rule = TimeRule::periodic_uniform(n_t);

    std::vector<double> vals(rule.times.size());
    for (std::size_t i = 0; i < rule.times.size(); ++i) {
        auto rho = ons_density_samples(ens, rule.times[i], grid);
        std::vector<cd> as_cd(rho.size());
        for (std::size_t m = 0; m < rho.size(); ++m) as_cd[m] = rho[m];
        vals[i] = mixed_space_norm_samples(as_cd, grid.d, grid.k, grid.M, r, rt);
    }
    const double num = time_q_norm(vals, rule.weights, q);
    const double nq = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(N), 1.0 / q);
    const double lam = lalpha_norm(ens.weights, alpha_prime);
    if (lam == 0.0) throw NumericError("zero weight vector");
    return num / (nq * lam);
}

DualityCheck duality_schatten_check(std::span<const cd> W, int n_t, const TorusGrid& grid,
                                    const FrequencyLattice& lat, const AdmissibleTriple& triple,
                                    int dim_cap) {
    const std::size_t space = grid.points();
    if (W.size() != static_cast<std::size_t>(n_t) * space)
        throw ParamError("potential samples do not match the space-time grid");
    const int N = lat.N();

    // window indices: t_i in [-1/(2N), 1/(2N)] mod 1
    std::vector<int> win;
    for (int i = 0; i < n_t; ++i) {
        double t = static_cast<double>(i) / n_t;
        double dist = std::min(t, 1.0 - t);
        if (dist <= 0.5 / N + 1e-12) win.push_back(i);
    }
    const std::size_t dim = win.size() * space;
    if (dim > static_cast<std::size_t>(dim_cap))
        throw SizeError("dense space-time dimension " + std::to_string(dim) +
                        " exceeds the cap " + std::to_string(dim_cap));

    // 1-D kernel table over (time diff, per-axis space diff)
    std::vector<std::vector<cd>> k1(static_cast<std::size_t>(n_t),
                                    std::vector<cd>(static_cast<std::size_t>(grid.M)));
    for (int di = 0; di < n_t; ++di)
        for (int dm = 0; dm < grid.M; ++dm)
            k1[static_cast<std::size_t>(di)][static_cast<std::size_t>(dm)] = kernel_value_1d(
                static_cast<double>(di) / n_t, static_cast<double>(dm) / grid.M, N);

    // decompose flat space index into per-axis digits once
    const int d = grid.d;
    std::vector<std::vector<int>> digits(space, std::vector<int>(static_cast<std::size_t>(d)));
    for (std::size_t m = 0; m < space; ++m) {
        std::size_t rem = m;
        for (int c = d - 1; c >= 0; --c) {
            digits[m][static_cast<std::size_t>(c)] = static_cast<int>(rem % grid.M);
            rem /= grid.M;
        }
    }

    const double cell = (1.0 / n_t) * grid.cell_weight();
    Eigen::MatrixXcd A(dim, dim);
    for (std::size_t a = 0; a < win.size(); ++a) {
        for (std::size_t m = 0; m < space; ++m) {
            const std::size_t row = a * space + m;
            const cd wl = W[static_cast<std::size_t>(win[a]) * space + m];
            for (std::size_t b = 0; b < win.size(); ++b) {
                int di = win[a] - win[b];
                if (di < 0) di += n_t;
                const auto& krow = k1[static_cast<std::size_t>(di)];
                for (std::size_t n = 0; n < space; ++n) {
                    cd kv(1.0, 0.0);
                    for (int c = 0; c < d; ++c) {
                        int dm = digits[m][static_cast<std::size_t>(c)] -
                                 digits[n][static_cast<std::size_t>(c)];
                        if (dm < 0) dm += grid.M;
                        kv *= krow[static_cast<std::size_t>(dm)];
                    }
                    A(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(b * space + n)) =
                        cell * wl * kv * W[static_cast<std::size_t>(win[b]) * space + n];
                }
            }
        }
    }

    DualityCheck out;
    out.dim = static_cast<int>(dim);
    const double gamma = triple.gamma.value();
    out.alpha = 2.0 * dual(gamma);
    out.frobenius = A.norm();
    out.lhs = schatten_norm(A, out.alpha);

    // ||W||_{L^{2q'}_t L^{2r'}_x L^{2 gamma'}_y} over the full period
    const double tq = 2.0 * dual(triple.q_val());
    const double xr = 2.0 * dual(triple.r_val());
    const double yg = 2.0 * dual(gamma);
    std::vector<double> per_time(static_cast<std::size_t>(n_t));
    for (int i = 0; i < n_t; ++i)
        per_time[static_cast<std::size_t>(i)] = mixed_space_norm_samples(
            W.subspan(static_cast<std::size_t>(i) * space, space), grid.d, grid.k, grid.M, xr, yg);
    std::vector<double> tw(static_cast<std::size_t>(n_t), 1.0 / n_t);
    const double wnorm = time_q_norm(per_time, tw, tq);
    out.rhs = wnorm * wnorm;
    out.ratio = out.rhs == 0.0 ? 0.0 : out.lhs / out.rhs;
    return out;
}

}  // namespace toruslab
