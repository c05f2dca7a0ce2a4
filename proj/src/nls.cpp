#include "toruslab/nls.hpp"

#include <algorithm>
#include <cmath>

#include "toruslab/errors.hpp"
#include "toruslab/norms.hpp"

namespace toruslab {

namespace {

// pointwise F_p on sample values
void apply_fp(std::vector<cd>& samples, const NonlinearitySpec& spec) {
    const double pm1 = spec.p - 1.0;
    switch (spec.kind) {
        case NonlinearitySpec::Kind::gauge:
            for (cd& v : samples) v *= spec.sign * std::pow(std::abs(v), pm1);
            break;
        case NonlinearitySpec::Kind::modulus:
            for (cd& v : samples) v = spec.sign * std::pow(std::abs(v), spec.p);
            break;
        case NonlinearitySpec::Kind::hartree:
            throw ParamError("hartree kind has no pointwise F_p; use nonlinear_term");
    }
}

void check_product_grid(const FrequencyLattice& lat, const TorusGrid& grid) {
    if (grid.M < 2 * (2 * lat.N() + 1))
        throw AliasingError("grid too coarse for pointwise products of band-" +
                            std::to_string(lat.N()) + " fields");
}

// w-hat value at u's lattice point i, treating w as band-limited (0 outside)
cd what_at(const FrequencyLattice& ulat, std::size_t i, const SpectralField& w) {
    const auto& wlat = w.lattice();
    auto xi = ulat.point(i);
    std::vector<int> pt(xi.begin(), xi.end());
    for (int c = 0; c < ulat.d(); ++c)
        if (std::abs(pt[static_cast<std::size_t>(c)]) > wlat.N()) return {0.0, 0.0};
    return w.coeffs()[wlat.index_of(pt)];
}

}  // namespace

void NonlinearitySpec::validate() const {
    if (!(p > 1.0)) throw ParamError("growth exponent p must exceed 1");
    if (sign != 1.0 && sign != -1.0) throw ParamError("sign must be +1 or -1");
}

void PotentialSpec::validate() const {
    const auto& lat = w.lattice();
    std::vector<int> neg(static_cast<std::size_t>(lat.d()));
    double dev = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        auto xi = lat.point(i);
        for (int c = 0; c < lat.d(); ++c) neg[static_cast<std::size_t>(c)] = -xi[c];
        const cd a = w.coeffs()[i];
        const cd b = w.coeffs()[lat.index_of(neg)];
        dev = std::max(dev, std::abs(a - std::conj(b)));
    }
    if (dev > 1e-10)
        throw ParamError("potential is not real: conjugate symmetry deviation " +
                         std::to_string(dev));
}

SpectralField riesz_potential(LatticePtr lattice, double a) {
    const auto& lat = *lattice;
    const double expo = -(static_cast<double>(lat.d()) - a);
    std::vector<cd> c(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        // mean-free truncation; the xi = 0 coefficient is a free normalization
        c[i] = lat.nsq(i) == 0 ? 0.0 : std::pow(static_cast<double>(lat.nsq(i)), 0.5 * expo);
    }
    return SpectralField(std::move(lattice), std::move(c));
}

SpectralField delta_potential(LatticePtr lattice) {
    std::vector<cd> c(lattice->size(), cd(1.0, 0.0));
    return SpectralField(std::move(lattice), std::move(c));
}

SpectralField mean_potential(LatticePtr lattice, double value) {
    std::vector<cd> c(lattice->size(), cd(0.0, 0.0));
    std::vector<int> origin(static_cast<std::size_t>(lattice->d()), 0);
    c[lattice->index_of(origin)] = value;
    return SpectralField(std::move(lattice), std::move(c));
}

void SolverConfig::validate() const {
    if (n_t < 16) throw ParamError("need at least 16 time subintervals");
    if (!(tol > 0.0)) throw ParamError("tolerance must be positive");
    if (!(T > 0.0)) throw ParamError("final time must be positive");
    if (metric.empty()) throw ParamError("need at least one metric triple");
    if (max_picard < 1) throw ParamError("need at least one iteration");
}

SpectralField eval_nonlinearity(const SpectralField& u, const NonlinearitySpec& spec,
                                const TorusGrid& grid) {
    spec.validate();
    check_product_grid(u.lattice(), grid);
    auto samples = synthesize(u.lattice(), u.coeffs(), grid);
    apply_fp(samples, spec);
    return analyze_field(u.lattice_ptr(), samples, grid);
}

SpectralField hartree_term(const SpectralField& u, const SpectralField& w,
                           const NonlinearitySpec& spec, const TorusGrid& grid) {
    if (w.lattice().d() != u.lattice().d() || w.lattice().k() != u.lattice().k())
        throw ParamError("band mismatch: potential and field live on different splits");
    SpectralField fp = eval_nonlinearity(u, spec, grid);
    std::vector<cd> out(fp.coeffs());
    for (std::size_t i = 0; i < u.lattice().size(); ++i)
        out[i] *= what_at(u.lattice(), i, w);
    return SpectralField(u.lattice_ptr(), std::move(out));
}

SpectralField nonlinear_term(const SpectralField& u, const SpectralField& w,
                             const NonlinearitySpec& spec, const TorusGrid& grid) {
    spec.validate();
    if (spec.kind != NonlinearitySpec::Kind::hartree) return hartree_term(u, w, spec, grid);

    check_product_grid(u.lattice(), grid);
    const auto& lat = u.lattice();
    // V = w * |u|^{p-1}, then V u, truncated back to the band
    auto us = synthesize(lat, u.coeffs(), grid);
    std::vector<cd> pw(us.size());
    for (std::size_t m = 0; m < us.size(); ++m)
        pw[m] = std::pow(std::abs(us[m]), spec.p - 1.0);
    auto pw_hat = analyze(lat, pw, grid);
    for (std::size_t i = 0; i < lat.size(); ++i) pw_hat[i] *= what_at(lat, i, w);
    auto V = synthesize(lat, pw_hat, grid);
    for (std::size_t m = 0; m < us.size(); ++m) us[m] *= spec.sign * V[m];
    return analyze_field(u.lattice_ptr(), us, grid);
}

SpectralField duhamel_apply(const SpectralField& f, const Trajectory& G, double t) {
    G.validate();
    if (t < G.times.front() - 1e-12 || t > G.times.back() + 1e-12)
        throw ParamError("t beyond the trajectory span");
    const auto& lat = f.lattice();
    if (!lat.same_shape(G.fields.front().lattice()))
        throw ParamError("band mismatch between data and source");

    // locate the node for t
    std::size_t idx = 0;
    for (std::size_t i = 0; i < G.times.size(); ++i)
        if (std::abs(G.times[i] - t) < 1e-12) { idx = i; break; }
    if (std::abs(G.times[idx] - t) >= 1e-12)
        throw ParamError("t must coincide with a trajectory node");

    std::vector<cd> out(lat.size());
    for (std::size_t j = 0; j < lat.size(); ++j)
        out[j] = f.coeffs()[j] * phase_unit(t * static_cast<double>(lat.nsq(j)));
    if (idx > 0) {
        for (std::size_t s = 0; s <= idx; ++s) {
            // trapezoid weight on [t_0, t_idx]
            double wgt;
            if (s == 0)
                wgt = 0.5 * (G.times[1] - G.times[0]);
            else if (s == idx)
                wgt = 0.5 * (G.times[idx] - G.times[idx - 1]);
            else
                wgt = 0.5 * (G.times[s + 1] - G.times[s - 1]);
            const auto& g = G.fields[s].coeffs();
            const double dt = t - G.times[s];
            for (std::size_t j = 0; j < lat.size(); ++j)
                out[j] += cd(0.0, -1.0) * wgt * g[j] *
                          phase_unit(dt * static_cast<double>(lat.nsq(j)));
        }
    }
    return SpectralField(f.lattice_ptr(), std::move(out));
}

namespace {

// distance sup over the configured triples of ||u - v||_{L^q L^r L^rt}
double metric_distance(const std::vector<std::vector<cd>>& a,
                       const std::vector<std::vector<cd>>& b,
                       const FrequencyLattice& lat, const SolverConfig& cfg,
                       const std::vector<double>& weights) {
    std::vector<cd> diff(lat.size());
    std::vector<cd> buf;
    std::vector<double> vals(a.size());
    double best = 0.0;
    for (const auto& triple : cfg.metric) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < lat.size(); ++j) diff[j] = a[i][j] - b[i][j];
            synthesize_into(lat, diff, cfg.grid, buf);
            vals[i] = mixed_space_norm_samples(buf, cfg.grid.d, cfg.grid.k, cfg.grid.M,
                                               triple.r_val(), triple.rt_val());
        }
        best = std::max(best, time_q_norm(vals, weights, triple.q_val()));
    }
    return best;
}

struct PicardLevel {
    std::vector<std::vector<cd>> u;  // coefficients per node
    PicardHistory history;
};

PicardLevel picard_at_resolution(const SpectralField& f, const PotentialSpec& w,
                                 const NonlinearitySpec& spec, const SolverConfig& cfg,
                                 int n_t, const std::vector<std::vector<cd>>* warm) {
    const auto& lat = f.lattice();
    const std::size_t P = lat.size();
    const double h = cfg.T / n_t;
    const std::size_t nodes = static_cast<std::size_t>(n_t) + 1;

    // one-step propagator phases and free evolution of f along the nodes
    std::vector<cd> step(P);
    for (std::size_t j = 0; j < P; ++j) step[j] = phase_unit(h * static_cast<double>(lat.nsq(j)));
    std::vector<std::vector<cd>> free_part(nodes, std::vector<cd>(P));
    free_part[0] = f.coeffs();
    for (std::size_t i = 1; i < nodes; ++i)
        for (std::size_t j = 0; j < P; ++j) free_part[i][j] = free_part[i - 1][j] * step[j];

    std::vector<double> tw(nodes, h);
    tw.front() = 0.5 * h;
    tw.back() = 0.5 * h;

    PicardLevel lvl;
    lvl.u = warm ? *warm : free_part;
    lvl.history.n_t = n_t;

    std::vector<std::vector<cd>> G(nodes, std::vector<cd>(P));
    std::vector<std::vector<cd>> next(nodes, std::vector<cd>(P));
    int stall = 0;
    for (int it = 1; it <= cfg.max_picard; ++it) {
        for (std::size_t i = 0; i < nodes; ++i) {
            SpectralField ui(f.lattice_ptr(), lvl.u[i]);
            G[i] = nonlinear_term(ui, w.w, spec, cfg.grid).coeffs();
        }
        // J_i = U(h)[J_{i-1} + (h/2) G_{i-1}] + (h/2) G_i  (cumulative trapezoid)
        std::vector<cd> J(P, cd(0.0, 0.0));
        next[0] = free_part[0];
        for (std::size_t i = 1; i < nodes; ++i) {
            for (std::size_t j = 0; j < P; ++j)
                J[j] = step[j] * (J[j] + 0.5 * h * G[i - 1][j]) + 0.5 * h * G[i][j];
            for (std::size_t j = 0; j < P; ++j)
                next[i][j] = free_part[i][j] + cd(0.0, -1.0) * J[j];
        }
        const double dist = metric_distance(next, lvl.u, lat, cfg, tw);
        lvl.u.swap(next);
        if (!lvl.history.distances.empty()) {
            const double prev = lvl.history.distances.back();
            lvl.history.contraction_ratio = prev > 0.0 ? dist / prev : 0.0;
            stall = (prev > 0.0 && dist >= prev) ? stall + 1 : 0;
        }
        lvl.history.distances.push_back(dist);
        lvl.history.iterations = it;
        if (dist < cfg.tol) {
            lvl.history.converged = true;
            break;
        }
        if (stall >= 3)
            throw DivergenceError(
                "iteration stopped contracting (ratio " +
                    std::to_string(lvl.history.contraction_ratio) +
                    "); shrink T or the data",
                lvl.history.contraction_ratio);
    }
    return lvl;
}

}  // namespace

PicardResult picard_solve(const SpectralField& f, const PotentialSpec& w,
                          const NonlinearitySpec& spec, const SolverConfig& config) {
    config.validate();
    spec.validate();
    w.validate();

    int n_t = config.n_t;
    PicardLevel lvl = picard_at_resolution(f, w, spec, config, n_t, nullptr);
    if (config.refine) {
        for (int rlevel = 0; rlevel < config.max_refinements; ++rlevel) {
            const int n2 = 2 * n_t;
            // warm start: even nodes copied, odd nodes free-propagated half steps
            const auto& lat = f.lattice();
            const double h2 = config.T / n2;
            std::vector<cd> half(lat.size());
            for (std::size_t j = 0; j < lat.size(); ++j)
                half[j] = phase_unit(h2 * static_cast<double>(lat.nsq(j)));
            std::vector<std::vector<cd>> warm(static_cast<std::size_t>(n2) + 1,
                                              std::vector<cd>(lat.size()));
            for (int i = 0; i <= n_t; ++i) warm[static_cast<std::size_t>(2 * i)] = lvl.u[static_cast<std::size_t>(i)];
            for (int i = 0; i < n_t; ++i)
                for (std::size_t j = 0; j < lat.size(); ++j)
                    warm[static_cast<std::size_t>(2 * i + 1)][j] =
                        lvl.u[static_cast<std::size_t>(i)][j] * half[j];

            PicardLevel fine = picard_at_resolution(f, w, spec, config, n2, &warm);
            // movement of the fixed point measured on the shared coarse nodes
            std::vector<std::vector<cd>> fine_on_coarse(lvl.u.size());
            for (std::size_t i = 0; i < lvl.u.size(); ++i) fine_on_coarse[i] = fine.u[2 * i];
            std::vector<double> tw(lvl.u.size(), config.T / n_t);
            tw.front() *= 0.5;
            tw.back() *= 0.5;
            const double move =
                metric_distance(fine_on_coarse, lvl.u, f.lattice(), config, tw);
            fine.history.refine_move = move;
            n_t = n2;
            lvl = std::move(fine);
            if (move < 0.25 * config.tol) break;
        }
    }

    PicardResult res;
    res.history = lvl.history;
    const double h = config.T / n_t;
    res.u.times.resize(lvl.u.size());
    res.u.weights.assign(lvl.u.size(), h);
    res.u.weights.front() = 0.5 * h;
    res.u.weights.back() = 0.5 * h;
    res.u.fields.reserve(lvl.u.size());
    for (std::size_t i = 0; i < lvl.u.size(); ++i) {
        res.u.times[i] = h * static_cast<double>(i);
        res.u.fields.emplace_back(f.lattice_ptr(), std::move(lvl.u[i]));
    }
    return res;
}

namespace {

// one nonlinear half/full substep of length tau, band truncation after
void nonlinear_substep(std::vector<cd>& coeffs, const SpectralField& wpot,
                       const NonlinearitySpec& spec, const TorusGrid& grid,
                       LatticePtr lat, double tau) {
    SpectralField u(lat, coeffs);
    if (spec.kind == NonlinearitySpec::Kind::hartree) {
        // exact pointwise potential phase: V real, |u| invariant
        const auto& l = *lat;
        auto us = synthesize(l, u.coeffs(), grid);
        std::vector<cd> pw(us.size());
        for (std::size_t m = 0; m < us.size(); ++m)
            pw[m] = std::pow(std::abs(us[m]), spec.p - 1.0);
        auto pw_hat = analyze(l, pw, grid);
        for (std::size_t i = 0; i < l.size(); ++i) pw_hat[i] *= what_at(l, i, wpot);
        auto V = synthesize(l, pw_hat, grid);
        for (std::size_t m = 0; m < us.size(); ++m) {
            const double theta = -tau * spec.sign * V[m].real();
            us[m] *= cd(std::cos(theta), std::sin(theta));
        }
        coeffs = analyze(l, us, grid);
        return;
    }
    // explicit midpoint on i du/dt = G(u)
    SpectralField g1 = nonlinear_term(u, wpot, spec, grid);
    std::vector<cd> mid(coeffs.size());
    for (std::size_t j = 0; j < coeffs.size(); ++j)
        mid[j] = coeffs[j] + cd(0.0, -0.5 * tau) * g1.coeffs()[j];
    SpectralField g2 = nonlinear_term(SpectralField(lat, std::move(mid)), wpot, spec, grid);
    for (std::size_t j = 0; j < coeffs.size(); ++j)
        coeffs[j] += cd(0.0, -tau) * g2.coeffs()[j];
}

}  // namespace

Trajectory splitstep_solve(const SpectralField& f, const PotentialSpec& w,
                           const NonlinearitySpec& spec, const SolverConfig& config) {
    config.validate();
    spec.validate();
    w.validate();
    const auto& lat = f.lattice();
    const double dt = config.T / config.n_t;
    std::vector<cd> step(lat.size());
    for (std::size_t j = 0; j < lat.size(); ++j)
        step[j] = phase_unit(dt * static_cast<double>(lat.nsq(j)));

    // detect the zero potential so the free case is bit-exact
    bool w_zero = true;
    for (const cd& c : w.w.coeffs()) w_zero = w_zero && c == cd(0.0, 0.0);

    Trajectory out;
    out.times.resize(static_cast<std::size_t>(config.n_t) + 1);
    out.weights.assign(out.times.size(), dt);
    out.weights.front() = 0.5 * dt;
    out.weights.back() = 0.5 * dt;
    out.fields.reserve(out.times.size());

    std::vector<cd> u = f.coeffs();
    out.times[0] = 0.0;
    out.fields.push_back(f);
    for (int i = 1; i <= config.n_t; ++i) {
        if (!w_zero) nonlinear_substep(u, w.w, spec, config.grid, f.lattice_ptr(), 0.5 * dt);
        for (std::size_t j = 0; j < lat.size(); ++j) u[j] *= step[j];
        if (!w_zero) nonlinear_substep(u, w.w, spec, config.grid, f.lattice_ptr(), 0.5 * dt);
        out.times[static_cast<std::size_t>(i)] = dt * i;
        out.fields.emplace_back(f.lattice_ptr(), u);
    }
    return out;
}

AdmissibleTriple default_wellposedness_triple(int d, const Rational& p, const Rational& s) {
    if (d < 3) throw ParamError("contraction triple construction needs d >= 3");
    const Rational one(1), two(2), four(4);
    const Rational pm1 = p - one;
    Rational lo = (one - s) * pm1 / two;
    Rational hi_a = Rational(d - 2) / four * (one + four / Rational(d - 2) - p);
    Rational hi_b = pm1 / two;
    Rational hi = hi_a < hi_b ? hi_a : hi_b;
    if (!(lo < hi)) {
        // window closes as s -> 0; nudge the regularity used for the metric
        lo = hi * Rational(1, 2);
    }
    const Rational e0 = (lo + hi) / two;
    const Rational pp1 = p + one;
    Rational inv_r = one / pp1;
    Rational inv_rt = Rational(1, 2) - e0 / pp1;
    Rational inv_q = Rational(d - 2) / four - Rational(d - 2) / (two * pp1) + e0 / pp1;
    return classify_triple(Exponent::from_inv(inv_q), Exponent::from_inv(inv_r),
                           Exponent::from_inv(inv_rt), d, 2);
}

NonlinearProbe nonlinear_estimate_probe(const Trajectory& u, const PotentialSpec& w,
                                        const NonlinearitySpec& spec, double s,
                                        const AdmissibleTriple& triple, const TorusGrid& grid) {
    u.validate();
    w.validate();
    if (!(s >= 0.0) || s >= 1.0) throw ParamError("regularity s must lie in [0, 1)");
    if (!triple.in_refined_set || triple.k != 2)
        throw ParamError("probe requires a scaling-critical triple with k = 2");

    NonlinearProbe out;
    const double q = triple.q_val(), r = triple.r_val(), rt = triple.rt_val();
    const double qd = q / (q - 1.0), rd = r / (r - 1.0), rtd = rt / (rt - 1.0);
    const double two_over_q = 2.0 / q;

    std::vector<double> num_vals(u.size()), den_vals(u.size());
    bool all_zero = true;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto& ui = u.fields[i];
        for (const cd& c : ui.coeffs()) all_zero = all_zero && c == cd(0.0, 0.0);
        SpectralField G = nonlinear_term(ui, w.w, spec, grid);
        SpectralField weighted =
            apply_multiplier(apply_multiplier(G, bessel_multiplier(two_over_q)),
                             bessel_y_multiplier(s));
        num_vals[i] = mixed_space_norm(weighted, grid, rd, rtd);
        den_vals[i] = mixed_sobolev_y_norm(ui, s, r, rt, grid);
    }
    if (all_zero) {
        out.degenerate = true;
        return out;
    }
    out.numerator = time_q_norm(num_vals, u.weights, qd);
    SpectralField wg = apply_multiplier(w.w, bessel_multiplier(two_over_q));
    const double w_norm = mixed_space_norm(wg, grid, 1.0, 1.0);
    const double u_norm = time_q_norm(den_vals, u.weights, q);
    out.denominator = w_norm * std::pow(u_norm, spec.p);
    if (out.denominator == 0.0) {
        out.degenerate = true;
        return out;
    }
    out.ratio = out.numerator / out.denominator;
    return out;
}

}  // namespace toruslab
