#include <doctest.h>

#include <cmath>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/kernel.hpp"
#include "toruslab/littlewood_paley.hpp"
#include "toruslab/norms.hpp"
#include "toruslab/rng.hpp"
#include "toruslab/strichartz.hpp"

using namespace toruslab;

namespace {

Exponent E(std::int64_t n, std::int64_t d = 1) { return Exponent::from_value(Rational(n, d)); }

cd kernel_double_sum(double t, double x1, double x2, int N) {
    cd acc(0.0, 0.0);
    for (int a = -N; a <= N; ++a)
        for (int b = -N; b <= N; ++b)
            acc += phase_unit(x1 * a + x2 * b + t * (static_cast<double>(a) * a + static_cast<double>(b) * b));
    return acc;
}

}  // namespace

TEST_CASE("kernel closed forms") {
    SUBCASE("K(0, 0) counts the cube") {
        for (int N : {1, 3, 8}) {
            auto lat = build_lattice(2, 1, N);
            std::vector<double> z{0.0, 0.0};
            CHECK(std::abs(kernel_value(0.0, z, *lat) -
                           cd(static_cast<double>(lat->size()), 0.0)) < 1e-10);
        }
    }
    SUBCASE("d=1, N=1 is 1 + 2 e^{2 pi i t} cos(2 pi x)") {
        for (double t : {0.05, 0.21})
            for (double x : {0.0, 0.3, 0.77}) {
                cd want = 1.0 + 2.0 * phase_unit(t) * std::cos(2 * M_PI * x);
                CHECK(std::abs(kernel_value_1d(t, x, 1) - want) < 1e-13);
            }
        CHECK(std::abs(kernel_value_1d(0.0, 0.0, 1) - cd(3.0, 0.0)) < 1e-14);
    }
    SUBCASE("two-dimensional kernel factorizes (vs the double-sum oracle)") {
        auto lat = build_lattice(2, 1, 3);
        for (double t : {0.013, 0.08})
            for (double x1 : {0.1, 0.62})
                for (double x2 : {0.0, 0.39}) {
                    std::vector<double> z{x1, x2};
                    CHECK(std::abs(kernel_value(t, z, *lat) - kernel_double_sum(t, x1, x2, 3)) <
                          1e-12 * std::abs(kernel_double_sum(t, x1, x2, 3)) + 1e-12);
                }
    }
}

TEST_CASE("kernel decay probes") {
    SUBCASE("window and weighting") {
        auto probe = kernel_decay_probe(1, 4, 1e-4, 16, 64);
        CHECK(probe.times.front() == doctest::Approx(1e-4));
        CHECK(probe.times.back() == doctest::Approx(1.0 / 8.0));
        for (double t : probe.times) CHECK(t <= 1.0 / 4.0);  // inside [-1/N, 1/N]
        CHECK(probe.weighted_sup > 0.0);
    }
    SUBCASE("N = 1 stays finite and small") {
        auto probe = kernel_decay_probe(1, 1, 1e-4, 16, 64);
        CHECK(probe.weighted_sup <= 3.0 * std::sqrt(0.5) + 1e-12);
    }
    SUBCASE("t = 0 is outside the domain") {
        CHECK_THROWS_AS((void)kernel_decay_probe(1, 4, 0.0, 16, 64), ParamError);
        CHECK_THROWS_AS((void)kernel_decay_probe(1, 4, 1.0, 16, 64), ParamError);
    }
    SUBCASE("weighted sups stay level across a doubling") {
        std::vector<int> Ns{8, 16};
        auto scan = kernel_decay_scan(1, Ns, 1e-3, 32, 256);
        CHECK(scan.worst_consecutive_ratio < 1.3);
    }
}

TEST_CASE("fixed-time decay ratios") {
    const int N = 8;
    auto lat = build_lattice(2, 1, N);
    auto grid = TorusGrid::norm_grade_for(2, 1, N);

    SUBCASE("(2,2) never exceeds one") {
        for (int t = 0; t < 10; ++t) {
            auto f = random_field(lat, 300, static_cast<std::uint64_t>(t));
            CHECK(fixed_time_decay_ratio(f, 0.02, N, 2.0, 2.0, grid) <= 1.0 + 1e-10);
        }
    }
    SUBCASE("the all-ones comb reproduces the kernel sup at r = infinity") {
        auto lat1 = build_lattice(1, 1, N);
        auto grid1 = TorusGrid::norm_grade_for(1, 1, N);
        SpectralField comb(lat1, std::vector<cd>(lat1->size(), cd(1.0, 0.0)));
        const double t = 0.031;
        auto u = free_propagate(comb, t);
        auto s = u.samples(grid1);
        double sup_field = 0.0;
        for (const cd& v : *s) sup_field = std::max(sup_field, std::abs(v));
        double sup_kernel = 0.0;
        for (int m = 0; m < grid1.M; ++m)
            sup_kernel = std::max(sup_kernel,
                                  std::abs(kernel_value_1d(t, static_cast<double>(m) / grid1.M, N)));
        CHECK(sup_field == doctest::Approx(sup_kernel).epsilon(1e-11));
    }
    SUBCASE("window and exponent ranges enforced") {
        auto f = random_field(lat, 301);
        CHECK_THROWS_AS((void)fixed_time_decay_ratio(f, 0.0, N, 2.0, 2.0, grid), ParamError);
        CHECK_THROWS_AS((void)fixed_time_decay_ratio(f, 0.2, N, 2.0, 2.0, grid), ParamError);
        CHECK_THROWS_AS((void)fixed_time_decay_ratio(f, 0.02, N, 2.0, 3.0, grid), ParamError);
    }
    SUBCASE("bounded on the (inf, 2) axis with the right weight") {
        double worst = 0.0;
        for (int t = 0; t < 6; ++t) {
            auto f = random_field(lat, 302, static_cast<std::uint64_t>(t));
            const double inf = std::numeric_limits<double>::infinity();
            for (double tt : {1e-3, 1e-2, 0.5 / N})
                worst = std::max(worst, fixed_time_decay_ratio(f, tt, N, inf, 2.0, grid));
        }
        CHECK(worst < 10.0);
    }
}

TEST_CASE("full-period flow ratios") {
    auto triple = classify_triple(critical_q(E(4), E(2), 2, 1), E(4), E(2), 2, 1);
    REQUIRE(triple.q.value_rational() == Rational(8));

    SUBCASE("plane waves give the closed-form ratio") {
        auto lat = build_lattice(2, 1, 4);
        auto grid = TorusGrid::norm_grade_for(2, 1, 4);
        std::vector<int> xi{2, 1};
        auto pw = SpectralField::plane_wave(lat, xi);
        const double want = std::pow(1.0 + 5.0, -0.5 / 8.0);  // (1+|xi|^2)^{-1/(2q)}
        CHECK(strichartz_ratio(pw, triple, grid, 64) == doctest::Approx(want).epsilon(1e-11));
        CHECK(strichartz_ratio(pw, triple, grid, 64) <= 1.0);
    }
    SUBCASE("constants give exactly one") {
        auto lat = build_lattice(2, 1, 2);
        auto grid = TorusGrid::norm_grade_for(2, 1, 2);
        std::vector<int> origin{0, 0};
        auto one = SpectralField::plane_wave(lat, origin);
        CHECK(strichartz_ratio(one, triple, grid, 32) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("time refinement is converged below half a percent") {
        auto lat = build_lattice(2, 1, 4);
        auto grid = TorusGrid::norm_grade_for(2, 1, 4);
        auto f = random_field(lat, 404);
        const int n_auto = full_torus_time_samples(8.0, 2, 4);
        const double a = strichartz_ratio(f, triple, grid, n_auto);
        const double b = strichartz_ratio(f, triple, grid, 2 * n_auto + 1);
        CHECK(std::abs(a - b) / b < 0.005);
    }
    SUBCASE("inadmissible triples are rejected") {
        auto bad = classify_triple(Exponent::infinity(), E(4), E(4), 2, 1);  // 0 < beta = 1/2
        REQUIRE_FALSE(bad.satisfies_eq_ineq);
        auto lat = build_lattice(2, 1, 2);
        auto grid = TorusGrid::norm_grade_for(2, 1, 2);
        CHECK_THROWS_AS((void)strichartz_ratio(random_field(lat, 1), bad, grid),
                        ClassificationError);
    }
}

TEST_CASE("windowed flow ratios") {
    auto triple = classify_triple(critical_q(E(4), E(2), 2, 1), E(4), E(2), 2, 1);
    const int N = 8;
    auto lat = build_lattice(2, 1, N);
    auto grid = TorusGrid::norm_grade_for(2, 1, N);

    SUBCASE("plane waves inside the band") {
        std::vector<int> xi{1, -1};
        auto pw = SpectralField::plane_wave(lat, xi);
        auto out = localized_strichartz_ratio(pw, N, triple, grid);
        CHECK(out.local == doctest::Approx(std::pow(1.0 / N, 1.0 / 8.0)).epsilon(1e-9));
        CHECK(out.local <= 1.0);
    }
    SUBCASE("energy corner is Plancherel-exact") {
        auto ec = classify_triple(Exponent::infinity(), E(2), E(2), 2, 1);
        auto f = random_field(lat, 500);
        auto out = localized_strichartz_ratio(f, N, ec, grid);
        CHECK(out.local <= 1.0 + 1e-10);
        CHECK(out.global <= 1.0 + 1e-10);
    }
    SUBCASE("global variant bounded over a doubling sweep") {
        std::vector<double> per_n;
        for (int n : {4, 8, 16}) {
            auto l = build_lattice(2, 1, n);
            auto g = TorusGrid::norm_grade_for(2, 1, n);
            double worst = 0.0;
            for (int t = 0; t < 5; ++t)
                worst = std::max(worst, localized_strichartz_ratio(
                                            random_field(l, 501, static_cast<std::uint64_t>(t)),
                                            n, triple, g)
                                            .global);
            per_n.push_back(worst);
        }
        CHECK(per_n[1] / per_n[0] < 1.3);
        CHECK(per_n[2] / per_n[1] < 1.3);
    }
}

TEST_CASE("extension and restriction operators") {
    const int N = 3;
    auto lat = build_lattice(2, 1, N);
    auto grid = TorusGrid::norm_grade_for(2, 1, N);
    auto rule = default_restriction_rule(2, N);

    SUBCASE("extension of a delta is the plane-wave trajectory") {
        std::vector<int> xi{2, -1};
        auto a = SpectralField::plane_wave(lat, xi);
        auto tr = extension_apply(a, TimeRule::periodic_uniform(8));
        for (std::size_t i = 0; i < tr.size(); ++i) {
            cd want = phase_unit(tr.times[i] * 5.0);
            CHECK(std::abs(tr.fields[i].coeffs()[lat->index_of(xi)] - want) < 1e-13);
        }
    }
    SUBCASE("adjoint identity under the shared quadrature") {
        auto a = random_field(lat, 600);
        Trajectory F;
        F.times = rule.times;
        F.weights = rule.weights;
        for (std::size_t i = 0; i < rule.times.size(); ++i)
            F.fields.push_back(random_field(lat, 601, static_cast<std::uint64_t>(i)));
        auto Ea = extension_apply(a, rule);
        cd lhs(0.0, 0.0);
        for (std::size_t i = 0; i < F.size(); ++i) {
            cd dot(0.0, 0.0);
            auto sa = Ea.fields[i].samples(grid);
            auto sf = F.fields[i].samples(grid);
            for (std::size_t m = 0; m < sa->size(); ++m) dot += (*sa)[m] * std::conj((*sf)[m]);
            lhs += F.weights[i] * dot * grid.cell_weight();
        }
        auto EstarF = restriction_apply(F, *lat);
        cd rhs(0.0, 0.0);
        for (std::size_t i = 0; i < lat->size(); ++i)
            rhs += a.coeffs()[i] * std::conj(EstarF[i]);
        CHECK(std::abs(lhs - rhs) < 1e-8 * std::abs(lhs));
    }
    SUBCASE("composition is convolution by the kernel") {
        const int n_t = static_cast<int>(rule.times.size());
        Trajectory F;
        F.times = rule.times;
        F.weights = rule.weights;
        for (int i = 0; i < n_t; ++i)
            F.fields.push_back(random_field(lat, 602, static_cast<std::uint64_t>(i)));
        auto comp_coeffs = restriction_apply(F, *lat);
        SpectralField comp(lat, comp_coeffs);
        // check E(E* F) at a few space-time points against the direct sum
        TorusGrid small(2, 1, 8);
        auto cs = synthesize(*lat, comp_coeffs, small);
        for (int probe_t : {0, n_t / 3}) {
            const double t = rule.times[static_cast<std::size_t>(probe_t)];
            std::vector<cd> comp_t(lat->size());
            for (std::size_t i = 0; i < lat->size(); ++i)
                comp_t[i] = comp_coeffs[i] * phase_unit(t * static_cast<double>(lat->nsq(i)));
            auto lhs_samples = synthesize(*lat, comp_t, small);
            // direct convolution over the same quadrature
            for (int mz = 0; mz < 3; ++mz) {
                std::vector<double> z{static_cast<double>(mz) / small.M,
                                      static_cast<double>(2 * mz) / small.M};
                cd direct(0.0, 0.0);
                for (std::size_t j = 0; j < F.size(); ++j) {
                    auto sf = F.fields[j].samples(small);
                    for (int n1 = 0; n1 < small.M; ++n1)
                        for (int n2 = 0; n2 < small.M; ++n2) {
                            std::vector<double> dz{z[0] - static_cast<double>(n1) / small.M,
                                                   z[1] - static_cast<double>(n2) / small.M};
                            direct += F.weights[j] * small.cell_weight() *
                                      kernel_value(t - F.times[j], dz, *lat) *
                                      (*sf)[static_cast<std::size_t>(n1 * small.M + n2)];
                        }
                }
                const cd lhs = lhs_samples[static_cast<std::size_t>((mz * small.M) + 2 * mz)];
                CHECK(std::abs(lhs - direct) < 1e-8 * (std::abs(direct) + 1.0));
            }
        }
    }
    SUBCASE("restriction then extension is the band identity") {
        auto a = random_field(lat, 603);
        auto Ea = extension_apply(a, rule);
        auto back = restriction_apply(Ea, *lat);
        double dev = 0.0;
        for (std::size_t i = 0; i < lat->size(); ++i)
            dev = std::max(dev, std::abs(back[i] - a.coeffs()[i]));
        CHECK(dev < 1e-8);
    }
}

TEST_CASE("orthonormal ensembles") {
    auto lat = build_lattice(1, 1, 4);

    SUBCASE("complete plane-wave basis has exact identity Gram") {
        auto ens = make_ons(OnsKind::plane_waves, static_cast<int>(lat->size()), lat, 1);
        CHECK(gram_deviation(ens) == 0.0);
    }
    SUBCASE("random frames are orthonormal and reproducible") {
        auto a = make_ons(OnsKind::random, 4, lat, 99);
        auto b = make_ons(OnsKind::random, 4, lat, 99);
        CHECK(gram_deviation(a) < 1e-10);
        CHECK((a.frames - b.frames).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("rank bounds enforced") {
        CHECK_THROWS_AS((void)make_ons(OnsKind::random, 100, lat, 1), ParamError);
        CHECK_THROWS_AS((void)make_ons(OnsKind::random, 0, lat, 1), ParamError);
    }
}

TEST_CASE("evolved densities") {
    auto lat = build_lattice(1, 1, 4);
    TorusGrid grid = TorusGrid::dealiased_for(1, 1, 4);

    SUBCASE("complete basis density is flat") {
        auto ens = make_ons(OnsKind::plane_waves, static_cast<int>(lat->size()), lat, 1);
        auto rho = ons_density_samples(ens, 0.4321, grid);
        for (double v : rho)
            CHECK(v == doctest::Approx(static_cast<double>(lat->size())).epsilon(1e-10));
    }
    SUBCASE("single frame gives |u|^2 and the trace identity") {
        auto ens = make_ons(OnsKind::random, 3, lat, 7);
        ens.weights = {0.5, 1.0, 0.25};
        auto rho = ons_density_samples(ens, 0.11, grid);
        double mass = 0.0;
        for (double v : rho) {
            CHECK(v >= -1e-14);
            mass += v;
        }
        mass *= grid.cell_weight();
        CHECK(mass == doctest::Approx(1.75).epsilon(1e-10));
    }
    SUBCASE("density is invariant under a unitary frame rotation") {
        auto ens = make_ons(OnsKind::random, 3, lat, 8);
        auto eng = make_engine(555);
        auto gc = gaussian_coeffs(9, eng);
        Eigen::MatrixXcd G(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) G(i, j) = gc[static_cast<std::size_t>(3 * i + j)];
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(G);
        Eigen::MatrixXcd U = qr.householderQ();
        auto rotated = ens;
        rotated.frames = ens.frames * U;
        auto r1 = ons_density_samples(ens, 0.27, grid);
        auto r2 = ons_density_samples(rotated, 0.27, grid);
        for (std::size_t m = 0; m < r1.size(); ++m) CHECK(std::abs(r1[m] - r2[m]) < 1e-10);
    }
    SUBCASE("analyzed density matches the sample path") {
        auto ens = make_ons(OnsKind::random, 2, lat, 9);
        auto rho_field = ons_density(ens, 0.2, grid);
        auto s = rho_field.samples(grid);
        auto rho = ons_density_samples(ens, 0.2, grid);
        for (std::size_t m = 0; m < rho.size(); ++m)
            CHECK(std::abs((*s)[m] - cd(rho[m], 0.0)) < 1e-10);
    }
}

TEST_CASE("orthonormal family flow ratios") {
    // d = 1: gamma = r = rt = 4, sharp q = 8/3, alpha' = 8/5
    auto r = E(4);
    auto q = sharp_q(r, r, 1, 1);
    REQUIRE(q.has_value());
    auto triple = classify_triple(*q, r, r, 1, 1);
    REQUIRE(triple.sharp_admissible);
    REQUIRE(triple.alpha_prime == Rational(8, 5));
    const int N = 4;
    auto lat = build_lattice(1, 1, N);
    auto grid = TorusGrid::norm_grade_for(1, 1, N);

    SUBCASE("rank one reduces to the squared single-function ratio") {
        auto ens = make_ons(OnsKind::random, 1, lat, 21);
        const int n_t = full_torus_time_samples(2.0 * triple.q_val(), 1, N);
        const double lhs = ons_strichartz_ratio(ens, triple, 1.0, grid, n_t);
        auto rule = TimeRule::periodic_uniform(n_t);
        const double single = free_spacetime_norm(ens.frame_field(0), 2.0 * triple.q_val(),
                                                  2.0 * triple.r_val(), 2.0 * triple.rt_val(),
                                                  rule, grid);
        const double want = single * single / std::pow(static_cast<double>(N), 1.0 / triple.q_val());
        CHECK(lhs == doctest::Approx(want).epsilon(1e-10));
    }
    SUBCASE("complete basis matches the closed form") {
        auto ens = make_ons(OnsKind::plane_waves, static_cast<int>(lat->size()), lat, 1);
        const double ap = triple.alpha_prime.value();
        const double lhs = ons_strichartz_ratio(ens, triple, ap, grid);
        const double P = static_cast<double>(lat->size());
        const double want =
            P / (std::pow(static_cast<double>(N), 1.0 / triple.q_val()) * std::pow(P, 1.0 / ap));
        CHECK(lhs == doctest::Approx(want).epsilon(1e-10));
    }
    SUBCASE("inadmissible parameters are rejected") {
        auto ens = make_ons(OnsKind::random, 2, lat, 22);
        auto not_sharp = classify_triple(E(4), r, r, 1, 1);
        CHECK_THROWS_AS((void)ons_strichartz_ratio(ens, not_sharp, 1.0, grid),
                        ClassificationError);
        CHECK_THROWS_AS((void)ons_strichartz_ratio(ens, triple, 1.9, grid),
                        ClassificationError);
    }
}

TEST_CASE("windowed kernel sandwich (duality route)") {
    const int d = 1, k = 1, N = 2;
    auto lat = build_lattice(d, k, N);
    TorusGrid grid(d, k, 16);
    const int n_t = 64;
    auto r = E(2);
    auto q = sharp_q(r, r, d, k);
    REQUIRE(q.has_value());
    auto triple = classify_triple(*q, r, r, d, k);

    SUBCASE("zero potential gives zero on both sides") {
        std::vector<cd> W(static_cast<std::size_t>(n_t) * grid.points(), cd(0.0, 0.0));
        auto out = duality_schatten_check(W, n_t, grid, *lat, triple);
        CHECK(out.lhs == 0.0);
        CHECK(out.rhs == 0.0);
        CHECK(out.ratio == 0.0);
    }
    SUBCASE("unit potential: Hilbert-Schmidt norm equals the kernel Frobenius") {
        auto hs_triple =
            classify_triple(E(2), Exponent::infinity(), Exponent::infinity(), d, k);
        std::vector<cd> W(static_cast<std::size_t>(n_t) * grid.points(), cd(1.0, 0.0));
        auto out = duality_schatten_check(W, n_t, grid, *lat, hs_triple);
        CHECK(out.alpha == doctest::Approx(2.0));
        CHECK(std::abs(out.lhs - out.frobenius) < 1e-8 * out.frobenius);
    }
    SUBCASE("random potentials give finite positive ratios") {
        auto eng = make_engine(4242);
        auto W = gaussian_coeffs(static_cast<std::size_t>(n_t) * grid.points(), eng);
        auto out = duality_schatten_check(W, n_t, grid, *lat, triple);
        CHECK(out.lhs > 0.0);
        CHECK(out.rhs > 0.0);
        CHECK(std::isfinite(out.ratio));
        CHECK(out.alpha == doctest::Approx(4.0));  // gamma = 2 -> 2 gamma' = 4
    }
    SUBCASE("dimension cap raises a size error") {
        std::vector<cd> W(static_cast<std::size_t>(n_t) * grid.points(), cd(1.0, 0.0));
        CHECK_THROWS_AS((void)duality_schatten_check(W, n_t, grid, *lat, triple, 8), SizeError);
    }
}

TEST_CASE("refinement stability at non-even exponents") {
    // (q, r, rt) = (20/3, 5, 2): nothing is a trig polynomial in time here,
    // so the quadrature must converge rather than terminate exactly
    auto triple = classify_triple(critical_q(E(5), E(2), 2, 1), E(5), E(2), 2, 1);
    REQUIRE(triple.q.value_rational() == Rational(20, 3));
    auto lat = build_lattice(2, 1, 4);
    auto grid = TorusGrid::norm_grade_for(2, 1, 4);
    auto f = random_field(lat, 7117);
    const int n_auto = full_torus_time_samples(triple.q_val(), 2, 4);
    const double a = strichartz_ratio(f, triple, grid, n_auto);
    const double b = strichartz_ratio(f, triple, grid, 2 * n_auto + 1);
    CHECK(std::abs(a - b) / b < 0.005);
}

TEST_CASE("ensemble ratio is stable under time refinement") {
    auto r = E(4);
    auto q = sharp_q(r, r, 1, 1);
    auto triple = classify_triple(*q, r, r, 1, 1);
    const int N = 8;
    auto lat = build_lattice(1, 1, N);
    auto grid = TorusGrid::norm_grade_for(1, 1, N);
    auto ens = make_ons(OnsKind::random, 4, lat, 31337);
    const double ap = triple.alpha_prime.value();
    const int n_auto = full_torus_time_samples(2.0 * triple.q_val(), 1, N);
    const double a = ons_strichartz_ratio(ens, triple, ap, grid, n_auto);
    const double b = ons_strichartz_ratio(ens, triple, ap, grid, 2 * n_auto + 1);
    CHECK(std::abs(a - b) / b < 0.005);
}
