#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/norms.hpp"
#include "toruslab/ons.hpp"
#include "toruslab/rng.hpp"
#include "toruslab/schatten.hpp"

using namespace toruslab;

namespace {

// independent nested Riemann sum with plain std::pow everywhere
double mixed_norm_oracle(const std::vector<cd>& s, int d, int k, int M, double r, double rt) {
    std::size_t block = 1;
    for (int i = 0; i < k; ++i) block *= static_cast<std::size_t>(M);
    double outer = 0.0;
    for (std::size_t b = 0; b < s.size() / block; ++b) {
        double inner = 0.0;
        for (std::size_t i = 0; i < block; ++i)
            inner += std::pow(std::abs(s[b * block + i]), rt) / std::pow(M, k);
        outer += std::pow(std::pow(inner, 1.0 / rt), r) / std::pow(M, d - k);
    }
    return std::pow(outer, 1.0 / r);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("mixed norm basics") {
    auto lat = build_lattice(2, 1, 4);
    TorusGrid grid(2, 1, 32);

    SUBCASE("constants have unit norm on the unit-measure torus") {
        std::vector<int> origin{0, 0};
        auto one = SpectralField::plane_wave(lat, origin);
        for (double r : {1.0, 2.0, 3.5, kInf})
            for (double rt : {1.0, 2.0, 4.0, kInf})
                CHECK(mixed_space_norm(one, grid, r, rt) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("separable products factor") {
        // f(x,y) = g(x) h(y) with band-limited g, h
        auto eng = make_engine(5);
        auto gx = gaussian_coeffs(5, eng);   // frequencies -2..2 in x
        auto hy = gaussian_coeffs(5, eng);
        std::vector<cd> coeffs(lat->size(), cd(0.0, 0.0));
        std::vector<int> pt(2);
        for (int a = -2; a <= 2; ++a)
            for (int b = -2; b <= 2; ++b) {
                pt[0] = a;
                pt[1] = b;
                coeffs[lat->index_of(pt)] =
                    gx[static_cast<std::size_t>(a + 2)] * hy[static_cast<std::size_t>(b + 2)];
            }
        SpectralField f(lat, coeffs);
        const double r = 4.0, rt = 3.0;
        const double lhs = mixed_space_norm(f, grid, r, rt);

        auto lat1 = build_lattice(1, 1, 2);
        TorusGrid grid1(1, 1, 32);
        SpectralField g(lat1, std::vector<cd>(gx.begin(), gx.end()));
        SpectralField h(lat1, std::vector<cd>(hy.begin(), hy.end()));
        const double rhs = mixed_space_norm(g, grid1, r, r) * mixed_space_norm(h, grid1, rt, rt);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
    SUBCASE("2 cos(2 pi x) has L^2 norm sqrt(2), against the brute-force oracle") {
        std::vector<cd> coeffs(lat->size(), cd(0.0, 0.0));
        std::vector<int> p1{1, 0}, p2{-1, 0};
        coeffs[lat->index_of(p1)] = 1.0;
        coeffs[lat->index_of(p2)] = 1.0;
        SpectralField f(lat, coeffs);
        const double v = mixed_space_norm(f, grid, 2.0, 2.0);
        CHECK(v == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
        CHECK(v == doctest::Approx(mixed_norm_oracle(*f.samples(grid), 2, 1, grid.M, 2.0, 2.0))
                       .epsilon(1e-12));
    }
    SUBCASE("generic exponents match the oracle") {
        auto f = random_field(lat, 17);
        for (auto [r, rt] : std::vector<std::pair<double, double>>{{4, 2}, {3, 3}, {2.5, 1.5}})
            CHECK(mixed_space_norm(f, grid, r, rt) ==
                  doctest::Approx(mixed_norm_oracle(*f.samples(grid), 2, 1, grid.M, r, rt))
                      .epsilon(1e-11));
    }
    SUBCASE("exponents below one are rejected") {
        auto f = random_field(lat, 17);
        CHECK_THROWS_AS((void)mixed_space_norm(f, grid, 0.5, 2.0), ParamError);
    }
}

TEST_CASE("space-time composition") {
    auto lat = build_lattice(2, 1, 2);
    TorusGrid grid(2, 1, 16);

    SUBCASE("constant-in-time field scales like T^{1/q}") {
        auto f = random_field(lat, 8);
        const double c = mixed_space_norm(f, grid, 4.0, 2.0);
        const double T = 0.4;
        Trajectory tr;
        auto rule = TimeRule::closed_trapezoid(10, 0.0, T);
        tr.times = rule.times;
        tr.weights = rule.weights;
        for (std::size_t i = 0; i < rule.times.size(); ++i) tr.fields.push_back(f);
        const double q = 3.0;
        CHECK(spacetime_norm(tr, grid, q, 4.0, 2.0) ==
              doctest::Approx(c * std::pow(T, 1.0 / q)).epsilon(1e-12));
    }
    SUBCASE("single sample scales by weight^{1/q}") {
        auto f = random_field(lat, 9);
        Trajectory tr;
        tr.times = {0.25};
        tr.weights = {0.1};
        tr.fields.push_back(f);
        const double m = mixed_space_norm(f, grid, 3.0, 3.0);
        CHECK(spacetime_norm(tr, grid, 5.0, 3.0, 3.0) ==
              doctest::Approx(m * std::pow(0.1, 0.2)).epsilon(1e-12));
    }
    SUBCASE("free plane-wave trajectory has unit norm") {
        std::vector<int> xi{1, -2};
        auto pw = SpectralField::plane_wave(lat, xi);
        auto tr = free_trajectory(pw, TimeRule::periodic_uniform(16));
        CHECK(spacetime_norm(tr, grid, 6.0, 4.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("empty trajectory is rejected") {
        Trajectory tr;
        CHECK_THROWS_AS((void)spacetime_norm(tr, grid, 2.0, 2.0, 2.0), ParamError);
    }
}

TEST_CASE("Sobolev norms") {
    auto lat = build_lattice(2, 1, 5);
    TorusGrid grid(2, 1, 32);

    SUBCASE("s = 0 is the L^2 norm") {
        auto f = random_field(lat, 21);
        CHECK(sobolev_norm(f, 0.0) == doctest::Approx(f.l2_norm()).epsilon(1e-14));
        CHECK(lr_sobolev_norm(f, 0.0, 2.0, grid) == doctest::Approx(f.l2_norm()).epsilon(1e-14));
    }
    SUBCASE("plane wave with |xi|^2 = 25") {
        std::vector<int> xi{3, 4};
        auto pw = SpectralField::plane_wave(lat, xi);
        CHECK(sobolev_norm(pw, 1.0) == doctest::Approx(std::sqrt(26.0)).epsilon(1e-13));
    }
    SUBCASE("fractional order against the coefficient-sum oracle") {
        auto f = random_field(lat, 22);
        double acc = 0.0;
        for (std::size_t i = 0; i < lat->size(); ++i)
            acc += std::pow(1.0 + static_cast<double>(lat->nsq(i)), 0.5) * std::norm(f.coeffs()[i]);
        CHECK(sobolev_norm(f, 0.5) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
    }
}

TEST_CASE("partial regularity norm") {
    auto lat = build_lattice(3, 2, 3);

    SUBCASE("s = 1/q collapses to H^{1/q}") {
        auto f = random_field(lat, 30);
        const double q = 4.0;
        CHECK(partial_sobolev_norm(f, 1.0 / q, q) ==
              doctest::Approx(sobolev_norm(f, 1.0 / q)).epsilon(1e-12));
    }
    SUBCASE("plane wave closed form") {
        std::vector<int> xi{2, 1, -2};  // xi_1 = (2), xi_2 = (1,-2)
        auto pw = SpectralField::plane_wave(lat, xi);
        const double q = 4.0, s = 0.75;
        const double a2 = 4.0, b2 = 5.0;
        const double want = std::pow(1.0 + b2, 0.5 * (s - 1.0 / q)) *
                            std::pow(1.0 + a2 + b2, 0.5 / q);
        CHECK(partial_sobolev_norm(pw, s, q) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("dominated by the full Sobolev norm for s > 1/q") {
        const double q = 4.0, s = 0.8;
        for (int trial = 0; trial < 20; ++trial) {
            auto f = random_field(lat, 31, static_cast<std::uint64_t>(trial));
            CHECK(partial_sobolev_norm(f, s, q) <= sobolev_norm(f, s) * (1 + 1e-12));
        }
    }
}

TEST_CASE("Schatten norms") {
    SUBCASE("diag(3,4)") {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2, 2);
        A(0, 0) = 3.0;
        A(1, 1) = 4.0;
        CHECK(schatten_norm(A, 1.0) == doctest::Approx(7.0).epsilon(1e-13));
        CHECK(schatten_norm(A, 2.0) == doctest::Approx(5.0).epsilon(1e-13));
        CHECK(schatten_norm(A, kInf) == doctest::Approx(4.0).epsilon(1e-13));
    }
    SUBCASE("rank one uv*") {
        auto eng = make_engine(77);
        auto uc = gaussian_coeffs(6, eng);
        auto vc = gaussian_coeffs(6, eng);
        Eigen::VectorXcd u(6), v(6);
        for (int i = 0; i < 6; ++i) {
            u(i) = uc[static_cast<std::size_t>(i)];
            v(i) = vc[static_cast<std::size_t>(i)];
        }
        Eigen::MatrixXcd A = u * v.adjoint();
        const double want = u.norm() * v.norm();
        for (double alpha : {1.0, 1.5, 2.0, 3.0, kInf})
            CHECK(schatten_norm(A, alpha) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("alpha = 2 equals the entrywise Frobenius oracle") {
        auto eng = make_engine(78);
        auto ac = gaussian_coeffs(64, eng);
        Eigen::MatrixXcd A(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) A(i, j) = ac[static_cast<std::size_t>(8 * i + j)];
        double frob = 0.0;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) frob += std::norm(A(i, j));
        CHECK(schatten_norm(A, 2.0) == doctest::Approx(std::sqrt(frob)).epsilon(1e-10));
    }
    SUBCASE("monotone in alpha, and trace duality") {
        auto eng = make_engine(79);
        auto ac = gaussian_coeffs(36, eng);
        auto bc = gaussian_coeffs(36, eng);
        Eigen::MatrixXcd A(6, 6), B(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                A(i, j) = ac[static_cast<std::size_t>(6 * i + j)];
                B(i, j) = bc[static_cast<std::size_t>(6 * i + j)];
            }
        CHECK(schatten_norm(A, 1.0) >= schatten_norm(A, 1.5));
        CHECK(schatten_norm(A, 1.5) >= schatten_norm(A, 2.0));
        CHECK(schatten_norm(A, 2.0) >= schatten_norm(A, kInf));
        for (double alpha : {1.0, 1.5, 2.0}) {
            const double dual = alpha == 1.0 ? kInf : alpha / (alpha - 1.0);
            const double lhs = std::abs((A * B).trace());
            CHECK(lhs <= schatten_norm(A, alpha) * schatten_norm(B, dual) * (1 + 1e-10));
        }
    }
    SUBCASE("non-square and non-finite inputs are rejected") {
        CHECK_THROWS_AS(FiniteOperator{Eigen::MatrixXcd::Zero(2, 3)}, ParamError);
        Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
        bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(FiniteOperator{bad}, NumericError);
    }
}

TEST_CASE("Sobolev-Schatten norm") {
    auto lat = build_lattice(2, 1, 2);

    SUBCASE("s = 0 reduces to the weight vector norm") {
        auto ens = make_ons(OnsKind::random, 3, lat, 41);
        ens.weights = {0.5, 1.25, 2.0};
        for (double ap : {1.0, 1.5, 2.0})
            CHECK(sobolev_schatten_norm(ens, ap, 0.0) ==
                  doctest::Approx(lalpha_norm(ens.weights, ap)).epsilon(1e-10));
    }
    SUBCASE("rank-one plane wave with |xi|^2 = 1 gives 2^s") {
        OrthonormalEnsemble ens;
        ens.lattice = lat;
        ens.frames = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(lat->size()), 1);
        std::vector<int> xi{0, 1};
        ens.frames(static_cast<Eigen::Index>(lat->index_of(xi)), 0) = 1.0;
        ens.weights = {1.0};
        for (double s : {0.25, 0.5, 1.0})
            for (double ap : {1.0, 2.0, 4.0})
                CHECK(sobolev_schatten_norm(ens, ap, s) ==
                      doctest::Approx(std::pow(2.0, s)).epsilon(1e-12));
    }
    SUBCASE("rank-2 ensemble against the dense operator oracle") {
        auto ens = make_ons(OnsKind::random, 2, lat, 43);
        ens.weights = {1.0, 0.3};
        const double s = 0.5, ap = 2.0;
        const auto P = static_cast<Eigen::Index>(lat->size());
        Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(P, P);
        for (int j = 0; j < 2; ++j)
            dense += ens.weights[static_cast<std::size_t>(j)] * ens.frames.col(j) *
                     ens.frames.col(j).adjoint();
        Eigen::VectorXd wgt(P);
        for (Eigen::Index i = 0; i < P; ++i)
            wgt(i) = std::pow(1.0 + static_cast<double>(lat->nsq(static_cast<std::size_t>(i))),
                              0.5 * s);
        dense = wgt.asDiagonal() * dense * wgt.asDiagonal();
        CHECK(sobolev_schatten_norm(ens, ap, s) ==
              doctest::Approx(schatten_norm(dense, ap)).epsilon(1e-10));
    }
}

TEST_CASE("norm order properties on random fields") {
    auto lat = build_lattice(2, 1, 3);
    TorusGrid grid(2, 1, 32);
    for (int trial = 0; trial < 25; ++trial) {
        auto f = random_field(lat, 1234, static_cast<std::uint64_t>(trial));
        // Hoelder monotonicity on the probability-measure torus
        CHECK(mixed_space_norm(f, grid, 2.0, 2.0) <=
              mixed_space_norm(f, grid, 3.0, 3.0) * (1 + 1e-12));
        CHECK(mixed_space_norm(f, grid, 3.0, 3.0) <=
              mixed_space_norm(f, grid, 6.0, 6.0) * (1 + 1e-12));
        // Minkowski nesting: r >= rt puts the mixed norm above L^{rt}(T^d)
        CHECK(mixed_space_norm(f, grid, 4.0, 2.0) >=
              mixed_space_norm(f, grid, 2.0, 2.0) * (1 - 1e-12));
        CHECK(mixed_space_norm(f, grid, 3.0, 1.5) >=
              mixed_space_norm(f, grid, 1.5, 1.5) * (1 - 1e-12));
    }
}

TEST_CASE("edge splits and infinite time exponents") {
    SUBCASE("k = d leaves a single inner block") {
        auto lat = build_lattice(2, 2, 3);
        TorusGrid grid(2, 2, 16);
        auto f = random_field(lat, 918);
        // with no x block the mixed norm is the plain Lebesgue norm for any r
        const double a = mixed_space_norm(f, grid, 7.0, 3.0);
        const double b = mixed_space_norm(f, grid, 3.0, 3.0);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
    SUBCASE("q = infinity takes the max over samples") {
        auto lat = build_lattice(1, 1, 2);
        TorusGrid grid(1, 1, 8);
        Trajectory tr;
        tr.times = {0.0, 0.5, 0.75};
        tr.weights = {0.25, 0.5, 0.25};
        std::vector<int> origin{0};
        tr.fields.push_back(SpectralField::plane_wave(lat, origin, 1.0));
        tr.fields.push_back(SpectralField::plane_wave(lat, origin, 3.0));
        tr.fields.push_back(SpectralField::plane_wave(lat, origin, 2.0));
        CHECK(spacetime_norm(tr, grid, std::numeric_limits<double>::infinity(), 2.0, 2.0) ==
              doctest::Approx(3.0).epsilon(1e-13));
    }
}
