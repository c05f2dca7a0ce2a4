#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "toruslab/errors.hpp"
#include "toruslab/field.hpp"
#include "toruslab/lattice.hpp"
#include "toruslab/rng.hpp"

using namespace toruslab;

namespace {

// slow reference synthesis: direct O(M^d * (2N+1)^d) phase summation
std::vector<cd> dft_oracle(const FrequencyLattice& lat, const std::vector<cd>& coeffs,
                           const TorusGrid& grid) {
    std::vector<cd> out(grid.points(), cd(0.0, 0.0));
    std::vector<int> digits(static_cast<std::size_t>(grid.d), 0);
    for (std::size_t m = 0; m < out.size(); ++m) {
        for (std::size_t i = 0; i < lat.size(); ++i) {
            auto xi = lat.point(i);
            double phase = 0.0;
            for (int c = 0; c < grid.d; ++c)
                phase += static_cast<double>(digits[static_cast<std::size_t>(c)]) * xi[c] / grid.M;
            out[m] += coeffs[i] * cd(std::cos(2 * M_PI * phase), std::sin(2 * M_PI * phase));
        }
        for (int c = grid.d - 1; c >= 0; --c) {
            if (++digits[static_cast<std::size_t>(c)] < grid.M) break;
            digits[static_cast<std::size_t>(c)] = 0;
        }
    }
    return out;
}

double rel_coeff_dist(const std::vector<cd>& a, const std::vector<cd>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(a[i]);
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("lattice enumerates the truncation cube") {
    auto l1 = build_lattice(1, 1, 2);
    REQUIRE(l1->size() == 5);
    std::vector<std::int64_t> want{4, 1, 0, 1, 4};
    for (std::size_t i = 0; i < 5; ++i) CHECK(l1->nsq(i) == want[i]);

    auto l3 = build_lattice(3, 2, 1);
    CHECK(l3->size() == 27);

    auto l2 = build_lattice(2, 1, 4);
    CHECK(l2->size() == 81);
    std::vector<int> pt{3, -4};
    CHECK(l2->nsq(l2->index_of(pt)) == 25);
}

TEST_CASE("lattice symmetry and exact integer norms") {
    auto lat = build_lattice(2, 1, 3);
    std::vector<int> neg(2);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        auto xi = lat->point(i);
        neg[0] = -xi[0];
        neg[1] = -xi[1];
        std::size_t j = lat->index_of(neg);
        CHECK(lat->nsq(i) == lat->nsq(j));
        CHECK(lat->nsq(i) ==
              static_cast<std::int64_t>(xi[0]) * xi[0] + static_cast<std::int64_t>(xi[1]) * xi[1]);
    }
}

TEST_CASE("lattice rejects bad parameters") {
    CHECK_THROWS_AS(build_lattice(2, 3, 4), ParamError);
    CHECK_THROWS_AS(build_lattice(2, 0, 4), ParamError);
    CHECK_THROWS_AS(build_lattice(2, 1, 0), ParamError);
}

TEST_CASE("synthesis special cases") {
    auto lat = build_lattice(2, 1, 2);
    TorusGrid grid(2, 1, 16);

    SUBCASE("delta at zero gives the constant field") {
        std::vector<int> origin{0, 0};
        auto f = SpectralField::plane_wave(lat, origin);
        auto s = f.samples(grid);
        for (const cd& v : *s) CHECK(std::abs(v - cd(1.0, 0.0)) < 1e-14);
    }
    SUBCASE("delta at (1,0) gives e^{2 pi i x}") {
        std::vector<int> xi{1, 0};
        auto f = SpectralField::plane_wave(lat, xi);
        auto s = f.samples(grid);
        for (int mx = 0; mx < grid.M; ++mx)
            for (int my = 0; my < grid.M; ++my) {
                cd want = phase_unit(static_cast<double>(mx) / grid.M);
                CHECK(std::abs((*s)[static_cast<std::size_t>(mx * grid.M + my)] - want) < 1e-13);
            }
    }
}

TEST_CASE("analyze inverts synthesize against the direct summation oracle") {
    auto lat = build_lattice(1, 1, 4);
    TorusGrid grid(1, 1, 16);
    auto f = random_field(lat, 20240501);

    auto fast = synthesize(*lat, f.coeffs(), grid);
    auto slow = dft_oracle(*lat, f.coeffs(), grid);
    double dev = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) dev = std::max(dev, std::abs(fast[i] - slow[i]));
    CHECK(dev < 1e-11);

    auto back = analyze(*lat, fast, grid);
    CHECK(rel_coeff_dist(f.coeffs(), back) < 1e-12);
}

TEST_CASE("round trip in two dimensions") {
    auto lat = build_lattice(2, 1, 3);
    auto grid = TorusGrid::norm_grade_for(2, 1, 3);
    auto f = random_field(lat, 7);
    auto back = analyze(*lat, *f.samples(grid), grid);
    CHECK(rel_coeff_dist(f.coeffs(), back) < 1e-12);
}

TEST_CASE("Parseval ties coefficients to grid quadrature") {
    auto lat = build_lattice(2, 1, 4);
    TorusGrid grid(2, 1, 32);
    auto f = random_field(lat, 99);
    double coeff_side = 0.0;
    for (const cd& a : f.coeffs()) coeff_side += std::norm(a);
    double grid_side = 0.0;
    for (const cd& v : *f.samples(grid)) grid_side += std::norm(v);
    grid_side *= grid.cell_weight();
    CHECK(std::abs(coeff_side - grid_side) < 1e-10 * coeff_side);
}

TEST_CASE("undersampled grids raise an aliasing error") {
    auto lat = build_lattice(1, 1, 8);
    TorusGrid grid(1, 1, 16);  // needs 17
    auto f = random_field(lat, 3);
    CHECK_THROWS_AS((void)synthesize(*lat, f.coeffs(), grid), AliasingError);
    std::vector<cd> samples(grid.points(), cd(0.0, 0.0));
    CHECK_THROWS_AS((void)analyze(*lat, samples, grid), AliasingError);
}

TEST_CASE("free propagation") {
    auto lat = build_lattice(2, 1, 4);
    auto f = random_field(lat, 11);

    SUBCASE("t = 0 is the identity") {
        auto g = free_propagate(f, 0.0);
        CHECK(rel_coeff_dist(f.coeffs(), g.coeffs()) == 0.0);
    }
    SUBCASE("plane waves pick up the quadratic phase") {
        std::vector<int> xi{2, -1};
        auto pw = SpectralField::plane_wave(lat, xi);
        const double t = 0.37;
        auto g = free_propagate(pw, t);
        cd want = phase_unit(t * 5.0);
        CHECK(std::abs(g.coeffs()[lat->index_of(xi)] - want) < 1e-14);
        TorusGrid grid(2, 1, 16);
        for (const cd& v : *g.samples(grid)) CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
    }
    SUBCASE("unitarity") {
        auto g = free_propagate(f, 0.618);
        CHECK(std::abs(g.l2_norm() - f.l2_norm()) < 1e-12 * f.l2_norm());
    }
    SUBCASE("group law") {
        auto a = free_propagate(free_propagate(f, 0.21), 0.34);
        auto b = free_propagate(f, 0.55);
        CHECK(rel_coeff_dist(a.coeffs(), b.coeffs()) < 1e-12);
    }
    SUBCASE("period one in time") {
        auto g = free_propagate(f, 1.0);
        CHECK(rel_coeff_dist(f.coeffs(), g.coeffs()) < 1e-13);
    }
}

TEST_CASE("multipliers") {
    auto lat = build_lattice(2, 2, 5);
    auto f = random_field(lat, 123);

    SUBCASE("identity and <grad>^0") {
        auto a = apply_multiplier(f, [](const LatticeSite&) { return cd(1.0, 0.0); });
        auto b = apply_multiplier(f, bessel_multiplier(0.0));
        CHECK(rel_coeff_dist(f.coeffs(), a.coeffs()) == 0.0);
        CHECK(rel_coeff_dist(f.coeffs(), b.coeffs()) < 1e-15);
    }
    SUBCASE("<grad_y>^1 on a plane wave with xi_2 = (3,4)") {
        std::vector<int> xi{3, 4};  // k = 2, both coordinates in the y block
        auto pw = SpectralField::plane_wave(lat, xi);
        auto g = apply_multiplier(pw, bessel_y_multiplier(1.0));
        CHECK(std::abs(g.coeffs()[lat->index_of(xi)] - cd(std::sqrt(26.0), 0.0)) < 1e-13);
    }
    SUBCASE("composition equals the product multiplier") {
        auto m1 = bessel_multiplier(0.7);
        auto m2 = riesz_multiplier(-1.3);
        auto lhs = apply_multiplier(apply_multiplier(f, m1), m2);
        auto rhs = apply_multiplier(f, [&](const LatticeSite& s) { return m1(s) * m2(s); });
        CHECK(rel_coeff_dist(lhs.coeffs(), rhs.coeffs()) < 1e-14);
    }
    SUBCASE("negative-order homogeneous multiplier kills the mean") {
        std::vector<int> origin{0, 0};
        auto pw = SpectralField::plane_wave(lat, origin);
        auto g = apply_multiplier(pw, riesz_multiplier(-0.5));
        CHECK(g.coeffs()[lat->index_of(origin)] == cd(0.0, 0.0));
        auto h = apply_multiplier(pw, riesz_multiplier(0.0));
        CHECK(h.coeffs()[lat->index_of(origin)] == cd(1.0, 0.0));
    }
    SUBCASE("non-finite multiplier values surface as numeric errors") {
        CHECK_THROWS_AS(
            (void)apply_multiplier(f, [](const LatticeSite&) { return cd(1.0 / 0.0, 0.0); }),
            NumericError);
    }
}

TEST_CASE("field serialization round trip") {
    auto lat = build_lattice(2, 1, 3);
    auto f = random_field(lat, 31337);
    const std::string path = "field_roundtrip.tsf";
    save_field(f, 32, path);
    auto [g, M] = load_field(path);
    CHECK(M == 32);
    CHECK(g.lattice().d() == 2);
    CHECK(g.lattice().k() == 1);
    CHECK(g.lattice().N() == 3);
    bool identical = g.coeffs().size() == f.coeffs().size();
    for (std::size_t i = 0; identical && i < f.coeffs().size(); ++i)
        identical = f.coeffs()[i] == g.coeffs()[i];
    CHECK(identical);
    std::remove(path.c_str());
}

TEST_CASE("seeded fields are reproducible") {
    auto lat = build_lattice(1, 1, 6);
    auto a = random_field(lat, 42, 5);
    auto b = random_field(lat, 42, 5);
    auto c = random_field(lat, 42, 6);
    bool same = true, diff = false;
    for (std::size_t i = 0; i < a.coeffs().size(); ++i) {
        same = same && a.coeffs()[i] == b.coeffs()[i];
        diff = diff || a.coeffs()[i] != c.coeffs()[i];
    }
    CHECK(same);
    CHECK(diff);
}
