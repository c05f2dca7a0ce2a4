#pragma once

#include <optional>
#include <string>

#include "toruslab/rational.hpp"

namespace toruslab {

// Diagonal-scan (r == rt) placement relative to the admissibility diagram in
// the (1/r, 1/q) square: the dividing line is 2/q + d/r = d/2.
enum class RegionTag {
    not_diagonal,        // r != rt, no diagonal tag
    outside,             // r < 2 or q < 2
    excluded_segment,    // q = 2 with 2/q + d/r >= d/2 (top segment, estimate open)
    sharp_line,          // 2/q + d/r = d/2
    classical_side,      // 2/q + d/r < d/2
    complementary_side,  // 2/q + d/r > d/2
};

std::string region_tag_name(RegionTag t);

// Exponent triple with every derived admissibility quantity.
struct AdmissibleTriple {
    Exponent q, r, rt;
    int d = 1;
    int k = 1;

    Exponent gamma;          // 1/gamma = (1/r)(1 - k/d) + (1/rt)(k/d)
    Rational alpha_prime;    // 2*gamma/(gamma+1), in [1, 2]
    Rational beta;           // decay exponent (d-k)(1/2 - 1/r) + k(1/2 - 1/rt)

    bool satisfies_eq_ineq = false;   // 2/q >= beta
    bool in_admissible_range = false;    // 2 <= rt <= r < inf and 2 < q <= inf
    bool sharp_admissible = false;    // 2/q + d/gamma = d
    bool in_refined_set = false;      // 2/q + (d-k)/r + k/rt = d/2 within ranges
    bool gamma_below_critical = false;  // gamma < (d+1)/(d-1)

    RegionTag region = RegionTag::not_diagonal;

    // short human tag; the energy corner (q, r, rt) = (inf, 2, 2) is named
    std::string label() const;

    double q_val() const { return q.value(); }
    double r_val() const { return r.value(); }
    double rt_val() const { return rt.value(); }
};

AdmissibleTriple classify_triple(const Exponent& q, const Exponent& r, const Exponent& rt,
                                 int d, int k);

// Largest admissible time exponent for given (r, rt): equality in the
// dispersive inequality, 2/q = beta.  beta <= 0 yields q = inf.
Exponent critical_q(const Exponent& r, const Exponent& rt, int d, int k);

// q solving the sharp condition 2/q + d/gamma = d; empty when it would fall
// below 1.
std::optional<Exponent> sharp_q(const Exponent& r, const Exponent& rt, int d, int k);

// Float-input fallback with 1e-9 tolerance on the equality flags.
AdmissibleTriple classify_triple_approx(double q, double r, double rt, int d, int k);

}  // namespace toruslab
