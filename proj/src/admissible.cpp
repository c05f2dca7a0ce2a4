#include "toruslab/admissible.hpp"

#include <algorithm>
#include <cmath>

#include "toruslab/errors.hpp"

namespace toruslab {

namespace {

const Rational kHalf(1, 2);

Rational gamma_inv(const Exponent& r, const Exponent& rt, int d, int k) {
    Rational kd(k, d);
    return r.inv() * (Rational(1) - kd) + rt.inv() * kd;
}

}  // namespace

std::string region_tag_name(RegionTag t) {
    switch (t) {
        case RegionTag::not_diagonal: return "not_diagonal";
        case RegionTag::outside: return "outside";
        case RegionTag::excluded_segment: return "excluded";
        case RegionTag::sharp_line: return "sharp";
        case RegionTag::classical_side: return "classical";
        case RegionTag::complementary_side: return "complementary";
    }
    return "?";
}

std::string AdmissibleTriple::label() const {
    if (q.is_infinite() && r.inv() == kHalf && rt.inv() == kHalf) return "energy corner";
    return region_tag_name(region);
}

AdmissibleTriple classify_triple(const Exponent& q, const Exponent& r, const Exponent& rt,
                                 int d, int k) {
    if (d < 1 || k < 1 || k > d) throw ParamError("invalid (d, k) split");
    AdmissibleTriple a;
    a.q = q;
    a.r = r;
    a.rt = rt;
    a.d = d;
    a.k = k;

    const Rational g = gamma_inv(r, rt, d, k);
    a.gamma = Exponent::from_inv(g);
    a.alpha_prime = Rational(2) / (Rational(1) + g);

    a.beta = Rational(d - k) * (kHalf - r.inv()) + Rational(k) * (kHalf - rt.inv());
    a.satisfies_eq_ineq = Rational(2) * q.inv() >= a.beta;

    a.in_admissible_range = rt.inv() <= kHalf && r.inv() <= rt.inv() && !(r.inv() == Rational(0)) &&
                         q.inv() < kHalf;

    // 2/q + d/gamma = d  <=>  2*(1/q) = d*(1 - 1/gamma)
    a.sharp_admissible = Rational(2) * q.inv() == Rational(d) * (Rational(1) - g);

    // scaling-critical equality 2/q + (d-k)/r + k/rt = d/2 within theorem ranges
    Rational balance = Rational(2) * q.inv() + Rational(d - k) * r.inv() + Rational(k) * rt.inv();
    a.in_refined_set = a.in_admissible_range && balance == Rational(d, 2);

    // gamma < (d+1)/(d-1): in reciprocal form 1/gamma > (d-1)/(d+1)
    a.gamma_below_critical = (d == 1) || (g > Rational(d - 1, d + 1));

    if (r.inv() == rt.inv()) {
        const Rational ir = r.inv(), iq = q.inv();
        if (ir > kHalf || iq > kHalf) {
            a.region = RegionTag::outside;
        } else {
            Rational sg = Rational(2) * iq + Rational(d) * ir - Rational(d, 2);
            bool q_is_2 = iq == kHalf;
            bool classical_endpoint = d == 2 && q_is_2 && r.is_infinite();
            if ((q_is_2 && sg >= Rational(0)) || classical_endpoint)
                a.region = RegionTag::excluded_segment;
            else if (sg == Rational(0))
                a.region = RegionTag::sharp_line;
            else if (sg > Rational(0))
                a.region = RegionTag::complementary_side;
            else
                a.region = RegionTag::classical_side;
        }
    }
    return a;
}

Exponent critical_q(const Exponent& r, const Exponent& rt, int d, int k) {
    Rational beta = Rational(d - k) * (kHalf - r.inv()) + Rational(k) * (kHalf - rt.inv());
    if (beta <= Rational(0)) return Exponent::infinity();
    if (beta * kHalf > Rational(1))
        throw ClassificationError("no admissible q >= 1 for this (r, rt, d, k)");
    return Exponent::from_inv(beta * kHalf);
}

std::optional<Exponent> sharp_q(const Exponent& r, const Exponent& rt, int d, int k) {
    Rational g = gamma_inv(r, rt, d, k);
    Rational inv_q = Rational(d) * (Rational(1) - g) * kHalf;  // 1/q
    if (inv_q > Rational(1)) return std::nullopt;              // q would drop below 1
    return Exponent::from_inv(inv_q);
}

AdmissibleTriple classify_triple_approx(double q, double r, double rt, int d, int k) {
    if (d < 1 || k < 1 || k > d) throw ParamError("invalid (d, k) split");
    // exact path when the reciprocals sit on a modest rational grid;
    // otherwise classify in floating point with 1e-9 equality tolerance
    auto try_snap = [](double p) -> std::optional<Exponent> {
        if (std::isinf(p)) return Exponent::infinity();
        if (p < 1.0) return std::nullopt;
        const double inv = 1.0 / p;
        const std::int64_t den = 720720;
        auto num = static_cast<std::int64_t>(std::llround(inv * den));
        if (std::abs(inv - static_cast<double>(num) / den) > 1e-12) return std::nullopt;
        return Exponent::from_inv(Rational(num, den));
    };
    auto sq = try_snap(q), sr = try_snap(r), srt = try_snap(rt);
    if (sq && sr && srt) return classify_triple(*sq, *sr, *srt, d, k);

    constexpr double tol = 1e-9;
    auto inv_of = [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; };
    const bool in_range = q >= 1.0 && r >= 1.0 && rt >= 1.0;
    const double iq = in_range ? inv_of(q) : 1.0;
    const double ir = in_range ? inv_of(r) : 1.0;
    const double irt = in_range ? inv_of(rt) : 1.0;

    // nearest-grid storage for the exponents and derived rationals; the flags
    // below come from the raw doubles, so storage round-off cannot flip them
    auto nearest = [](double inv) {
        const std::int64_t den = 720720;
        auto num = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(inv * den)),
                                            0, den);
        return Exponent::from_inv(Rational(num, den));
    };
    AdmissibleTriple a;
    a.q = nearest(iq);
    a.r = nearest(ir);
    a.rt = nearest(irt);
    a.d = d;
    a.k = k;
    const double g = ir * (1.0 - static_cast<double>(k) / d) + irt * static_cast<double>(k) / d;
    a.gamma = nearest(g);
    a.alpha_prime = Rational(2) / (Rational(1) + a.gamma.inv());
    const double beta =
        (d - k) * (0.5 - ir) + static_cast<double>(k) * (0.5 - irt);
    a.beta = Rational(std::llround(beta * 720720), 720720);
    if (!in_range) {
        a.region = RegionTag::outside;
        return a;  // every admissibility flag stays false
    }
    a.satisfies_eq_ineq = 2.0 * iq >= beta - tol;
    a.in_admissible_range = irt <= 0.5 + tol && ir <= irt + tol && ir > tol && iq < 0.5 - tol;
    a.sharp_admissible = std::abs(2.0 * iq - d * (1.0 - g)) <= tol;
    const double balance = 2.0 * iq + (d - k) * ir + k * irt;
    a.in_refined_set = a.in_admissible_range && std::abs(balance - 0.5 * d) <= tol;
    a.gamma_below_critical =
        d == 1 || g > static_cast<double>(d - 1) / (d + 1) + tol;
    if (std::abs(ir - irt) <= tol) {
        if (ir > 0.5 + tol || iq > 0.5 + tol) {
            a.region = RegionTag::outside;
        } else {
            const double sg = 2.0 * iq + d * ir - 0.5 * d;
            const bool q_is_2 = std::abs(iq - 0.5) <= tol;
            const bool classical_endpoint = d == 2 && q_is_2 && ir <= tol;
            if ((q_is_2 && sg >= -tol) || classical_endpoint)
                a.region = RegionTag::excluded_segment;
            else if (std::abs(sg) <= tol)
                a.region = RegionTag::sharp_line;
            else if (sg > 0.0)
                a.region = RegionTag::complementary_side;
            else
                a.region = RegionTag::classical_side;
        }
    }
    return a;
}

}  // namespace toruslab
