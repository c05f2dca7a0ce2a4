#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "toruslab/errors.hpp"

namespace toruslab {

// Exact rational on int64 with overflow-checked arithmetic.  All admissibility
// algebra runs through this type so that region boundaries (which are
// measure-zero lines) are classified without float round-off.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw ParamError("rational division by zero");
        return from128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    using i128 = __int128;

    static Rational from128(i128 n, i128 d) {
        if (d == 0) throw ParamError("rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        constexpr i128 lo = INT64_MIN, hi = INT64_MAX;
        if (n < lo || n > hi || d > hi) throw NumericError("rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }

    void normalize() {
        if (den_ == 0) throw ParamError("rational with zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_;
    std::int64_t den_;
};

// A Lebesgue exponent in [1, inf].  Stored through its reciprocal so that
// infinity is the exact rational 0, never a large float.
class Exponent {
public:
    Exponent() : inv_(1) {}  // exponent 1

    static Exponent infinity() { return Exponent(Rational(0), true); }
    static Exponent from_value(const Rational& p) {
        if (p < Rational(1)) throw ParamError("exponent below 1: " + p.str());
        return Exponent(Rational(1) / p, true);
    }
    static Exponent from_inv(const Rational& inv) {
        if (inv < Rational(0) || inv > Rational(1))
            throw ParamError("reciprocal exponent outside [0,1]: " + inv.str());
        return Exponent(inv, true);
    }

    bool is_infinite() const { return inv_ == Rational(0); }
    const Rational& inv() const { return inv_; }
    Rational value_rational() const {
        if (is_infinite()) throw ParamError("infinite exponent has no rational value");
        return Rational(1) / inv_;
    }
    // inf maps to +inf double.
    double value() const {
        if (is_infinite()) return std::numeric_limits<double>::infinity();
        return (Rational(1) / inv_).value();
    }
    // Hoelder dual: 1/p' = 1 - 1/p.
    Exponent dual() const { return Exponent(Rational(1) - inv_, true); }

    friend bool operator==(const Exponent& a, const Exponent& b) { return a.inv_ == b.inv_; }
    friend bool operator!=(const Exponent& a, const Exponent& b) { return !(a == b); }
    // ordering of exponents themselves (inf largest)
    friend bool operator<(const Exponent& a, const Exponent& b) { return a.inv_ > b.inv_; }
    friend bool operator<=(const Exponent& a, const Exponent& b) { return a.inv_ >= b.inv_; }

    std::string str() const { return is_infinite() ? "inf" : value_rational().str(); }

private:
    Exponent(const Rational& inv, bool) : inv_(inv) {}
    Rational inv_;
};

}  // namespace toruslab
