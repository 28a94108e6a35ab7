#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nplab {

// Exact rational arithmetic for dyadic-cube measures. Numerator/denominator
// are kept in 128-bit to survive products of deep dyadic denominators; every
// operation normalizes, so values stay small in practice.
class Rational {
public:
    using Int = __int128;

    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(Int n, Int d) : num_(n), den_(d) { normalize(); }

    static Rational from_int(long long n) { return Rational(n); }

    // num / 2^k
    static Rational dyadic(long long num, int k) {
        Int d = 1;
        for (int i = 0; i < k; ++i) d *= 2;
        return Rational(num, d);
    }

    Int num() const { return num_; }
    Int den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational operator+(const Rational& o) const { return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_); }
    Rational operator-(const Rational& o) const { return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_); }
    Rational operator*(const Rational& o) const { return Rational(num_ * o.num_, den_ * o.den_); }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
        return Rational(num_ * o.den_, den_ * o.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }

    Rational& operator+=(const Rational& o) { *this = *this + o; return *this; }
    Rational& operator-=(const Rational& o) { *this = *this - o; return *this; }
    Rational& operator*=(const Rational& o) { *this = *this * o; return *this; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }
    bool operator<=(const Rational& o) const { return num_ * o.den_ <= o.num_ * den_; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    std::string str() const {
        auto i2s = [](Int v) {
            if (v == 0) return std::string("0");
            bool neg = v < 0;
            if (neg) v = -v;
            std::string s;
            while (v > 0) { s.insert(s.begin(), char('0' + int(v % 10))); v /= 10; }
            return neg ? "-" + s : s;
        };
        return den_ == 1 ? i2s(num_) : i2s(num_) + "/" + i2s(den_);
    }

private:
    void normalize() {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        Int a = num_ < 0 ? -num_ : num_, b = den_;
        while (b != 0) { Int t = a % b; a = b; b = t; }
        if (a > 1) { num_ /= a; den_ /= a; }
    }

    Int num_, den_;
};

inline Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

} // namespace nplab
