#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace clmb {

/// Exact signed rational over int64 with __int128 intermediates.
/// Denominator is always positive and the fraction is kept reduced.
/// Throws std::overflow_error if a reduced result no longer fits.
class Ratio {
public:
    constexpr Ratio() : num_(0), den_(1) {}
    constexpr Ratio(std::int64_t value) : num_(value), den_(1) {}

    Ratio(std::int64_t num, std::int64_t den) {
        if (den == 0) throw std::domain_error("zero denominator");
        __int128 n = num;
        __int128 d = den;
        if (d < 0) { n = -n; d = -d; }
        assign_reduced(n, d);
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }
    bool is_integer() const { return den_ == 1; }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    /// Round half-up (ties toward +infinity) to the nearest integer.
    std::int64_t round_half_up() const {
        __int128 n2 = static_cast<__int128>(num_) * 2 + den_;
        __int128 d2 = static_cast<__int128>(den_) * 2;
        return narrow(floor_div(n2, d2));
    }

    std::int64_t floor() const {
        return narrow(floor_div(num_, den_));
    }

    std::int64_t ceil() const {
        return narrow(-floor_div(-static_cast<__int128>(num_), den_));
    }

    friend Ratio operator+(const Ratio& a, const Ratio& b) {
        __int128 n = i128(a.num_) * b.den_ + i128(b.num_) * a.den_;
        __int128 d = i128(a.den_) * b.den_;
        return Ratio(n, d, reduced_tag{});
    }
    friend Ratio operator-(const Ratio& a, const Ratio& b) {
        __int128 n = i128(a.num_) * b.den_ - i128(b.num_) * a.den_;
        __int128 d = i128(a.den_) * b.den_;
        return Ratio(n, d, reduced_tag{});
    }
    friend Ratio operator*(const Ratio& a, const Ratio& b) {
        return Ratio(i128(a.num_) * b.num_, i128(a.den_) * b.den_, reduced_tag{});
    }
    friend Ratio operator/(const Ratio& a, const Ratio& b) {
        if (b.num_ == 0) throw std::domain_error("division by zero");
        __int128 n = i128(a.num_) * b.den_;
        __int128 d = i128(a.den_) * b.num_;
        if (d < 0) { n = -n; d = -d; }
        return Ratio(n, d, reduced_tag{});
    }
    Ratio operator-() const { Ratio r; r.num_ = -num_; r.den_ = den_; return r; }

    Ratio& operator+=(const Ratio& o) { *this = *this + o; return *this; }
    Ratio& operator-=(const Ratio& o) { *this = *this - o; return *this; }
    Ratio& operator*=(const Ratio& o) { *this = *this * o; return *this; }
    Ratio& operator/=(const Ratio& o) { *this = *this / o; return *this; }

    friend bool operator==(const Ratio& a, const Ratio& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Ratio& a, const Ratio& b) { return !(a == b); }
    friend bool operator<(const Ratio& a, const Ratio& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Ratio& a, const Ratio& b) { return b < a; }
    friend bool operator<=(const Ratio& a, const Ratio& b) { return !(b < a); }
    friend bool operator>=(const Ratio& a, const Ratio& b) { return !(a < b); }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    struct reduced_tag {};
    Ratio(__int128 n, __int128 d, reduced_tag) { assign_reduced(n, d); }

    static __int128 i128(std::int64_t v) { return static_cast<__int128>(v); }

    static __int128 floor_div(__int128 n, __int128 d) {
        __int128 q = n / d;
        if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
        return q;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a;
    }

    static std::int64_t narrow(__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN)
            throw std::overflow_error("rational overflow");
        return static_cast<std::int64_t>(v);
    }

    void assign_reduced(__int128 n, __int128 d) {
        __int128 g = gcd128(n, d);
        if (g > 1) { n /= g; d /= g; }
        num_ = narrow(n);
        den_ = narrow(d);
    }

    std::int64_t num_;
    std::int64_t den_;
};

inline Ratio abs(const Ratio& r) { return r.is_negative() ? -r : r; }

} // namespace clmb
