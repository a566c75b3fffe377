#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tmf {

// Exact rational on 64-bit words with +infinity, used for valuations and
// tail-bound slopes. den == 0 encodes +infinity. Intermediates go through
// __int128; magnitudes are capped by the certificate layer, not here.
struct Rat {
    long long num = 0;
    long long den = 1;

    Rat() = default;
    Rat(long long n) : num(n), den(1) {}
    Rat(long long n, long long d) : num(n), den(d) { normalize(); }

    static Rat inf() {
        Rat r;
        r.num = 1;
        r.den = 0;
        return r;
    }
    bool is_inf() const { return den == 0; }

    void normalize() {
        if (den == 0) {
            num = 1;
            return;
        }
        if (den < 0) {
            den = -den;
            num = -num;
        }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        if (num == 0) den = 1;
    }

    friend Rat operator+(const Rat& a, const Rat& b) {
        if (a.is_inf() || b.is_inf()) return inf();
        __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make128(n, d);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        if (a.is_inf()) return inf();
        if (b.is_inf()) throw std::overflow_error("Rat: inf on the right of -");
        __int128 n = (__int128)a.num * b.den - (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make128(n, d);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        if (a.is_inf() || b.is_inf()) return inf();
        return make128((__int128)a.num * b.num, (__int128)a.den * b.den);
    }
    Rat operator-() const {
        if (is_inf()) throw std::overflow_error("Rat: negating inf");
        Rat r = *this;
        r.num = -r.num;
        return r;
    }

    friend bool operator==(const Rat& a, const Rat& b) {
        if (a.is_inf() || b.is_inf()) return a.is_inf() && b.is_inf();
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
    friend bool operator<(const Rat& a, const Rat& b) {
        if (a.is_inf()) return false;
        if (b.is_inf()) return true;
        return (__int128)a.num * b.den < (__int128)b.num * a.den;
    }
    friend bool operator<=(const Rat& a, const Rat& b) { return a < b || a == b; }
    friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
    friend bool operator>=(const Rat& a, const Rat& b) { return b <= a; }

    std::string str() const {
        if (is_inf()) return "inf";
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

private:
    static Rat make128(__int128 n, __int128 d) {
        if (d < 0) {
            d = -d;
            n = -n;
        }
        __int128 an = n < 0 ? -n : n;
        __int128 g = gcd128(an, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        const __int128 lim = (__int128)1 << 62;
        if (n >= lim || n <= -lim || d >= lim)
            throw std::overflow_error("Rat: overflow");
        Rat r;
        r.num = (long long)n;
        r.den = n == 0 ? 1 : (long long)d;
        return r;
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }
};

inline Rat rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }
inline Rat rat_max(const Rat& a, const Rat& b) { return a < b ? b : a; }

// Saturation bounds for valuation lower bounds coming from superexponential
// tail estimates. Clamping downward keeps the bound valid; slopes get a
// tighter cap so repeated certificate composition cannot overflow.
constexpr long long RAT_CAP = 1000000000000LL;  // 1e12, intercepts
constexpr long long RAT_SLOPE_CAP = 1000000LL;  // 1e6, per-degree slopes

inline Rat rat_cap_down(const Rat& r) {
    if (r.is_inf()) return Rat(RAT_CAP);
    if (r > Rat(RAT_CAP)) return Rat(RAT_CAP);
    if (r < Rat(-100 * RAT_CAP)) throw std::overflow_error("Rat: bound below floor");
    return r;
}

inline Rat rat_cap_slope(const Rat& r) {
    if (r.is_inf()) return Rat(RAT_SLOPE_CAP);
    if (r > Rat(RAT_SLOPE_CAP)) return Rat(RAT_SLOPE_CAP);
    return r;
}

} // namespace tmf
