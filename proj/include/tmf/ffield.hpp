#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "error.hpp"

namespace tmf {

namespace detail {

// dense little-endian coefficient vectors over F_p, trailing zeros trimmed
using PolyFp = std::vector<int>;

inline void poly_trim(PolyFp& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline PolyFp poly_mul(const PolyFp& a, const PolyFp& b, long long p) {
    if (a.empty() || b.empty()) return {};
    PolyFp c(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            c[i + j] = int((c[i + j] + (long long)a[i] * b[j]) % p);
    poly_trim(c);
    return c;
}

// remainder of a by monic m
inline PolyFp poly_mod(PolyFp a, const PolyFp& m, long long p) {
    poly_trim(a);
    size_t dm = m.size() - 1;
    while (a.size() > dm) {
        int lead = a.back();
        size_t shift = a.size() - 1 - dm;
        for (size_t i = 0; i < m.size(); ++i) {
            long long v = a[shift + i] - (long long)lead * m[i] % p;
            a[shift + i] = int(((v % p) + p) % p);
        }
        poly_trim(a);
        if (a.size() > dm && a.back() == 0) poly_trim(a);
    }
    return a;
}

inline bool poly_is_zero(const PolyFp& a) { return a.empty(); }

} // namespace detail

// Arithmetic context for F_{q^L}, q = p^e, as F_p[x]/(modulus) with
// deg(modulus) = e*L. The modulus is the lexicographically least monic
// irreducible (coefficient vectors ordered as base-p integers, constant
// term least significant), so serialized elements reproduce across runs.
struct FieldCtx {
    long long p = 2;
    long long e = 1;
    long long L = 1;
    std::vector<int> modulus; // little-endian, monic, degree e*L

    long long deg() const { return e * L; }
    long long q() const {
        long long r = 1;
        for (long long i = 0; i < e; ++i) r *= p;
        return r;
    }
    // q^m for 0 <= m <= L (fits easily at desk scale)
    long long q_pow(long long m) const {
        long long r = 1;
        for (long long i = 0; i < m; ++i) r *= q();
        return r;
    }
    long long field_size() const { return q_pow(L); }
};

using FieldPtr = std::shared_ptr<const FieldCtx>;

namespace detail {

inline bool is_prime(long long n) {
    if (n < 2) return false;
    for (long long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

inline bool is_irreducible(const PolyFp& f, long long p) {
    // trial division by every monic polynomial of degree <= deg(f)/2
    size_t d = f.size() - 1;
    if (d == 1) return true;
    for (size_t dd = 1; dd <= d / 2; ++dd) {
        long long count = 1;
        for (size_t i = 0; i < dd; ++i) count *= p;
        for (long long code = 0; code < count; ++code) {
            PolyFp g(dd + 1, 0);
            long long c = code;
            for (size_t i = 0; i < dd; ++i) {
                g[i] = int(c % p);
                c /= p;
            }
            g[dd] = 1;
            if (poly_is_zero(poly_mod(f, g, p))) return false;
        }
    }
    return true;
}

} // namespace detail

inline FieldPtr ff_make(long long p, long long e, long long L) {
    if (!detail::is_prime(p)) fail("NotPrime", "p = " + std::to_string(p));
    if (e < 1 || L < 1) fail("BadArgument", "e, L must be >= 1");
    auto ctx = std::make_shared<FieldCtx>();
    ctx->p = p;
    ctx->e = e;
    ctx->L = L;
    long long d = e * L;
    if (d == 1) {
        ctx->modulus = {0, 1}; // x
        return ctx;
    }
    long long count = 1;
    for (long long i = 0; i < d; ++i) count *= p;
    for (long long code = 0; code < count; ++code) {
        detail::PolyFp f(d + 1, 0);
        long long c = code;
        for (long long i = 0; i < d; ++i) {
            f[i] = int(c % p);
            c /= p;
        }
        f[d] = 1;
        if (detail::is_irreducible(f, p)) {
            ctx->modulus.assign(f.begin(), f.end());
            return ctx;
        }
    }
    fail("Internal", "no irreducible polynomial found");
}

// Element of F_{q^L}: coordinate vector over F_p w.r.t. the power basis of
// the context modulus. Pure value type.
struct FFElem {
    FieldPtr f;
    std::vector<int> c; // length e*L

    FFElem() = default;
    explicit FFElem(FieldPtr ctx) : f(std::move(ctx)), c(f->deg(), 0) {}
    FFElem(FieldPtr ctx, long long ival) : f(std::move(ctx)), c(f->deg(), 0) {
        long long v = ((ival % f->p) + f->p) % f->p;
        c[0] = int(v);
    }

    bool is_zero() const {
        for (int x : c)
            if (x) return false;
        return true;
    }
    bool is_one() const {
        if (c.empty() || c[0] != 1) return false;
        for (size_t i = 1; i < c.size(); ++i)
            if (c[i]) return false;
        return true;
    }

    // base-p integer key, c[0] least significant; fixes the coordinate-lex
    // order used for deterministic element selection
    long long key() const {
        long long k = 0;
        for (size_t i = c.size(); i-- > 0;) k = k * f->p + c[i];
        return k;
    }

    friend bool operator==(const FFElem& a, const FFElem& b) { return a.c == b.c; }
    friend bool operator!=(const FFElem& a, const FFElem& b) { return !(a == b); }
    friend bool operator<(const FFElem& a, const FFElem& b) { return a.key() < b.key(); }

    friend FFElem operator+(const FFElem& a, const FFElem& b) {
        FFElem r = a;
        for (size_t i = 0; i < r.c.size(); ++i) r.c[i] = int((r.c[i] + b.c[i]) % a.f->p);
        return r;
    }
    friend FFElem operator-(const FFElem& a, const FFElem& b) {
        FFElem r = a;
        long long p = a.f->p;
        for (size_t i = 0; i < r.c.size(); ++i) r.c[i] = int((r.c[i] - b.c[i] + p) % p);
        return r;
    }
    FFElem operator-() const {
        FFElem r = *this;
        for (auto& x : r.c) x = int((f->p - x) % f->p);
        return r;
    }
    friend FFElem operator*(const FFElem& a, const FFElem& b) {
        detail::PolyFp pa(a.c.begin(), a.c.end()), pb(b.c.begin(), b.c.end());
        auto pr = detail::poly_mod(detail::poly_mul(pa, pb, a.f->p),
                                   detail::PolyFp(a.f->modulus.begin(), a.f->modulus.end()), a.f->p);
        FFElem r(a.f);
        for (size_t i = 0; i < pr.size(); ++i) r.c[i] = pr[i];
        return r;
    }

    FFElem pow(long long n) const {
        if (is_zero()) {
            if (n < 0) fail("ZeroDivisor", "0^negative");
            return n == 0 ? FFElem(f, 1) : *this;
        }
        long long ord = f->field_size() - 1;
        n %= ord;
        if (n < 0) n += ord;
        FFElem r(f, 1), b = *this;
        while (n) {
            if (n & 1) r = r * b;
            b = b * b;
            n >>= 1;
        }
        return r;
    }

    FFElem inv() const {
        if (is_zero()) fail("ZeroDivisor", "inverse of zero field element");
        return pow(f->field_size() - 2);
    }

    // x -> x^{q^n}; bijective, so n may be negative. q^n == q^{n mod L}
    // on F_{q^L} since q^L = 1 mod (q^L - 1) and 0 is fixed anyway.
    FFElem frobenius(long long n) const {
        long long m = ((n % f->L) + f->L) % f->L;
        return pow_unreduced_q(m);
    }

    long long mul_order() const {
        if (is_zero()) fail("ZeroDivisor", "order of zero");
        long long ord = f->field_size() - 1;
        // strip each prime factor as far as possible
        long long n = ord, res = ord;
        for (long long d = 2; d * d <= n; ++d) {
            while (n % d == 0) n /= d;
            while (res % d == 0 && pow(res / d).is_one()) res /= d;
        }
        if (n > 1)
            while (res % n == 0 && pow(res / n).is_one()) res /= n;
        return res;
    }

private:
    FFElem pow_unreduced_q(long long m) const {
        // x^{q^m} by square-and-multiply on the integer q^m (m < L, small)
        long long ex = 1;
        for (long long i = 0; i < m; ++i) ex *= f->q();
        FFElem r(f, 1), b = *this;
        while (ex) {
            if (ex & 1) r = r * b;
            b = b * b;
            ex >>= 1;
        }
        return r;
    }
};

inline FFElem ff_zero(const FieldPtr& f) { return FFElem(f); }
inline FFElem ff_one(const FieldPtr& f) { return FFElem(f, 1); }

inline FFElem ff_from_key(const FieldPtr& f, long long key) {
    FFElem r(f);
    for (long long i = 0; i < f->deg(); ++i) {
        r.c[size_t(i)] = int(key % f->p);
        key /= f->p;
    }
    return r;
}

inline FFElem ff_frobenius(const FFElem& x, long long n) { return x.frobenius(n); }

// elements of the subfield F_{q^l} inside ctx, sorted by coordinate key
inline std::vector<FFElem> ff_subfield(const FieldPtr& f, long long l) {
    if (f->L % l != 0)
        fail("NoSuchSubfield", "l = " + std::to_string(l) + " does not divide L = " + std::to_string(f->L));
    std::vector<FFElem> out;
    for (long long k = 0; k < f->field_size(); ++k) {
        FFElem x = ff_from_key(f, k);
        if (x.frobenius(l) == x) out.push_back(x);
    }
    return out;
}

// deterministic generator of F_{q^l}^x: smallest coordinate key of exact
// order q^l - 1 ("let xi_l be a primitive element")
inline FFElem ff_primitive(const FieldPtr& f, long long l) {
    long long target = f->q_pow(l) - 1;
    for (const FFElem& x : ff_subfield(f, l)) {
        if (x.is_zero()) continue;
        if (x.mul_order() == target) return x;
    }
    fail("Internal", "no primitive element found");
}

// p-adic integer given as a/b with p coprime to b
struct ZpArg {
    long long a = 0;
    long long b = 1;
};

// binom(x, n) mod p by Lucas on the base-p digits of x in Z_p; digits of
// rationals come from Hensel inversion of the denominator. Matches the
// convention binom(i, n) = 0 for integers 0 <= i < n.
inline long long lucas_binom(ZpArg x, long long n, long long p) {
    if (n < 0) return 0;
    if (!detail::is_prime(p)) fail("NotPrime", "p = " + std::to_string(p));
    long long b = ((x.b % p) + p) % p;
    if (b == 0) fail("DenominatorDivisibleByP", "denominator " + std::to_string(x.b));
    // b^{-1} mod p
    long long binv = 1;
    {
        long long e = p - 2, base = b;
        while (e) {
            if (e & 1) binv = binv * base % p;
            base = base * base % p;
            e >>= 1;
        }
    }
    long long a = x.a, bb = x.b;
    long long result = 1;
    while (n > 0) {
        long long nd = n % p;
        long long ad = ((a % p) * binv % p + p) % p;
        ad = ad % p;
        if (ad < nd) return 0;
        // binom(ad, nd) mod p, digits < p so direct product formula is fine
        long long num = 1, den = 1;
        for (long long i = 0; i < nd; ++i) {
            num = num * ((ad - i) % p) % p;
            den = den * ((i + 1) % p) % p;
        }
        long long deninv = 1, e2 = p - 2;
        while (e2) {
            if (e2 & 1) deninv = deninv * den % p;
            den = den * den % p;
            e2 >>= 1;
        }
        result = result * (num * deninv % p) % p;
        // a/b -> (a/b - ad)/p = (a - ad*b) / (p*b); keep b fixed instead:
        a = (a - ad * bb);
        if (a % p != 0) fail("Internal", "Hensel digit step");
        a /= p;
        n /= p;
    }
    return ((result % p) + p) % p;
}

inline long long lucas_binom(long long x, long long n, long long p) {
    return lucas_binom(ZpArg{x, 1}, n, p);
}

} // namespace tmf
