#pragma once

#include <climits>
#include <map>
#include <memory>
#include <utility>

#include "ffield.hpp"
#include "rat.hpp"

namespace tmf {

// exponent cutoff sentinel for exact values
constexpr long long PREC_INF = LLONG_MAX / 4;

inline long long sat_add(long long a, long long b) {
    if (a >= PREC_INF || b >= PREC_INF) return PREC_INF;
    long long s = a + b;
    return s >= PREC_INF ? PREC_INF : s;
}

// |x|_infty = q^{-v} with v in theta-units; inf flag means zero to precision
struct Val {
    bool inf = true;
    Rat v;

    Val() = default;
    explicit Val(Rat r) : inf(false), v(std::move(r)) {}
    static Val infinite() { return Val(); }
    std::string str() const { return inf ? "inf" : v.str(); }
    friend bool operator==(const Val& a, const Val& b) {
        if (a.inf || b.inf) return a.inf && b.inf;
        return a.v == b.v;
    }
};

// Shared context for ramified Laurent arithmetic. The uniformizer satisfies
// u^{-M} = -theta, M = Msep * p^e_insep, so every (q^l - 1)th root of -theta
// in play is a plain monomial. prec is the default absolute exponent cutoff
// (u-units) for operations that would otherwise produce infinite series.
struct LaurentCfg {
    FieldPtr field;
    long long M = 1;
    long long Msep = 1;
    int e_insep = 0;
    long long prec = 0;

    long long p() const { return field->p; }
    long long q() const { return field->q(); }
};

using LaurentCfgPtr = std::shared_ptr<const LaurentCfg>;

inline LaurentCfgPtr laurent_cfg(FieldPtr f, long long Msep, int e_insep, long long prec_theta) {
    auto c = std::make_shared<LaurentCfg>();
    c->field = std::move(f);
    c->Msep = Msep;
    c->e_insep = e_insep;
    long long M = Msep;
    for (int i = 0; i < e_insep; ++i) M *= c->field->p;
    if (Msep % c->field->p == 0) fail("BadArgument", "Msep must be coprime to p");
    c->M = M;
    c->prec = prec_theta * M;
    return c;
}

inline bool same_cfg(const LaurentCfgPtr& a, const LaurentCfgPtr& b) {
    if (a == b) return true;
    return a->M == b->M && a->field->p == b->field->p && a->field->e == b->field->e &&
           a->field->L == b->field->L;
}

// Truncated Laurent series sum c_m u^m representing sum c_m (-theta)^{-m/M}.
// Invariants: stored coefficients nonzero, all stored m < prec.
class RamifiedLaurent {
public:
    LaurentCfgPtr cfg;
    std::map<long long, FFElem> terms;
    long long prec = PREC_INF;

    RamifiedLaurent() = default;
    explicit RamifiedLaurent(LaurentCfgPtr c) : cfg(std::move(c)) {}

    bool known_nonzero() const { return !terms.empty(); }
    bool is_zero_to_prec() const { return terms.empty(); }

    // u-adic valuation of the stored part; PREC_INF if none
    long long val_u() const { return terms.empty() ? PREC_INF : terms.begin()->first; }

    Val norm() const {
        if (terms.empty()) return Val::infinite();
        return Val(Rat(terms.begin()->first, cfg->M));
    }

    // certified lower bound on valuation, theta-units (uses prec when zero)
    Rat val_lower() const {
        long long m = terms.empty() ? prec : terms.begin()->first;
        if (m >= PREC_INF) return Rat::inf();
        return Rat(m, cfg->M);
    }

    void set_term(long long m, const FFElem& c) {
        if (c.is_zero() || m >= prec)
            terms.erase(m);
        else
            terms[m] = c;
    }

    void add_term(long long m, const FFElem& c) {
        if (m >= prec || c.is_zero()) return;
        auto it = terms.find(m);
        if (it == terms.end()) {
            terms.emplace(m, c);
        } else {
            it->second = it->second + c;
            if (it->second.is_zero()) terms.erase(it);
        }
    }

    RamifiedLaurent truncated(long long new_prec) const {
        RamifiedLaurent r(cfg);
        r.prec = new_prec < prec ? new_prec : prec;
        for (const auto& [m, c] : terms)
            if (m < r.prec) r.terms.emplace(m, c);
        return r;
    }

    friend bool operator==(const RamifiedLaurent& a, const RamifiedLaurent& b) {
        return a.prec == b.prec && a.terms == b.terms;
    }
};

inline RamifiedLaurent rl_zero(const LaurentCfgPtr& cfg) { return RamifiedLaurent(cfg); }

inline RamifiedLaurent rl_monomial(const LaurentCfgPtr& cfg, long long m, const FFElem& c) {
    RamifiedLaurent r(cfg);
    r.set_term(m, c);
    return r;
}

inline RamifiedLaurent rl_const(const LaurentCfgPtr& cfg, long long v) {
    return rl_monomial(cfg, 0, FFElem(cfg->field, v));
}

inline RamifiedLaurent rl_one(const LaurentCfgPtr& cfg) { return rl_const(cfg, 1); }

// (-theta)^{a_num/a_den} as the monomial u^{-a_num*(M/a_den)}
inline RamifiedLaurent rl_const_theta_power(const LaurentCfgPtr& cfg, long long a_num, long long a_den) {
    if (a_den == 0) fail("BadArgument", "zero denominator");
    if (a_den < 0) {
        a_den = -a_den;
        a_num = -a_num;
    }
    if (cfg->M % a_den != 0)
        fail("RamificationTooSmall",
             "M = " + std::to_string(cfg->M) + " not divisible by " + std::to_string(a_den));
    return rl_monomial(cfg, -a_num * (cfg->M / a_den), ff_one(cfg->field));
}

// theta^k = (-1)^k u^{-kM}
inline RamifiedLaurent rl_theta_pow(const LaurentCfgPtr& cfg, long long k) {
    FFElem c = ff_one(cfg->field);
    if (k % 2 != 0) c = -c;
    return rl_monomial(cfg, -k * cfg->M, c);
}

inline void rl_check_cfg(const RamifiedLaurent& a, const RamifiedLaurent& b) {
    if (!same_cfg(a.cfg, b.cfg)) fail("ContextMismatch", "operands from different Laurent contexts");
}

inline RamifiedLaurent rl_add(const RamifiedLaurent& a, const RamifiedLaurent& b) {
    rl_check_cfg(a, b);
    RamifiedLaurent r(a.cfg);
    r.prec = a.prec < b.prec ? a.prec : b.prec;
    for (const auto& [m, c] : a.terms)
        if (m < r.prec) r.terms.emplace(m, c);
    for (const auto& [m, c] : b.terms) r.add_term(m, c);
    return r;
}

inline RamifiedLaurent rl_neg(const RamifiedLaurent& a) {
    RamifiedLaurent r(a.cfg);
    r.prec = a.prec;
    for (const auto& [m, c] : a.terms) r.terms.emplace(m, -c);
    return r;
}

inline RamifiedLaurent rl_sub(const RamifiedLaurent& a, const RamifiedLaurent& b) {
    return rl_add(a, rl_neg(b));
}

inline RamifiedLaurent rl_scale(const RamifiedLaurent& a, const FFElem& c) {
    RamifiedLaurent r(a.cfg);
    r.prec = a.prec;
    if (c.is_zero()) return r;
    for (const auto& [m, x] : a.terms) r.set_term(m, x * c);
    return r;
}

inline RamifiedLaurent rl_mul(const RamifiedLaurent& a, const RamifiedLaurent& b) {
    rl_check_cfg(a, b);
    RamifiedLaurent r(a.cfg);
    // non-archimedean precision propagation: unknown tails enter at
    // P_a + v(b) and P_b + v(a)
    r.prec = sat_add(a.prec, b.val_u());
    long long p2 = sat_add(b.prec, a.val_u());
    if (p2 < r.prec) r.prec = p2;
    for (const auto& [ma, ca] : a.terms) {
        if (ma >= r.prec) break;
        for (const auto& [mb, cb] : b.terms) {
            long long m = ma + mb;
            if (m >= r.prec) break;
            r.add_term(m, ca * cb);
        }
    }
    return r;
}

inline RamifiedLaurent rl_pow(const RamifiedLaurent& a, long long n) {
    if (n < 0) fail("BadArgument", "rl_pow wants n >= 0");
    RamifiedLaurent r = rl_one(a.cfg);
    RamifiedLaurent base = a;
    while (n) {
        if (n & 1) r = rl_mul(r, base);
        base = rl_mul(base, base);
        n >>= 1;
    }
    return r;
}

// y with x*y = 1 to the propagated precision; monomials invert exactly,
// otherwise leading-monomial inversion plus Newton refinement
inline RamifiedLaurent rl_inv(const RamifiedLaurent& x) {
    if (x.terms.empty()) fail("ZeroDivisor", "no known nonzero coefficient");
    long long v = x.val_u();
    if (x.terms.size() == 1) {
        RamifiedLaurent r = rl_monomial(x.cfg, -v, x.terms.begin()->second.inv());
        r.prec = x.prec >= PREC_INF ? PREC_INF : x.prec - 2 * v;
        return r;
    }
    // absolute exponent cutoff for the result
    long long A = x.prec >= PREC_INF ? x.cfg->prec - v : x.prec - 2 * v;
    // Newton refinement doubles the certified window each round, so the
    // iterates are handled as exact finite sums and the cutoff is imposed
    // by hand rather than by interval propagation.
    RamifiedLaurent xe = x;
    xe.prec = PREC_INF;
    RamifiedLaurent y = rl_monomial(x.cfg, -v, x.terms.begin()->second.inv());
    // x*y = 1 + O(u^k)
    long long k = (++x.terms.begin())->first - v;
    long long bound = sat_add(A, v); // need k >= A + v
    while (k < bound) {
        long long k2 = sat_add(k, k);
        long long cut = sat_add(k2, -v) < A ? sat_add(k2, -v) : A;
        RamifiedLaurent e = rl_mul(xe, y); // 1 + r
        e.add_term(0, -ff_one(x.cfg->field));
        y = rl_sub(y, rl_mul(e, y)).truncated(cut);
        y.prec = PREC_INF;
        k = k2;
    }
    y.prec = A;
    return y.truncated(A);
}

// Frobenius n-twist: sum c_m u^m -> sum c_m^{q^n} u^{m q^n}. For n < 0 the
// stored and representable exponents must be divisible by q^{|n|}.
inline RamifiedLaurent rl_frobenius(const RamifiedLaurent& x, long long n) {
    if (n == 0) return x;
    RamifiedLaurent r(x.cfg);
    if (n > 0) {
        long long scale = 1;
        for (long long i = 0; i < n; ++i) {
            scale *= x.cfg->q();
            if (scale > PREC_INF / 4) fail("BadArgument", "twist too deep");
        }
        r.prec = x.prec >= PREC_INF ? PREC_INF : x.prec * scale;
        for (const auto& [m, c] : x.terms) r.terms.emplace(m * scale, c.frobenius(n));
        return r;
    }
    long long scale = 1;
    for (long long i = 0; i < -n; ++i) scale *= x.cfg->q();
    for (const auto& [m, c] : x.terms)
        if (m % scale != 0)
            fail("NegativeTwistUnrepresentable",
                 "exponent " + std::to_string(m) + " not divisible by q^" + std::to_string(-n));
    if (x.prec >= PREC_INF)
        r.prec = PREC_INF;
    else
        r.prec = (x.prec >= 0) ? (x.prec + scale - 1) / scale : x.prec / scale; // ceil
    for (const auto& [m, c] : x.terms) r.set_term(m / scale, c.frobenius(n));
    return r;
}

// inverse twist by widening the ramification: exponents stay, M grows by
// q^{|n|}; needs a context with the enlarged e_insep budget
inline RamifiedLaurent rl_frobenius_widened(const RamifiedLaurent& x, long long n,
                                            const LaurentCfgPtr& wide) {
    if (n >= 0) fail("BadArgument", "widening only applies to negative twists");
    long long scale = 1;
    for (long long i = 0; i < -n; ++i) scale *= x.cfg->q();
    if (wide->M != x.cfg->M * scale || wide->Msep != x.cfg->Msep)
        fail("NegativeTwistUnrepresentable", "widened context has wrong ramification");
    RamifiedLaurent r(wide);
    r.prec = x.prec;
    for (const auto& [m, c] : x.terms) r.terms.emplace(m, c.frobenius(n));
    return r;
}

// termwise theta-hyperderivative: (-theta)^a -> (-1)^n binom(a,n) (-theta)^{a-n},
// a = -m/M in Z_p; defined on separable elements only
inline RamifiedLaurent rl_theta_hyperderiv(const RamifiedLaurent& x, long long n) {
    if (x.cfg->M % x.cfg->p() == 0)
        fail("InseparableOperand", "theta-hyperderivative needs p coprime to M");
    if (n == 0) return x;
    RamifiedLaurent r(x.cfg);
    r.prec = sat_add(x.prec, n * x.cfg->M);
    long long p = x.cfg->p();
    for (const auto& [m, c] : x.terms) {
        long long t = lucas_binom(ZpArg{-m, x.cfg->M}, n, p);
        if (n % 2 != 0) t = (p - t) % p;
        if (t == 0) continue;
        FFElem cc = c * FFElem(x.cfg->field, t);
        r.add_term(m + n * x.cfg->M, cc);
    }
    return r;
}

inline Val rl_norm(const RamifiedLaurent& x) { return x.norm(); }

// certified valuation of a difference: exact if a nonzero coefficient
// survives, otherwise the precision floor with the zero flag set
struct Defect {
    bool known_zero = true; // no nonzero coefficient within precision
    Rat val;                // valuation of the first nonzero term, or precision floor
};

inline Defect rl_defect(const RamifiedLaurent& d) {
    Defect out;
    if (d.known_nonzero()) {
        out.known_zero = false;
        out.val = Rat(d.val_u(), d.cfg->M);
    } else {
        out.known_zero = true;
        out.val = d.prec >= PREC_INF ? Rat::inf() : Rat(d.prec, d.cfg->M);
    }
    return out;
}

} // namespace tmf
