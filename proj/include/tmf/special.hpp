#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tate.hpp"

namespace tmf {

inline long long pow_ll(long long b, long long e) {
    long long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

// saturating power, for valuation bounds
inline long long pow_ll_sat(long long b, long long e) {
    long long r = 1;
    while (e-- > 0) {
        if (r > RAT_CAP / b) return RAT_CAP;
        r *= b;
    }
    return r;
}

// working coefficient precision in whole theta-units
inline long long prec_theta_units(const LaurentCfgPtr& lc) { return lc->prec / lc->M; }

inline long long rat_floor(const Rat& r) {
    if (r.is_inf()) return RAT_CAP;
    long long q = r.num / r.den;
    if (q * r.den > r.num) --q;
    return q;
}

// ---------------------------------------------------------------------------
// p-adic digit expansions and MZV indices

// eventually periodic base-q expansion s = sum s_j q^j in Z_p, 0 <= s_j < q
struct PadicDigits {
    std::vector<int> pre;
    std::vector<int> per; // nonempty
    long long q = 2;

    int digit(long long i) const {
        if (i < (long long)pre.size()) return pre[size_t(i)];
        return per[size_t((i - (long long)pre.size()) % per.size())];
    }
    bool is_zero() const {
        for (int d : pre)
            if (d) return false;
        for (int d : per)
            if (d) return false;
        return true;
    }

    void canonicalize() {
        for (size_t d = 1; d < per.size(); ++d) {
            if (per.size() % d) continue;
            bool ok = true;
            for (size_t i = d; i < per.size() && ok; ++i) ok = per[i] == per[i % d];
            if (ok) {
                per.resize(d);
                break;
            }
        }
        while (!pre.empty() && pre.back() == per.back()) {
            std::rotate(per.rbegin(), per.rbegin() + 1, per.rend());
            pre.pop_back();
        }
    }

    friend bool operator==(const PadicDigits& a, const PadicDigits& b) {
        return a.q == b.q && a.pre == b.pre && a.per == b.per;
    }
};

inline PadicDigits digits_from_integer(long long n, long long q) {
    if (n < 0) fail("BadArgument", "digits_from_integer wants n >= 0");
    PadicDigits d;
    d.q = q;
    while (n > 0) {
        d.pre.push_back(int(n % q));
        n /= q;
    }
    d.per = {0};
    d.canonicalize();
    return d;
}

// digits of c/(1 - q^l) = c * sum_i q^{il}: base-q digits of c zero-padded to
// length l, repeating with empty preperiod
inline PadicDigits digits_of_fraction(long long c, long long l, long long q) {
    if (c < 0 || c > pow_ll(q, l) - 1)
        fail("DigitOutOfRange", "need 0 <= c <= q^l - 1, got c = " + std::to_string(c));
    PadicDigits d;
    d.q = q;
    d.per.assign(size_t(l), 0);
    for (long long i = 0; i < l; ++i) {
        d.per[size_t(i)] = int(c % q);
        c /= q;
    }
    d.canonicalize();
    return d;
}

// MZV index (s_1, ..., s_d), every part >= 1
struct Index {
    std::vector<long long> parts;

    Index() = default;
    Index(std::initializer_list<long long> p) : parts(p) { check(); }
    explicit Index(std::vector<long long> p) : parts(std::move(p)) { check(); }

    void check() const {
        if (parts.empty()) fail("BadArgument", "index must have depth >= 1");
        for (long long s : parts)
            if (s < 1) fail("BadArgument", "index parts must be >= 1");
    }
    long long wt() const {
        long long w = 0;
        for (long long s : parts) w += s;
        return w;
    }
    long long dep() const { return (long long)parts.size(); }
    std::string str() const {
        std::string s = "(";
        for (size_t i = 0; i < parts.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(parts[i]);
        }
        return s + ")";
    }
    friend bool operator==(const Index& a, const Index& b) { return a.parts == b.parts; }
    friend bool operator!=(const Index& a, const Index& b) { return !(a == b); }
    friend bool operator<(const Index& a, const Index& b) {
        if (a.parts.size() != b.parts.size()) return a.parts.size() < b.parts.size();
        return a.parts < b.parts;
    }
};

// ---------------------------------------------------------------------------
// weight sequences u_i (Anderson-Thakur polynomials in the built-in range,
// or a user table), gated by ||u_i|| < |theta|^{iq/(q-1)}

struct WeightProvider {
    enum Kind { ConstantOne, AndersonThakur, UserTable } kind = AndersonThakur;
    std::map<long long, std::vector<RamifiedLaurent>> table; // u_i as polynomials in t

    std::vector<RamifiedLaurent> poly(long long i, const LaurentCfgPtr& lc) const {
        std::vector<RamifiedLaurent> u;
        auto it = table.find(i);
        if (it != table.end()) {
            u = it->second;
        } else if (kind == ConstantOne) {
            u = {rl_one(lc)};
        } else if (kind == AndersonThakur) {
            // H_{i-1} = 1 for 0 <= i-1 <= q-2 and H_{q-1} = t^q - t; the
            // specialization identity at s = q forces the latter, since the
            // power sums satisfy S_d(q) = S_d(1)^q while Gamma_C(q) != 1.
            // Larger indices need a table.
            if (i > lc->q())
                fail("ATRangeUnsupported",
                     "built-in Anderson-Thakur weights stop at i = q; supply a table for i = " +
                         std::to_string(i));
            if (i == lc->q()) {
                u.assign(size_t(lc->q()) + 1, rl_zero(lc));
                u[1] = rl_neg(rl_one(lc));
                u[size_t(lc->q())] = rl_one(lc);
            } else {
                u = {rl_one(lc)};
            }
        } else {
            fail("ATRangeUnsupported", "user table lacks u_" + std::to_string(i));
        }
        Rat bound = -Rat(i * lc->q(), lc->q() - 1);
        Rat v = Rat::inf();
        for (const auto& c : u)
            if (c.known_nonzero()) v = rat_min(v, Rat(c.val_u(), lc->M));
        if (!v.is_inf() && !(v > bound))
            fail("WeightBoundViolated", "||u_" + std::to_string(i) + "|| violates the weight bound");
        return u;
    }

    Rat gauss_val(long long i, const LaurentCfgPtr& lc) const {
        Rat v = Rat::inf();
        for (const auto& c : poly(i, lc))
            if (c.known_nonzero()) v = rat_min(v, Rat(c.val_u(), lc->M));
        return v;
    }

    long long degree(long long i, const LaurentCfgPtr& lc) const {
        auto u = poly(i, lc);
        for (size_t k = u.size(); k-- > 0;)
            if (u[k].known_nonzero()) return (long long)k;
        return 0;
    }

    bool is_one(long long i, const LaurentCfgPtr& lc) const {
        auto u = poly(i, lc);
        return u.size() == 1 && u[0] == rl_one(lc);
    }
};

inline WeightProvider at_weights(WeightProvider::Kind kind) {
    WeightProvider w;
    w.kind = kind;
    return w;
}

// ---------------------------------------------------------------------------
// series environment

struct SeriesEnv {
    LaurentCfgPtr lc;
    int Nt = 40;

    long long q() const { return lc->q(); }
    long long p() const { return lc->p(); }
};

namespace detail {

// (1 - t^{q^n} / theta^{K}) with an honest slope-q tail; the t^{q^n} term
// may sit beyond the truncation order, which the certificate covers
inline TateSeries defo_factor(const SeriesEnv& env, long long n_exp, long long K) {
    long long q = env.q();
    long long deg = pow_ll_sat(q, n_exp);
    TateSeries f = ts_zero(env.lc, env.Nt);
    f.set_coeff(0, rl_one(env.lc));
    if (deg < env.Nt) {
        f.set_coeff(int(deg), rl_neg(rl_theta_pow(env.lc, -K)));
        f.tail = Tail::geometric(Rat(RAT_CAP), Rat(q));
    } else {
        f.tail = Tail::geometric(Rat(K) - Rat(q) * Rat(deg - env.Nt), Rat(q));
    }
    return f;
}

} // namespace detail

// D_i = prod_{n=0}^{i-1} (1 - t^{q^n}/theta^{q^i}); D_0 = 1. Satisfies the
// recursion D_i = (1 - t/theta^{q^i}) D_{i-1}^q.
inline TateSeries bbD(const SeriesEnv& env, long long i) {
    if (i < 0) fail("BadArgument", "bbD wants i >= 0");
    TateSeries r = ts_one(env.lc, env.Nt);
    long long K = pow_ll(env.q(), i);
    for (long long n = 0; n < i; ++n) r = ts_mul(r, detail::defo_factor(env, n, K));
    return r;
}

// partial deformation product over digit positions 1..max_pos (exact object,
// used by the Lemma 3.3 machinery)
inline TateSeries gfun_upto(const SeriesEnv& env, const PadicDigits& s, long long max_pos) {
    TateSeries r = ts_one(env.lc, env.Nt);
    for (long long i = 1; i <= max_pos; ++i) {
        int d = s.digit(i);
        if (d == 0) continue;
        TateSeries f = bbD(env, i);
        for (int k = 0; k < d; ++k) r = ts_mul(r, f);
    }
    return r;
}

// G(s) = prod_i D_i^{s_i}
inline TateSeries gfun(const SeriesEnv& env, const PadicDigits& s) {
    if (s.is_zero()) return ts_one(env.lc, env.Nt);
    long long precq = prec_theta_units(env.lc);
    long long I = 1;
    while (pow_ll_sat(env.q(), I + 1) < precq + 1) ++I;
    TateSeries r = gfun_upto(env, s, I);
    // omitted factors differ from 1 by valuation >= q^{I+1} >= precision
    for (auto& c : r.a)
        if (c.prec > env.lc->prec) c = c.truncated(env.lc->prec);
    bool omitted = false;
    if (s.per != std::vector<int>{0}) {
        omitted = true;
    } else {
        for (long long i = I + 1; i < (long long)s.pre.size(); ++i)
            if (s.pre[size_t(i)]) omitted = true;
    }
    if (omitted) {
        // every t-degree unit of the full product costs at least q in
        // valuation, so (qNt, q) certifies the true G past the cutoff
        r.tail = Tail::geometric(Rat(env.q()) * Rat(env.Nt), Rat(env.q()));
    }
    return r;
}

// Omega_l^{(-j)} by the closed form
//   (-theta)^{-q^{l-j}/(q^l-1)} prod_{i>=1} (1 - t/theta^{q^{il-j}}),
// 0 <= j <= l-1; omega(env,1,0) is Omega itself.
inline TateSeries omega(const SeriesEnv& env, long long l, long long j) {
    if (l < 1 || j < 0 || j >= l) fail("BadArgument", "omega wants l >= 1, 0 <= j < l");
    long long q = env.q();
    long long precq = prec_theta_units(env.lc);
    long long I = 1;
    while (pow_ll_sat(q, (I + 1) * l - j) < precq + q + 1) ++I;
    TateSeries r = ts_one(env.lc, env.Nt);
    for (long long i = 1; i <= I; ++i)
        r = ts_mul(r, detail::defo_factor(env, 0, pow_ll(q, i * l - j)));
    r = ts_scale(r, rl_const_theta_power(env.lc, -pow_ll(q, l - j), pow_ll(q, l) - 1));
    for (auto& x : r.a)
        if (x.prec > env.lc->prec) x = x.truncated(env.lc->prec);
    // true coefficients decay superexponentially: a_m collects the m smallest
    // factor exponents q^{il-j}
    Rat vA = Rat(-pow_ll(q, l - j), pow_ll(q, l) - 1);
    for (long long i = 1; i <= env.Nt; ++i) {
        vA = vA + Rat(pow_ll_sat(q, i * l - j));
        if (vA > Rat(RAT_CAP)) break;
    }
    r.tail = Tail::supergeometric(vA, Rat(pow_ll_sat(q, (env.Nt + 1) * l - j)));
    return r;
}

// Gamma(s) = prod_i (prod_{j<i} (1 - theta^{q^j - q^i}))^{s_i} in k_infty
inline RamifiedLaurent gamma_arith(const SeriesEnv& env, const PadicDigits& s) {
    long long q = env.q();
    long long precq = prec_theta_units(env.lc);
    RamifiedLaurent r = rl_one(env.lc);
    long long I = 1;
    while (pow_ll_sat(q, I + 1) - pow_ll_sat(q, I) < precq + 1) ++I;
    for (long long i = 1; i <= I; ++i) {
        int d = s.digit(i);
        if (d == 0) continue;
        RamifiedLaurent f = rl_one(env.lc);
        for (long long j = 0; j < i; ++j)
            f = rl_mul(f, rl_sub(rl_one(env.lc), rl_theta_pow(env.lc, pow_ll(q, j) - pow_ll(q, i))))
                    .truncated(env.lc->prec);
        for (int k = 0; k < d; ++k) r = rl_mul(r, f);
        r = r.truncated(env.lc->prec);
    }
    return r.truncated(env.lc->prec);
}

// Gamma_C(s) = prod_i D_i^{s_i} with D_i = prod_{j<i}(theta^{q^i} - theta^{q^j}),
// an exact monic polynomial in theta
inline RamifiedLaurent gamma_carlitz(const SeriesEnv& env, long long s) {
    if (s < 1) fail("BadArgument", "gamma_carlitz wants s >= 1");
    PadicDigits d = digits_from_integer(s, env.q());
    long long q = env.q();
    RamifiedLaurent r = rl_one(env.lc);
    for (long long i = 1; i < (long long)d.pre.size(); ++i) {
        int di = d.digit(i);
        if (di == 0) continue;
        RamifiedLaurent f = rl_one(env.lc);
        for (long long j = 0; j < i; ++j)
            f = rl_mul(f, rl_sub(rl_theta_pow(env.lc, pow_ll(q, i)), rl_theta_pow(env.lc, pow_ll(q, j))));
        for (int k = 0; k < di; ++k) r = rl_mul(r, f);
    }
    return r;
}

// independent Carlitz period oracle
//   pi~ = (-theta)^{q/(q-1)} prod_{i>=1} (1 - theta^{1-q^i})^{-1}
inline RamifiedLaurent carlitz_pi(const SeriesEnv& env) {
    long long q = env.q();
    long long precq = prec_theta_units(env.lc);
    RamifiedLaurent r = rl_const_theta_power(env.lc, q, q - 1);
    long long I = 1;
    while (pow_ll_sat(q, I + 1) - 1 < precq + 1) ++I;
    for (long long i = 1; i <= I; ++i) {
        RamifiedLaurent f = rl_sub(rl_one(env.lc), rl_theta_pow(env.lc, 1 - pow_ll(q, i)));
        r = rl_mul(r, rl_inv(f.truncated(env.lc->prec)));
    }
    return r.truncated(env.lc->prec);
}

// ---------------------------------------------------------------------------
// zeta values by brute force over monic polynomials

struct ZetaValue {
    RamifiedLaurent value;
    Rat tail_val; // certified valuation of the omitted strata
};

namespace detail {

// S_d(s) = sum over the q^d monic a of degree d of a^{-s}; dense fast path
// for prime base fields (the acceptance configurations)
inline std::vector<RamifiedLaurent> power_sums(const SeriesEnv& env, long long s, long long Dmax) {
    long long q = env.q();
    if (env.lc->field->e != 1)
        fail("BudgetExceeded", "brute-force zeta sums need a prime base field");
    long long p = env.p();
    long long n = prec_theta_units(env.lc) + 1;
    std::vector<RamifiedLaurent> out;
    std::vector<long long> a, apow, tmp, inv, acc;
    for (long long d = 0; d <= Dmax; ++d) {
        long long count = pow_ll(q, d);
        if (count > 2000000) fail("BudgetExceeded", "stratum q^d exceeds the brute-force cap");
        acc.assign(size_t(n), 0);
        long long ds = d * s;
        for (long long code = 0; code < count; ++code) {
            a.assign(size_t(d) + 1, 0);
            long long c = code;
            for (long long k = 0; k < d; ++k) {
                a[size_t(k)] = c % p;
                c /= p;
            }
            a[size_t(d)] = 1;
            apow.assign(1, 1);
            for (long long k = 0; k < s; ++k) {
                tmp.assign(apow.size() + a.size() - 1, 0);
                for (size_t x = 0; x < apow.size(); ++x) {
                    if (!apow[x]) continue;
                    for (size_t y = 0; y < a.size(); ++y)
                        tmp[x + y] = (tmp[x + y] + apow[x] * a[y]) % p;
                }
                apow.swap(tmp);
            }
            // a^{-s} = theta^{-ds} / (1 + b_1 x + ...), x = 1/theta,
            // b_j = coefficient of theta^{ds-j} in a^s
            inv.assign(size_t(n), 0);
            inv[0] = 1;
            for (long long k = 1; k < n; ++k) {
                long long t = 0;
                for (long long j = 1; j <= k && j <= ds; ++j) {
                    long long bj = apow[size_t(ds - j)];
                    if (bj) t = (t + bj * inv[size_t(k - j)]) % p;
                }
                inv[size_t(k)] = (p - t) % p;
            }
            for (long long k = 0; k < n; ++k) acc[size_t(k)] = (acc[size_t(k)] + inv[size_t(k)]) % p;
        }
        RamifiedLaurent S(env.lc);
        S.prec = std::min((ds + n) * env.lc->M, env.lc->prec);
        for (long long k = 0; k < n; ++k) {
            if (!acc[size_t(k)]) continue;
            FFElem cf(env.lc->field, acc[size_t(k)]);
            if ((ds + k) % 2 != 0) cf = -cf; // theta^{-(ds+k)} = (-1)^{ds+k} u^{(ds+k)M}
            S.set_term((ds + k) * env.lc->M, cf);
        }
        out.push_back(S);
    }
    return out;
}

} // namespace detail

// multiple zeta value: DP over strictly decreasing degree tuples with
// per-degree power sums; tail bound is the minimal omitted valuation
inline ZetaValue mzv(const SeriesEnv& env, const Index& s, long long Dmax) {
    long long r = s.dep();
    std::map<long long, std::vector<RamifiedLaurent>> S;
    for (long long part : s.parts)
        if (!S.count(part)) S[part] = detail::power_sums(env, part, Dmax);
    std::vector<RamifiedLaurent> f(size_t(Dmax) + 1, rl_zero(env.lc));
    for (long long d = 0; d <= Dmax; ++d) f[size_t(d)] = S[s.parts.back()][size_t(d)];
    for (long long j = r - 2; j >= 0; --j) {
        std::vector<RamifiedLaurent> g(size_t(Dmax) + 1, rl_zero(env.lc));
        RamifiedLaurent run = rl_zero(env.lc);
        run.prec = env.lc->prec;
        for (long long d = 0; d <= Dmax; ++d) {
            g[size_t(d)] = rl_mul(S[s.parts[size_t(j)]][size_t(d)], run);
            run = rl_add(run, f[size_t(d)]);
        }
        f.swap(g);
    }
    RamifiedLaurent total = rl_zero(env.lc);
    total.prec = env.lc->prec;
    for (long long d = 0; d <= Dmax; ++d) total = rl_add(total, f[size_t(d)]);
    Rat tail = Rat((Dmax + 1) * s.parts[0]);
    for (long long i = 1; i < r; ++i) tail = tail + Rat((r - 1 - i) * s.parts[size_t(i)]);
    ZetaValue zv;
    long long cut = rat_floor(tail * Rat(env.lc->M));
    zv.value = total.truncated(std::min(cut, total.prec));
    zv.tail_val = tail;
    return zv;
}

inline ZetaValue carlitz_zeta(const SeriesEnv& env, long long s, long long Dmax) {
    if (s < 1) fail("BadArgument", "zeta wants s >= 1");
    return mzv(env, Index{s}, Dmax);
}

// ---------------------------------------------------------------------------
// Anderson-Thakur type series

// cache of 1/L_i, L_i = (t-theta)^{(1)}...(t-theta)^{(i)}, with certificates
inline std::vector<TateSeries> inv_L_cache(const SeriesEnv& env, long long imax) {
    std::vector<TateSeries> invL;
    invL.push_back(ts_one(env.lc, env.Nt));
    for (long long i = 1; i <= imax; ++i) {
        long long K = pow_ll(env.q(), i);
        // 1/(t - theta^{q^i}) = -theta^{-q^i} / (1 - t*theta^{-q^i})
        TateSeries g = ts_geometric(env.lc, env.Nt, rl_theta_pow(env.lc, -K));
        g = ts_scale(g, rl_neg(rl_theta_pow(env.lc, -K)));
        invL.push_back(ts_mul(invL.back(), g));
    }
    return invL;
}

namespace detail {

// val 1/L_i = q + q^2 + ... + q^i
inline Rat lambda_val(long long q, long long i) {
    Rat v(0);
    for (long long k = 1; k <= i; ++k) {
        v = v + Rat(pow_ll_sat(q, k));
        if (v > Rat(RAT_CAP)) return Rat(RAT_CAP);
    }
    return v;
}

inline void decreasing_tuples(long long depth, long long imax, std::vector<long long>& cur,
                              const std::function<void(const std::vector<long long>&)>& cb) {
    if ((long long)cur.size() == depth) {
        cb(cur);
        return;
    }
    long long hi = cur.empty() ? imax : cur.back() - 1;
    for (long long i = hi; i >= depth - 1 - (long long)cur.size(); --i) {
        cur.push_back(i);
        decreasing_tuples(depth, imax, cur, cb);
        cur.pop_back();
    }
}

// fold the omitted-terms bound into a computed partial sum: Gauss floor
// `floor_val`, coefficient slope q past degree offset `deg_off`
inline void apply_sum_bound(const SeriesEnv& env, TateSeries& total, Rat floor_val, long long deg_off) {
    for (auto& c : total.a)
        if (c.prec > env.lc->prec) c = c.truncated(env.lc->prec);
    Rat vA = floor_val + Rat(env.q()) * Rat(env.Nt - deg_off);
    if (total.tail.usable() && total.tail.kind != Tail::Exact) {
        total.tail.vA = rat_min(total.tail.vA, rat_cap_down(vA));
        total.tail.vB = rat_min(total.tail.vB, Rat(env.q()));
        total.tail.kind = Tail::Geometric;
    } else {
        total.tail = Tail::geometric(vA, Rat(env.q()));
    }
}

} // namespace detail

// zeta^AT(s) = sum_{i_1 > ... > i_d >= 0} H_{s_1-1}^{(i_1)} ... H_{s_d-1}^{(i_d)}
//              / (L_{i_1}^{s_1} ... L_{i_d}^{s_d})
inline TateSeries at_series(const SeriesEnv& env, const Index& s, const WeightProvider& w) {
    long long q = env.q();
    long long d = s.dep();
    long long precq = prec_theta_units(env.lc);
    auto factor_val = [&](long long m, long long i) {
        // Gauss valuation bound of H^{(i)}/L_i^{s_m}; when the q^i powers
        // saturate, fall back to the (positive) growth form q^i * delta
        Rat vH = w.gauss_val(s.parts[size_t(m)], env.lc);
        long long qi = pow_ll_sat(q, i);
        Rat lam = detail::lambda_val(q, i);
        if (qi >= RAT_CAP || lam >= Rat(RAT_CAP)) {
            // s*lambda(i) + q^i vH = q^i * dv - sq/(q-1); the saturated power
            // underestimates q^i and dv > 0, so this stays a lower bound
            Rat dv = Rat(s.parts[size_t(m)] * q, q - 1);
            if (!vH.is_inf()) dv = dv + vH;
            if (!(dv > Rat(0))) fail("WeightBoundViolated", "factor fails the convergence bound");
            return rat_cap_down(Rat(qi) * dv - Rat(s.parts[size_t(m)] * q, q - 1));
        }
        Rat v = Rat(s.parts[size_t(m)]) * lam;
        if (!vH.is_inf()) v = v + Rat(qi) * vH;
        return rat_cap_down(v);
    };
    auto omitted_val = [&](long long im) {
        Rat om = factor_val(0, im + 1);
        for (long long m = 1; m < d; ++m) om = om + factor_val(m, d - 1 - m);
        return om;
    };
    long long imax = d - 1;
    while (imax < 30 && omitted_val(imax) < Rat(precq)) ++imax;
    Rat floor_val = rat_min(Rat(precq), omitted_val(imax));
    auto invL = inv_L_cache(env, imax + 1);
    long long degH = 0;
    for (long long m = 0; m < d; ++m) degH += w.degree(s.parts[size_t(m)], env.lc);
    TateSeries total = ts_zero(env.lc, env.Nt);
    std::vector<long long> cur;
    detail::decreasing_tuples(d, imax, cur, [&](const std::vector<long long>& tup) {
        TateSeries term = ts_one(env.lc, env.Nt);
        for (long long m = 0; m < d; ++m) {
            term = ts_mul(term, ts_pow(invL[size_t(tup[size_t(m)])], s.parts[size_t(m)]));
            if (!w.is_one(s.parts[size_t(m)], env.lc)) {
                TateSeries H = ts_from_poly(env.lc, env.Nt, w.poly(s.parts[size_t(m)], env.lc));
                H.tail = Tail::exact();
                term = ts_mul(term, ts_twist(H, tup[size_t(m)]));
            }
        }
        total = ts_add(total, term);
    });
    detail::apply_sum_bound(env, total, floor_val, degH);
    return total;
}

// L_{s,jl} = sum_{i_l > ... > i_{j-1} >= 0} (Omega^{s_{j-1}} u_{s_{j-1}})^{(i_{j-1})}
//            ... (Omega^{s_l} u_{s_l})^{(i_l)}
// for 1 <= l <= j <= dep(s)+1; the empty range gives 1
inline TateSeries cmpl_L(const SeriesEnv& env, const Index& s, long long j, long long l,
                         const WeightProvider& w) {
    if (!(1 <= l && l <= j && j <= s.dep() + 1))
        fail("BadArgument", "cmpl_L wants 1 <= l <= j <= dep(s)+1");
    if (j == l) return ts_one(env.lc, env.Nt);
    long long q = env.q();
    long long precq = prec_theta_units(env.lc);
    long long d = j - l; // factors at positions l..j-1 (1-based parts)
    TateSeries Om = omega(env, 1, 0);
    std::vector<TateSeries> base;
    std::vector<Rat> delta;
    long long degH = 0;
    for (long long m = l; m <= j - 1; ++m) {
        long long part = s.parts[size_t(m - 1)];
        TateSeries H = ts_from_poly(env.lc, env.Nt, w.poly(part, env.lc));
        H.tail = Tail::exact();
        base.push_back(ts_mul(ts_pow(Om, part), H));
        Rat dv = Rat(part * q, q - 1);
        Rat vH = w.gauss_val(part, env.lc);
        if (!vH.is_inf()) dv = dv + vH;
        if (!(dv > Rat(0))) fail("WeightBoundViolated", "factor fails the convergence bound");
        delta.push_back(dv);
        degH += w.degree(part, env.lc);
    }
    auto omitted_val = [&](long long im) {
        // pow_ll_sat underestimates q^i; with delta > 0 that stays conservative
        Rat om = rat_cap_down(Rat(pow_ll_sat(q, im + 1)) * delta[0]);
        for (long long m = 1; m < d; ++m)
            om = om + rat_cap_down(Rat(pow_ll_sat(q, d - 1 - m)) * delta[size_t(m)]);
        return om;
    };
    long long imax = d - 1;
    while (imax < 30 && omitted_val(imax) < Rat(precq)) ++imax;
    Rat floor_val = rat_min(Rat(precq), omitted_val(imax));
    TateSeries total = ts_zero(env.lc, env.Nt);
    std::vector<long long> cur;
    detail::decreasing_tuples(d, imax, cur, [&](const std::vector<long long>& tup) {
        TateSeries term = ts_twist(base[0], tup[0]);
        for (long long m = 1; m < d; ++m)
            term = ts_mul(term, ts_twist(base[size_t(m)], tup[size_t(m)]));
        total = ts_add(total, term);
    });
    detail::apply_sum_bound(env, total, floor_val, degH);
    return total;
}

} // namespace tmf
