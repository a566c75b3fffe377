#pragma once

#include <optional>
#include <vector>

#include "laurent.hpp"

namespace tmf {

// Coefficient-decay certificate: for j >= Nt the absent coefficients satisfy
// val_theta(a_j) >= vA + vB*(j - Nt). Exact means no nonzero coefficients at
// or beyond Nt at all; None means no information (evaluation at t = theta is
// then refused).
struct Tail {
    enum Kind { None, Exact, Geometric, SuperGeometric } kind = None;
    Rat vA;
    Rat vB;

    static Tail none() { return Tail{}; }
    static Tail exact() { return Tail{Exact, Rat::inf(), Rat::inf()}; }
    static Tail geometric(Rat a, Rat b) { return Tail{Geometric, rat_cap_down(a), rat_cap_slope(b)}; }
    static Tail supergeometric(Rat a, Rat b) {
        return Tail{SuperGeometric, rat_cap_down(a), rat_cap_slope(b)};
    }
    bool usable() const { return kind != None; }
};

// Truncated power series in t over RamifiedLaurent coefficients; the model
// of T (and of E when a tail certificate is attached).
class TateSeries {
public:
    LaurentCfgPtr cfg;
    std::vector<RamifiedLaurent> a; // indices 0 .. Nt-1
    Tail tail;

    TateSeries() = default;
    TateSeries(LaurentCfgPtr c, int Nt) : cfg(std::move(c)), a(size_t(Nt), RamifiedLaurent()) {
        for (auto& x : a) x = rl_zero(cfg);
    }

    int Nt() const { return int(a.size()); }

    const RamifiedLaurent& coeff(int i) const { return a[size_t(i)]; }
    void set_coeff(int i, const RamifiedLaurent& c) { a[size_t(i)] = c; }

    bool is_zero_to_prec() const {
        for (const auto& x : a)
            if (x.known_nonzero()) return false;
        return true;
    }

    // highest stored index with a known nonzero coefficient, -1 if none
    int stored_degree() const {
        for (int i = Nt() - 1; i >= 0; --i)
            if (a[size_t(i)].known_nonzero()) return i;
        return -1;
    }
};

inline TateSeries ts_zero(const LaurentCfgPtr& cfg, int Nt) {
    TateSeries f(cfg, Nt);
    f.tail = Tail::exact();
    return f;
}

inline TateSeries ts_one(const LaurentCfgPtr& cfg, int Nt) {
    TateSeries f = ts_zero(cfg, Nt);
    f.set_coeff(0, rl_one(cfg));
    return f;
}

inline TateSeries ts_from_poly(const LaurentCfgPtr& cfg, int Nt,
                               const std::vector<RamifiedLaurent>& coeffs) {
    if (int(coeffs.size()) > Nt) fail("BadArgument", "polynomial degree exceeds truncation order");
    TateSeries f = ts_zero(cfg, Nt);
    for (size_t i = 0; i < coeffs.size(); ++i) f.set_coeff(int(i), coeffs[i]);
    return f;
}

// t - c as an exact polynomial
inline TateSeries ts_linear(const LaurentCfgPtr& cfg, int Nt, const RamifiedLaurent& c) {
    TateSeries f = ts_zero(cfg, Nt);
    f.set_coeff(0, rl_neg(c));
    f.set_coeff(1, rl_one(cfg));
    return f;
}

namespace detail {

// rebase a tail anchored at oldNt to a smaller anchor, absorbing the stored
// coefficients that fall into the widened tail region
inline Tail tail_rebase(const TateSeries& f, int newNt) {
    if (!f.tail.usable() || newNt >= f.Nt()) return f.tail;
    if (f.tail.kind == Tail::Exact) {
        // stored coefficients in [newNt, Nt) may be nonzero
        Rat vA = Rat::inf();
        bool any = false;
        for (int j = newNt; j < f.Nt(); ++j)
            if (f.coeff(j).known_nonzero()) {
                any = true;
                vA = rat_min(vA, f.coeff(j).val_lower());
            }
        if (!any) return Tail::exact();
        return Tail::geometric(rat_cap_down(vA), Rat(0));
    }
    Rat vB = f.tail.vB;
    Rat vA = f.tail.vA - vB * Rat(f.Nt() - newNt);
    for (int j = newNt; j < f.Nt(); ++j)
        vA = rat_min(vA, f.coeff(j).val_lower() - vB * Rat(j - newNt));
    Tail t = f.tail;
    t.vA = rat_cap_down(vA);
    return t;
}

// lower bound profile of coefficient j (valid for every j >= 0)
inline Rat profile(const TateSeries& f, long long j) {
    if (j < f.Nt()) return f.coeff(int(j)).val_lower();
    if (!f.tail.usable()) fail("Internal", "profile on certificate-free series");
    if (f.tail.kind == Tail::Exact) return Rat::inf();
    return f.tail.vA + f.tail.vB * Rat(j - f.Nt());
}

// sound tail certificate for a product, anchored at Ntr = min(Ntf, Ntg)
inline Tail tail_mul(const TateSeries& f, const TateSeries& g) {
    if (!f.tail.usable() || !g.tail.usable()) return Tail::none();
    int Nf = f.Nt(), Ng = g.Nt();
    int Nr = Nf < Ng ? Nf : Ng;
    bool fex = f.tail.kind == Tail::Exact, gex = g.tail.kind == Tail::Exact;
    if (fex && gex && f.stored_degree() + g.stored_degree() < Nr) return Tail::exact();

    Rat vB = Rat::inf();
    if (!fex) vB = rat_min(vB, f.tail.vB);
    if (!gex) vB = rat_min(vB, g.tail.vB);
    if (vB.is_inf()) vB = Rat(0); // both exact but the product overflows Nr

    // scan the j-range where non-linear pieces live; beyond Nf+Ng every
    // piece is linear with slope >= vB and anchored inside the scan
    Rat vA = Rat::inf();
    long long jmax = (long long)Nf + Ng;
    for (long long j = Nr; j <= jmax; ++j) {
        Rat b = Rat::inf();
        // stored x stored
        for (long long x = j < Ng ? 0 : j - Ng + 1; x < Nf && x <= j; ++x) {
            long long y = j - x;
            if (y >= Ng) continue;
            Rat t = f.coeff(int(x)).val_lower();
            if (t.is_inf()) continue;
            Rat u = g.coeff(int(y)).val_lower();
            if (u.is_inf()) continue;
            b = rat_min(b, t + u);
        }
        // stored(f) x tail(g)
        if (!gex)
            for (long long x = 0; x < Nf && j - x >= Ng; ++x) {
                Rat t = f.coeff(int(x)).val_lower();
                if (t.is_inf()) continue;
                b = rat_min(b, t + g.tail.vA + g.tail.vB * Rat(j - x - Ng));
            }
        // tail(f) x stored(g)
        if (!fex)
            for (long long y = 0; y < Ng && j - y >= Nf; ++y) {
                Rat u = g.coeff(int(y)).val_lower();
                if (u.is_inf()) continue;
                b = rat_min(b, u + f.tail.vA + f.tail.vB * Rat(j - y - Nf));
            }
        // tail x tail
        if (!fex && !gex && j >= (long long)Nf + Ng) {
            Rat t = f.tail.vA + g.tail.vA + rat_min(f.tail.vB, g.tail.vB) * Rat(j - Nf - Ng);
            b = rat_min(b, t);
        }
        if (!b.is_inf()) vA = rat_min(vA, b - vB * Rat(j - Nr));
    }
    if (vA.is_inf()) return Tail::exact();
    Tail::Kind k = (f.tail.kind == Tail::SuperGeometric && g.tail.kind == Tail::SuperGeometric)
                       ? Tail::SuperGeometric
                       : Tail::Geometric;
    Tail t;
    t.kind = k;
    t.vA = rat_cap_down(vA);
    t.vB = rat_cap_slope(vB);
    return t;
}

} // namespace detail

inline void ts_check_cfg(const TateSeries& f, const TateSeries& g) {
    if (!same_cfg(f.cfg, g.cfg)) fail("ContextMismatch", "Tate series from different contexts");
}

inline TateSeries ts_add(const TateSeries& f, const TateSeries& g) {
    ts_check_cfg(f, g);
    int N = f.Nt() < g.Nt() ? f.Nt() : g.Nt();
    TateSeries r(f.cfg, N);
    for (int i = 0; i < N; ++i) r.set_coeff(i, rl_add(f.coeff(i), g.coeff(i)));
    Tail tf = detail::tail_rebase(f, N), tg = detail::tail_rebase(g, N);
    if (!tf.usable() || !tg.usable()) {
        r.tail = Tail::none();
    } else if (tf.kind == Tail::Exact && tg.kind == Tail::Exact) {
        r.tail = Tail::exact();
    } else if (tf.kind == Tail::Exact) {
        r.tail = tg;
    } else if (tg.kind == Tail::Exact) {
        r.tail = tf;
    } else {
        r.tail.kind = (tf.kind == Tail::SuperGeometric && tg.kind == Tail::SuperGeometric)
                          ? Tail::SuperGeometric
                          : Tail::Geometric;
        r.tail.vA = rat_min(tf.vA, tg.vA);
        r.tail.vB = rat_min(tf.vB, tg.vB);
    }
    return r;
}

inline TateSeries ts_neg(const TateSeries& f) {
    TateSeries r = f;
    for (auto& c : r.a) c = rl_neg(c);
    return r;
}

inline TateSeries ts_sub(const TateSeries& f, const TateSeries& g) { return ts_add(f, ts_neg(g)); }

inline TateSeries ts_scale(const TateSeries& f, const RamifiedLaurent& s) {
    TateSeries r = f;
    for (auto& c : r.a) c = rl_mul(c, s);
    if (r.tail.usable() && r.tail.kind != Tail::Exact) {
        Rat v = s.val_lower();
        r.tail.vA = rat_cap_down(r.tail.vA + v);
    }
    return r;
}

inline TateSeries ts_mul(const TateSeries& f, const TateSeries& g) {
    ts_check_cfg(f, g);
    int N = f.Nt() < g.Nt() ? f.Nt() : g.Nt();
    TateSeries r(f.cfg, N);
    for (int i = 0; i < N; ++i) {
        RamifiedLaurent s = rl_zero(f.cfg);
        for (int x = 0; x <= i; ++x) s = rl_add(s, rl_mul(f.coeff(x), g.coeff(i - x)));
        r.set_coeff(i, s);
    }
    r.tail = detail::tail_mul(f, g);
    return r;
}

inline TateSeries ts_pow(const TateSeries& f, long long n) {
    if (n < 0) fail("BadArgument", "ts_pow wants n >= 0");
    TateSeries r = ts_one(f.cfg, f.Nt());
    TateSeries b = f;
    while (n) {
        if (n & 1) r = ts_mul(r, b);
        b = ts_mul(b, b);
        n >>= 1;
    }
    return r;
}

// truncated inverse; the result carries no tail certificate (inverses of
// entire series are generally not entire)
inline TateSeries ts_inv(const TateSeries& f) {
    if (!f.coeff(0).known_nonzero()) fail("NotAUnit", "constant coefficient not invertible");
    TateSeries r(f.cfg, f.Nt());
    RamifiedLaurent c0 = rl_inv(f.coeff(0));
    r.set_coeff(0, c0);
    for (int j = 1; j < f.Nt(); ++j) {
        RamifiedLaurent s = rl_zero(f.cfg);
        for (int k = 1; k <= j; ++k) s = rl_add(s, rl_mul(f.coeff(k), r.coeff(j - k)));
        r.set_coeff(j, rl_neg(rl_mul(c0, s)));
    }
    r.tail = Tail::none();
    return r;
}

// coefficientwise Frobenius twist; t-exponents unchanged
inline TateSeries ts_twist(const TateSeries& f, long long n) {
    TateSeries r(f.cfg, f.Nt());
    for (int i = 0; i < f.Nt(); ++i) r.set_coeff(i, rl_frobenius(f.coeff(i), n));
    r.tail = f.tail;
    if (r.tail.usable() && r.tail.kind != Tail::Exact) {
        // twisting raises coefficients to q^n: valuations scale by q^n
        Rat s(1);
        long long q = f.cfg->q();
        if (n >= 0)
            for (long long i = 0; i < n; ++i) s = s * Rat(q);
        else
            for (long long i = 0; i < -n; ++i) s = s * Rat(1, q);
        r.tail.vA = rat_cap_down(r.tail.vA * s);
        r.tail.vB = rat_cap_slope(r.tail.vB * s);
    }
    return r;
}

inline TateSeries ts_twist_widened(const TateSeries& f, long long n, const LaurentCfgPtr& wide) {
    TateSeries r(wide, f.Nt());
    for (int i = 0; i < f.Nt(); ++i) r.set_coeff(i, rl_frobenius_widened(f.coeff(i), n, wide));
    r.tail = f.tail;
    if (r.tail.usable() && r.tail.kind != Tail::Exact) {
        Rat s(1);
        for (long long i = 0; i < -n; ++i) s = s * Rat(1, f.cfg->q());
        r.tail.vA = rat_cap_down(r.tail.vA * s);
        r.tail.vB = rat_cap_slope(r.tail.vB * s);
    }
    return r;
}

// n-th hyperderivative in t: a_i -> binom(i, n) a_{i+n}
inline TateSeries ts_hyperderiv(const TateSeries& f, long long n) {
    if (n < 0) fail("BadArgument", "hyperderivative order must be >= 0");
    if (n == 0) return f;
    if (n >= f.Nt()) fail("BadArgument", "hyperderivative order exceeds truncation");
    int N = f.Nt() - int(n);
    TateSeries r(f.cfg, N);
    long long p = f.cfg->p();
    for (int i = 0; i < N; ++i) {
        long long b = lucas_binom(i + n, n, p);
        if (b == 0) {
            r.set_coeff(i, rl_zero(f.cfg));
            continue;
        }
        r.set_coeff(i, rl_scale(f.coeff(i + int(n)), FFElem(f.cfg->field, b)));
    }
    // |binom| <= 1, so the shifted certificate transfers with the new anchor
    r.tail = f.tail;
    return r;
}

// coefficientwise theta-hyperderivative (each a_i in k_infty^sep)
inline TateSeries ts_theta_hyperderiv(const TateSeries& f, long long n) {
    TateSeries r(f.cfg, f.Nt());
    for (int i = 0; i < f.Nt(); ++i) r.set_coeff(i, rl_theta_hyperderiv(f.coeff(i), n));
    r.tail = f.tail;
    if (r.tail.usable() && r.tail.kind != Tail::Exact)
        r.tail.vA = rat_cap_down(r.tail.vA + Rat(n));
    return r;
}

// sup-norm valuation on the closed unit disc: min over known coefficients
// and the tail bound
inline Val ts_gauss_norm(const TateSeries& f) {
    Val v = Val::infinite();
    bool have = false;
    Rat best;
    for (const auto& c : f.a) {
        if (!c.known_nonzero()) continue;
        Rat w = Rat(c.val_u(), f.cfg->M);
        if (!have || w < best) {
            best = w;
            have = true;
        }
    }
    if (f.tail.usable() && f.tail.kind != Tail::Exact)
        if (!have || f.tail.vA < best) {
            best = f.tail.vA;
            have = true;
        }
    return have ? Val(best) : Val::infinite();
}

struct ThetaValue {
    RamifiedLaurent value;
    Val err; // certified valuation bound on the omitted tail
};

// partial_t^{(n)} f |_{t=theta} with a certified error valuation from the
// tail certificate (ultrametric max bound over the omitted terms)
inline ThetaValue ts_eval_theta(const TateSeries& f, long long n) {
    if (!f.tail.usable())
        fail("DivergentTail", "evaluation at t=theta requires a tail certificate");
    Rat errv = Rat::inf();
    if (f.tail.kind != Tail::Exact) {
        if (!(f.tail.vB > Rat(1)))
            fail("DivergentTail", "tail decay slope must exceed one theta-unit per degree");
        errv = f.tail.vA - Rat(f.Nt()) + Rat(n);
    }
    long long p = f.cfg->p();
    RamifiedLaurent acc = rl_zero(f.cfg);
    acc.prec = PREC_INF;
    for (int i = int(n); i < f.Nt(); ++i) {
        long long b = lucas_binom(i, n, p);
        if (b == 0) continue;
        RamifiedLaurent term = rl_mul(f.coeff(i), rl_theta_pow(f.cfg, i - n));
        term = rl_scale(term, FFElem(f.cfg->field, b));
        acc = rl_add(acc, term);
    }
    if (!errv.is_inf()) {
        // fold the tail error into the carried precision (round down)
        long long cut = (long long)((__int128)errv.num * f.cfg->M / errv.den);
        while (Rat(cut, f.cfg->M) > errv) --cut;
        acc = acc.truncated(cut);
        acc.prec = cut < acc.prec ? cut : acc.prec;
    }
    return ThetaValue{acc, errv.is_inf() ? Val::infinite() : Val(errv)};
}

// certified valuation of f - g seen as a defect: exact valuation if some
// coefficient is known nonzero, else the precision floor
inline Defect ts_defect(const TateSeries& f, const TateSeries& g) {
    TateSeries d = ts_sub(f, g);
    Defect out;
    out.known_zero = true;
    out.val = Rat::inf();
    for (const auto& c : d.a) {
        Defect dc = rl_defect(c);
        if (!dc.known_zero) out.known_zero = false;
        out.val = rat_min(out.val, dc.val);
    }
    return out;
}

// 1/(1 - t*c) with its geometric certificate; needs val(c) > 0
inline TateSeries ts_geometric(const LaurentCfgPtr& cfg, int Nt, const RamifiedLaurent& c) {
    Rat vc = c.val_lower();
    if (!(vc > Rat(0))) fail("DivergentTail", "geometric series needs val(c) > 0");
    TateSeries r(cfg, Nt);
    RamifiedLaurent acc = rl_one(cfg);
    for (int i = 0; i < Nt; ++i) {
        r.set_coeff(i, acc);
        acc = rl_mul(acc, c);
    }
    r.tail = Tail::geometric(vc * Rat(Nt), vc);
    return r;
}

} // namespace tmf
