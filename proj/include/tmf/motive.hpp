#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "special.hpp"

namespace tmf {

// ---------------------------------------------------------------------------
// polynomials in t over RamifiedLaurent coefficients (entries of Phi matrices)

struct TPoly {
    LaurentCfgPtr cfg;
    std::vector<RamifiedLaurent> c; // c[k] is the t^k coefficient

    TPoly() = default;
    explicit TPoly(LaurentCfgPtr lc) : cfg(std::move(lc)) {}

    void trim() {
        while (!c.empty() && !c.back().known_nonzero()) c.pop_back();
    }
    bool is_zero() const {
        for (const auto& x : c)
            if (x.known_nonzero()) return false;
        return true;
    }
    bool is_one() const {
        return c.size() == 1 && c[0].terms.size() == 1 && c[0].terms.count(0) &&
               c[0].terms.at(0).is_one();
    }
    long long degree() const { return (long long)c.size() - 1; }

    friend bool operator==(const TPoly& a, const TPoly& b) { return a.c == b.c; }
};

inline TPoly tp_const(const LaurentCfgPtr& lc, const RamifiedLaurent& x) {
    TPoly p(lc);
    p.c = {x};
    p.trim();
    return p;
}

inline TPoly tp_one(const LaurentCfgPtr& lc) { return tp_const(lc, rl_one(lc)); }
inline TPoly tp_zero(const LaurentCfgPtr& lc) { return TPoly(lc); }

// t - x
inline TPoly tp_linear(const LaurentCfgPtr& lc, const RamifiedLaurent& x) {
    TPoly p(lc);
    p.c = {rl_neg(x), rl_one(lc)};
    return p;
}

inline TPoly tp_add(const TPoly& a, const TPoly& b) {
    TPoly r(a.cfg);
    r.c.resize(std::max(a.c.size(), b.c.size()), rl_zero(a.cfg));
    for (size_t i = 0; i < r.c.size(); ++i) {
        RamifiedLaurent x = i < a.c.size() ? a.c[i] : rl_zero(a.cfg);
        RamifiedLaurent y = i < b.c.size() ? b.c[i] : rl_zero(a.cfg);
        r.c[i] = rl_add(x, y);
    }
    r.trim();
    return r;
}

inline TPoly tp_neg(const TPoly& a) {
    TPoly r = a;
    for (auto& x : r.c) x = rl_neg(x);
    return r;
}

inline TPoly tp_mul(const TPoly& a, const TPoly& b) {
    TPoly r(a.cfg);
    if (a.c.empty() || b.c.empty()) return r;
    r.c.assign(a.c.size() + b.c.size() - 1, rl_zero(a.cfg));
    for (size_t i = 0; i < a.c.size(); ++i)
        for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] = rl_add(r.c[i + j], rl_mul(a.c[i], b.c[j]));
    r.trim();
    return r;
}

inline TPoly tp_pow(const TPoly& a, long long n) {
    TPoly r = tp_one(a.cfg);
    TPoly base = a;
    while (n) {
        if (n & 1) r = tp_mul(r, base);
        base = tp_mul(base, base);
        n >>= 1;
    }
    return r;
}

inline TPoly tp_hyperderiv(const TPoly& a, long long n) {
    TPoly r(a.cfg);
    long long p = a.cfg->p();
    for (size_t k = size_t(n); k < a.c.size(); ++k) {
        long long b = lucas_binom((long long)k, n, p);
        RamifiedLaurent x = b ? rl_scale(a.c[k], FFElem(a.cfg->field, b)) : rl_zero(a.cfg);
        r.c.push_back(x);
    }
    r.trim();
    return r;
}

inline bool rl_twistable(const RamifiedLaurent& x, long long n) {
    if (n >= 0) return true;
    long long scale = 1;
    for (long long i = 0; i < -n; ++i) scale *= x.cfg->q();
    for (const auto& [m, c] : x.terms)
        if (m % scale != 0) return false;
    return true;
}

inline bool tp_twistable(const TPoly& a, long long n) {
    for (const auto& x : a.c)
        if (!rl_twistable(x, n)) return false;
    return true;
}

inline TPoly tp_twist(const TPoly& a, long long n) {
    TPoly r(a.cfg);
    for (const auto& x : a.c) r.c.push_back(rl_frobenius(x, n));
    r.trim();
    return r;
}

inline TateSeries tp_to_series(const TPoly& a, int Nt) {
    if ((long long)a.c.size() > Nt) fail("BadArgument", "polynomial degree exceeds truncation order");
    TateSeries f = ts_from_poly(a.cfg, Nt, a.c);
    f.tail = Tail::exact();
    return f;
}

inline RamifiedLaurent tp_eval_theta(const TPoly& a) {
    RamifiedLaurent acc = rl_zero(a.cfg);
    acc.prec = PREC_INF;
    RamifiedLaurent th = rl_theta_pow(a.cfg, 1);
    for (size_t i = a.c.size(); i-- > 0;) acc = rl_add(rl_mul(acc, th), a.c[i]);
    return acc;
}

// deterministic ordering for canonical forms
inline int rl_cmp(const RamifiedLaurent& a, const RamifiedLaurent& b) {
    auto ia = a.terms.begin(), ib = b.terms.begin();
    for (; ia != a.terms.end() && ib != b.terms.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return ia->first < ib->first ? -1 : 1;
        long long ka = ia->second.key(), kb = ib->second.key();
        if (ka != kb) return ka < kb ? -1 : 1;
    }
    if (ia != a.terms.end()) return 1;
    if (ib != b.terms.end()) return -1;
    if (a.prec != b.prec) return a.prec < b.prec ? -1 : 1;
    return 0;
}

inline int tp_cmp(const TPoly& a, const TPoly& b) {
    if (a.c.size() != b.c.size()) return a.c.size() < b.c.size() ? -1 : 1;
    for (size_t i = 0; i < a.c.size(); ++i)
        if (int d = rl_cmp(a.c[i], b.c[i])) return d;
    return 0;
}

// ---------------------------------------------------------------------------
// twisted expressions: canonical sums of products of twist-tagged polynomials
// (the exact carrier for Phi entries, including inseparable negative twists)

struct TAtom {
    long long m = 0; // twist tag, kept symbolic only when materialization fails
    TPoly p;
};

inline int atom_cmp(const TAtom& a, const TAtom& b) {
    if (a.m != b.m) return a.m < b.m ? -1 : 1;
    return tp_cmp(a.p, b.p);
}

struct TTerm {
    std::vector<TAtom> sym; // sorted
    TPoly coef;
};

struct TwistedExpr {
    LaurentCfgPtr cfg;
    std::vector<TTerm> terms; // sorted by symbolic key, zero coefs dropped

    TwistedExpr() = default;
    explicit TwistedExpr(LaurentCfgPtr lc) : cfg(std::move(lc)) {}

    bool is_poly() const { return terms.empty() || (terms.size() == 1 && terms[0].sym.empty()); }
    bool is_zero() const { return terms.empty(); }
    TPoly poly_part() const {
        if (terms.empty()) return TPoly(cfg);
        if (!is_poly()) fail("BadArgument", "expression is not a plain polynomial");
        return terms[0].coef;
    }
    // largest inverse-twist depth among symbolic atoms
    long long insep_depth() const {
        long long d = 0;
        for (const auto& t : terms)
            for (const auto& a : t.sym)
                if (-a.m > d) d = -a.m;
        return d;
    }
};

namespace detail {

inline int symkey_cmp(const std::vector<TAtom>& a, const std::vector<TAtom>& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (size_t i = 0; i < a.size(); ++i)
        if (int d = atom_cmp(a[i], b[i])) return d;
    return 0;
}

inline void te_push(TwistedExpr& e, TTerm t) {
    if (t.coef.is_zero()) return;
    std::sort(t.sym.begin(), t.sym.end(), [](const TAtom& x, const TAtom& y) { return atom_cmp(x, y) < 0; });
    for (auto& existing : e.terms)
        if (symkey_cmp(existing.sym, t.sym) == 0) {
            existing.coef = tp_add(existing.coef, t.coef);
            return;
        }
    e.terms.push_back(std::move(t));
}

inline void te_normalize(TwistedExpr& e) {
    std::vector<TTerm> in;
    in.swap(e.terms);
    for (auto& t : in) te_push(e, std::move(t));
    e.terms.erase(std::remove_if(e.terms.begin(), e.terms.end(),
                                 [](const TTerm& t) { return t.coef.is_zero(); }),
                  e.terms.end());
    std::sort(e.terms.begin(), e.terms.end(),
              [](const TTerm& a, const TTerm& b) { return symkey_cmp(a.sym, b.sym) < 0; });
}

} // namespace detail

inline TwistedExpr te_from_poly(const TPoly& p) {
    TwistedExpr e(p.cfg);
    if (!p.is_zero()) e.terms.push_back(TTerm{{}, p});
    return e;
}

inline TwistedExpr te_zero(const LaurentCfgPtr& lc) { return TwistedExpr(lc); }
inline TwistedExpr te_one(const LaurentCfgPtr& lc) { return te_from_poly(tp_one(lc)); }

inline TwistedExpr te_add(const TwistedExpr& a, const TwistedExpr& b) {
    TwistedExpr r = a;
    for (const auto& t : b.terms) detail::te_push(r, t);
    detail::te_normalize(r);
    return r;
}

inline TwistedExpr te_neg(const TwistedExpr& a) {
    TwistedExpr r = a;
    for (auto& t : r.terms) t.coef = tp_neg(t.coef);
    return r;
}

inline TwistedExpr te_mul(const TwistedExpr& a, const TwistedExpr& b) {
    TwistedExpr r(a.cfg);
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms) {
            TTerm t;
            t.sym = ta.sym;
            t.sym.insert(t.sym.end(), tb.sym.begin(), tb.sym.end());
            t.coef = tp_mul(ta.coef, tb.coef);
            detail::te_push(r, std::move(t));
        }
    detail::te_normalize(r);
    return r;
}

// Frobenius twist of an expression; atoms materialize whenever the twisted
// polynomial is representable in the base context
inline TwistedExpr te_twist(const TwistedExpr& a, long long m) {
    TwistedExpr r(a.cfg);
    for (const auto& t : a.terms) {
        TTerm out;
        out.coef = tp_one(a.cfg);
        TPoly c = t.coef;
        if (tp_twistable(c, m))
            out.coef = tp_twist(c, m);
        else
            out.sym.push_back(TAtom{m, c});
        for (const auto& at : t.sym) {
            long long nm = at.m + m;
            if (tp_twistable(at.p, nm))
                out.coef = tp_mul(out.coef, tp_twist(at.p, nm));
            else
                out.sym.push_back(TAtom{nm, at.p});
        }
        detail::te_push(r, std::move(out));
    }
    detail::te_normalize(r);
    return r;
}

// t-hyperderivative via the generalized Leibniz rule over each product term;
// twisting and d_t commute, so atoms differentiate in place
inline TwistedExpr te_dt(const TwistedExpr& a, long long n) {
    if (n == 0) return a;
    TwistedExpr r(a.cfg);
    for (const auto& t : a.terms) {
        size_t parts = t.sym.size() + 1;
        std::vector<long long> comp(parts, 0);
        // enumerate compositions of n into `parts` ordered slots
        std::function<void(size_t, long long)> rec = [&](size_t pos, long long left) {
            if (pos + 1 == parts) {
                comp[pos] = left;
                TTerm out;
                out.coef = tp_hyperderiv(t.coef, comp[0]);
                if (out.coef.is_zero()) return;
                for (size_t k = 0; k < t.sym.size(); ++k) {
                    TPoly dp = tp_hyperderiv(t.sym[k].p, comp[k + 1]);
                    if (dp.is_zero()) return;
                    if (tp_twistable(dp, t.sym[k].m))
                        out.coef = tp_mul(out.coef, tp_twist(dp, t.sym[k].m));
                    else
                        out.sym.push_back(TAtom{t.sym[k].m, dp});
                }
                detail::te_push(r, std::move(out));
                return;
            }
            for (long long v = 0; v <= left; ++v) {
                comp[pos] = v;
                rec(pos + 1, left - v);
            }
        };
        rec(0, n);
    }
    detail::te_normalize(r);
    return r;
}

inline bool te_equal(const TwistedExpr& a, const TwistedExpr& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (size_t i = 0; i < a.terms.size(); ++i) {
        if (detail::symkey_cmp(a.terms[i].sym, b.terms[i].sym) != 0) return false;
        if (!(a.terms[i].coef == b.terms[i].coef)) return false;
    }
    return true;
}

// widened context with enough inseparable budget for the given twist depth
inline LaurentCfgPtr widen_cfg(const LaurentCfgPtr& lc, long long depth) {
    if (depth <= 0) return lc;
    return laurent_cfg(lc->field, lc->Msep, lc->e_insep + int(depth * lc->field->e),
                       lc->prec / lc->M);
}

// embed into a context whose ramification is a multiple of ours
inline RamifiedLaurent rl_embed(const RamifiedLaurent& x, const LaurentCfgPtr& wide) {
    if (wide->M % x.cfg->M != 0) fail("ContextMismatch", "embedding needs M | M'");
    long long scale = wide->M / x.cfg->M;
    RamifiedLaurent r(wide);
    r.prec = x.prec >= PREC_INF ? PREC_INF : x.prec * scale;
    for (const auto& [m, c] : x.terms) r.terms.emplace(m * scale, c);
    return r;
}

// evaluate an expression at t = theta, widening as needed for symbolic atoms
inline RamifiedLaurent te_eval_theta(const TwistedExpr& e, const LaurentCfgPtr& wide) {
    RamifiedLaurent acc = rl_zero(wide);
    acc.prec = PREC_INF;
    RamifiedLaurent th = rl_theta_pow(wide, 1);
    for (const auto& t : e.terms) {
        RamifiedLaurent prod = rl_embed(tp_eval_theta(t.coef), wide);
        for (const auto& at : t.sym) {
            // twisting acts on coefficients only: P^{(m)}|_{t=theta} is the
            // Horner evaluation of the twisted coefficients at theta
            RamifiedLaurent v = rl_zero(wide);
            v.prec = PREC_INF;
            for (size_t i = at.p.c.size(); i-- > 0;) {
                RamifiedLaurent ci = rl_frobenius(rl_embed(at.p.c[i], wide), at.m);
                v = rl_add(rl_mul(v, th), ci);
            }
            prod = rl_mul(prod, v);
        }
        acc = rl_add(acc, prod);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// matrices of twisted expressions

struct TwistedMatrix {
    LaurentCfgPtr cfg;
    long long rows = 0, cols = 0;
    std::vector<TwistedExpr> e;

    TwistedMatrix() = default;
    TwistedMatrix(LaurentCfgPtr lc, long long r, long long c)
        : cfg(std::move(lc)), rows(r), cols(c), e(size_t(r * c), te_zero(cfg)) {
        for (auto& x : e) x.cfg = cfg;
    }
    TwistedExpr& at(long long i, long long j) { return e[size_t(i * cols + j)]; }
    const TwistedExpr& at(long long i, long long j) const { return e[size_t(i * cols + j)]; }
};

inline TwistedMatrix tm_identity(const LaurentCfgPtr& lc, long long n) {
    TwistedMatrix m(lc, n, n);
    for (long long i = 0; i < n; ++i) m.at(i, i) = te_one(lc);
    return m;
}

inline TwistedMatrix tm_mul(const TwistedMatrix& a, const TwistedMatrix& b) {
    if (a.cols != b.rows) fail("DimensionMismatch", "matrix product shapes");
    TwistedMatrix r(a.cfg, a.rows, b.cols);
    for (long long i = 0; i < a.rows; ++i)
        for (long long j = 0; j < b.cols; ++j) {
            TwistedExpr s = te_zero(a.cfg);
            for (long long k = 0; k < a.cols; ++k)
                s = te_add(s, te_mul(a.at(i, k), b.at(k, j)));
            r.at(i, j) = s;
        }
    return r;
}

inline TwistedMatrix tm_twist(const TwistedMatrix& a, long long m) {
    TwistedMatrix r = a;
    for (auto& x : r.e) x = te_twist(x, m);
    return r;
}

inline TwistedMatrix tm_dt(const TwistedMatrix& a, long long n) {
    TwistedMatrix r = a;
    for (auto& x : r.e) x = te_dt(x, n);
    return r;
}

inline TwistedMatrix tm_direct_sum(const TwistedMatrix& a, const TwistedMatrix& b) {
    TwistedMatrix r(a.cfg, a.rows + b.rows, a.cols + b.cols);
    for (long long i = 0; i < a.rows; ++i)
        for (long long j = 0; j < a.cols; ++j) r.at(i, j) = a.at(i, j);
    for (long long i = 0; i < b.rows; ++i)
        for (long long j = 0; j < b.cols; ++j) r.at(a.rows + i, a.cols + j) = b.at(i, j);
    return r;
}

// Maurischat's prolongation: (n+1)x(n+1) block lower-triangular Toeplitz with
// blocks dt^{(k)} X
inline TwistedMatrix tm_prolong(const TwistedMatrix& a, long long n) {
    TwistedMatrix r(a.cfg, a.rows * (n + 1), a.cols * (n + 1));
    for (long long bi = 0; bi <= n; ++bi)
        for (long long bj = 0; bj <= bi; ++bj) {
            TwistedMatrix blk = tm_dt(a, bi - bj);
            for (long long i = 0; i < a.rows; ++i)
                for (long long j = 0; j < a.cols; ++j)
                    r.at(bi * a.rows + i, bj * a.cols + j) = blk.at(i, j);
        }
    return r;
}

inline bool tm_equal(const TwistedMatrix& a, const TwistedMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) return false;
    for (size_t i = 0; i < a.e.size(); ++i)
        if (!te_equal(a.e[i], b.e[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// trivialization builders (Psi entries)

struct PsiExpr;
using PsiPtr = std::shared_ptr<const PsiExpr>;

struct PsiExpr {
    enum Op { One, OmegaAtom, LAtom, PolyAtom, ScalarAtom, Mul, Add, Pow, Dt, Twist } op = One;
    long long a = 0, b = 0; // omega (l, j), pow k, dt n, twist m
    Index idx;              // LAtom index
    long long jj = 0, ll = 0;
    TPoly poly;
    RamifiedLaurent scal;
    std::vector<PsiPtr> kids;
};

inline PsiPtr psi_one() {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::One;
    return p;
}
inline PsiPtr psi_omega(long long l, long long j) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::OmegaAtom;
    p->a = l;
    p->b = j;
    return p;
}
inline PsiPtr psi_lseries(Index s, long long jj, long long ll) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::LAtom;
    p->idx = std::move(s);
    p->jj = jj;
    p->ll = ll;
    return p;
}
inline PsiPtr psi_poly(TPoly t) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::PolyAtom;
    p->poly = std::move(t);
    return p;
}
inline PsiPtr psi_scalar(RamifiedLaurent x) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::ScalarAtom;
    p->scal = std::move(x);
    return p;
}
inline PsiPtr psi_mul(PsiPtr x, PsiPtr y) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::Mul;
    p->kids = {std::move(x), std::move(y)};
    return p;
}
inline PsiPtr psi_add(PsiPtr x, PsiPtr y) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::Add;
    p->kids = {std::move(x), std::move(y)};
    return p;
}
inline PsiPtr psi_pow(PsiPtr x, long long k) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::Pow;
    p->a = k;
    p->kids = {std::move(x)};
    return p;
}
inline PsiPtr psi_dt(PsiPtr x, long long n) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::Dt;
    p->a = n;
    p->kids = {std::move(x)};
    return p;
}
inline PsiPtr psi_twist(PsiPtr x, long long m) {
    auto p = std::make_shared<PsiExpr>();
    p->op = PsiExpr::Twist;
    p->a = m;
    p->kids = {std::move(x)};
    return p;
}

struct EvalCtx {
    SeriesEnv env;
    WeightProvider weights;
    std::map<std::pair<long long, long long>, TateSeries> omega_cache;

    const TateSeries& omega_of(long long l, long long j) {
        auto key = std::make_pair(l, j);
        auto it = omega_cache.find(key);
        if (it == omega_cache.end()) it = omega_cache.emplace(key, omega(env, l, j)).first;
        return it->second;
    }
};

inline TateSeries psi_eval(const PsiPtr& p, EvalCtx& ctx) {
    switch (p->op) {
        case PsiExpr::One:
            return ts_one(ctx.env.lc, ctx.env.Nt);
        case PsiExpr::OmegaAtom:
            return ctx.omega_of(p->a, p->b);
        case PsiExpr::LAtom:
            return cmpl_L(ctx.env, p->idx, p->jj, p->ll, ctx.weights);
        case PsiExpr::PolyAtom:
            return tp_to_series(p->poly, ctx.env.Nt);
        case PsiExpr::ScalarAtom:
            return ts_scale(ts_one(ctx.env.lc, ctx.env.Nt), p->scal);
        case PsiExpr::Mul:
            return ts_mul(psi_eval(p->kids[0], ctx), psi_eval(p->kids[1], ctx));
        case PsiExpr::Add:
            return ts_add(psi_eval(p->kids[0], ctx), psi_eval(p->kids[1], ctx));
        case PsiExpr::Pow:
            return ts_pow(psi_eval(p->kids[0], ctx), p->a);
        case PsiExpr::Dt:
            return ts_hyperderiv(psi_eval(p->kids[0], ctx), p->a);
        case PsiExpr::Twist:
            return ts_twist(psi_eval(p->kids[0], ctx), p->a);
    }
    fail("Internal", "unknown Psi node");
}

// ---------------------------------------------------------------------------
// motive specifications and builders

struct MotiveSpec {
    std::string name;
    long long level = 1;
    TwistedMatrix Phi;
    bool has_psi = false;
    std::vector<std::vector<PsiPtr>> Psi;
    std::vector<long long> blocks; // direct-sum block dimensions

    long long dim() const { return Phi.rows; }
};

inline MotiveSpec mk_carlitz(const LaurentCfgPtr& lc) {
    MotiveSpec m;
    m.name = "C";
    m.level = 1;
    m.Phi = TwistedMatrix(lc, 1, 1);
    m.Phi.at(0, 0) = te_from_poly(tp_linear(lc, rl_theta_pow(lc, 1)));
    m.has_psi = true;
    m.Psi = {{psi_omega(1, 0)}};
    m.blocks = {1};
    return m;
}

// companion matrix of the Carlitz F_{q^l}[t]-module: 1s above the diagonal,
// (t - theta) in the lower-left corner
inline TwistedMatrix companion_phi_l(const LaurentCfgPtr& lc, long long l) {
    TwistedMatrix phi(lc, l, l);
    for (long long i = 0; i + 1 < l; ++i) phi.at(i, i + 1) = te_one(lc);
    phi.at(l - 1, 0) = te_from_poly(tp_linear(lc, rl_theta_pow(lc, 1)));
    return phi;
}

// Phi_l with rigid analytic trivialization Psi_l[i][k] = (xi_l^k Omega_l)^{(-i)}
inline MotiveSpec mk_phi_psi_l(const LaurentCfgPtr& lc, long long l) {
    if (pow_ll(lc->q(), l) - 1 > 0 && lc->Msep % (pow_ll(lc->q(), l) - 1) != 0)
        fail("RamificationTooSmall", "Msep must be divisible by q^l - 1");
    FFElem xi = ff_primitive(lc->field, l);
    MotiveSpec m;
    m.name = "M_" + std::to_string(l);
    m.level = 1;
    m.Phi = companion_phi_l(lc, l);
    m.has_psi = true;
    m.Psi.assign(size_t(l), std::vector<PsiPtr>(size_t(l)));
    for (long long i = 0; i < l; ++i)
        for (long long k = 0; k < l; ++k) {
            FFElem c = xi.pow(k).frobenius(-i); // (xi^k)^{(-i)}, exact
            m.Psi[size_t(i)][size_t(k)] =
                psi_mul(psi_scalar(rl_monomial(lc, 0, c)), psi_omega(l, i));
        }
    m.blocks = {l};
    return m;
}

// N = (t-theta) + companion block, no trivialization at level 1
inline MotiveSpec mk_N(const LaurentCfgPtr& lc, long long l) {
    MotiveSpec m;
    m.name = "N_" + std::to_string(l);
    m.level = 1;
    TwistedMatrix c1(lc, 1, 1);
    c1.at(0, 0) = te_from_poly(tp_linear(lc, rl_theta_pow(lc, 1)));
    m.Phi = tm_direct_sum(c1, companion_phi_l(lc, l));
    m.has_psi = false;
    m.blocks = {1, l};
    return m;
}

// the l-th derived pre-t-motive N^{(l)}: diagonal with twisted linear factors
inline MotiveSpec mk_N_derived(const LaurentCfgPtr& lc, long long l) {
    MotiveSpec m;
    m.name = "N_" + std::to_string(l) + "^(" + std::to_string(l) + ")";
    m.level = l;
    m.Phi = TwistedMatrix(lc, l + 1, l + 1);
    TwistedExpr prod = te_one(lc);
    TwistedExpr lin = te_from_poly(tp_linear(lc, rl_theta_pow(lc, 1)));
    for (long long j = 0; j < l; ++j) prod = te_mul(prod, te_twist(lin, -j));
    m.Phi.at(0, 0) = prod;
    for (long long j = 0; j < l; ++j) m.Phi.at(j + 1, j + 1) = te_twist(lin, -j);
    m.has_psi = true;
    m.Psi.assign(size_t(l + 1), std::vector<PsiPtr>(size_t(l + 1)));
    m.Psi[0][0] = psi_omega(1, 0);
    for (long long j = 0; j < l; ++j) m.Psi[size_t(j + 1)][size_t(j + 1)] = psi_omega(l, j);
    m.blocks = {1, l}; // diagonal, same partition as N
    return m;
}

// s-th derived pre-t-motive: Phi' = Phi^{(-sr+r)} ... Phi^{(-r)} Phi, level rs,
// same trivialization
inline MotiveSpec mk_derived(const MotiveSpec& base, long long s) {
    if (s < 1) fail("BadArgument", "derived order must be >= 1");
    if (s == 1) return base;
    MotiveSpec m = base;
    m.name = base.name + "^(" + std::to_string(s) + ")";
    long long r = base.level;
    TwistedMatrix acc = tm_twist(base.Phi, -(s - 1) * r);
    for (long long k = s - 2; k >= 0; --k) acc = tm_mul(acc, tm_twist(base.Phi, -k * r));
    m.Phi = acc;
    m.level = r * s;
    m.blocks = {m.Phi.rows}; // products generally break the block split
    if (base.blocks.size() > 1) m.blocks = base.blocks; // block-diagonal inputs keep it
    return m;
}

// n-th prolongation rho_n: blocks dt^{(k)} of Phi and Psi
inline MotiveSpec mk_prolong(const MotiveSpec& base, long long n) {
    if (n < 0) fail("BadArgument", "prolongation order must be >= 0");
    if (n == 0) return base;
    MotiveSpec m;
    m.name = "rho_" + std::to_string(n) + "(" + base.name + ")";
    m.level = base.level;
    m.Phi = tm_prolong(base.Phi, n);
    m.has_psi = base.has_psi;
    if (base.has_psi) {
        long long d = base.dim();
        m.Psi.assign(size_t(d * (n + 1)), std::vector<PsiPtr>(size_t(d * (n + 1))));
        for (long long bi = 0; bi <= n; ++bi)
            for (long long bj = 0; bj <= bi; ++bj)
                for (long long i = 0; i < d; ++i)
                    for (long long j = 0; j < d; ++j) {
                        PsiPtr src = base.Psi[size_t(i)][size_t(j)];
                        if (!src) continue;
                        PsiPtr val = (bi == bj) ? src : psi_dt(src, bi - bj);
                        m.Psi[size_t(bi * d + i)][size_t(bj * d + j)] = val;
                    }
    }
    m.blocks = {m.dim()};
    return m;
}

// M[s] of the multiple zeta section, prolonged by rho_m
inline MotiveSpec mk_M_index(const LaurentCfgPtr& lc, const Index& s, long long m_ord,
                             const WeightProvider& w) {
    long long d = s.dep();
    MotiveSpec m;
    m.name = "M[" + s.str() + "]";
    m.level = 1;
    m.Phi = TwistedMatrix(lc, d + 1, d + 1);
    auto tail_wt = [&](long long i) { // s_{i+1} + ... + s_d, 0-based i
        long long wsum = 0;
        for (long long k = i; k < d; ++k) wsum += s.parts[size_t(k)];
        return wsum;
    };
    TPoly lin = tp_linear(lc, rl_theta_pow(lc, 1));
    for (long long i = 0; i < d; ++i) {
        m.Phi.at(i, i) = te_from_poly(tp_pow(lin, tail_wt(i)));
        // (t-theta)^{s_i+...+s_d} u_{s_i}^{(-1)}
        TPoly u(lc);
        u.c = w.poly(s.parts[size_t(i)], lc);
        u.trim();
        TwistedExpr uexpr = te_twist(te_from_poly(u), -1);
        m.Phi.at(i + 1, i) = te_mul(te_from_poly(tp_pow(lin, tail_wt(i))), uexpr);
    }
    m.Phi.at(d, d) = te_one(lc);
    m.has_psi = true;
    m.Psi.assign(size_t(d + 1), std::vector<PsiPtr>(size_t(d + 1)));
    for (long long i = 0; i <= d; ++i) {
        for (long long j = 0; j < i; ++j) {
            PsiPtr L = psi_lseries(s, i + 1, j + 1);
            if (i < d) L = psi_mul(psi_pow(psi_omega(1, 0), tail_wt(i)), L);
            m.Psi[size_t(i)][size_t(j)] = L;
        }
        if (i < d)
            m.Psi[size_t(i)][size_t(i)] = psi_pow(psi_omega(1, 0), tail_wt(i));
        else
            m.Psi[size_t(i)][size_t(i)] = psi_one();
    }
    m.blocks = {d + 1};
    if (m_ord > 0) {
        m = mk_prolong(m, m_ord);
        m.name = "rho_" + std::to_string(m_ord) + "(M[" + s.str() + "])";
    }
    return m;
}

inline MotiveSpec mk_direct_sum(const std::vector<MotiveSpec>& parts) {
    if (parts.empty()) fail("BadArgument", "empty direct sum");
    long long lev = 1;
    for (const auto& p : parts) lev = std::lcm(lev, p.level);
    MotiveSpec acc;
    bool first = true;
    for (const auto& p : parts) {
        MotiveSpec q = p.level == lev ? p : mk_derived(p, lev / p.level);
        if (first) {
            acc = q;
            acc.blocks = {q.dim()};
            first = false;
            continue;
        }
        acc.name += " + " + q.name;
        acc.Phi = tm_direct_sum(acc.Phi, q.Phi);
        acc.blocks.push_back(q.dim());
        if (acc.has_psi && q.has_psi) {
            long long d0 = (long long)acc.Psi.size(), d1 = q.dim();
            std::vector<std::vector<PsiPtr>> np(size_t(d0 + d1),
                                                std::vector<PsiPtr>(size_t(d0 + d1)));
            for (long long i = 0; i < d0; ++i)
                for (long long j = 0; j < d0; ++j) np[size_t(i)][size_t(j)] = acc.Psi[size_t(i)][size_t(j)];
            for (long long i = 0; i < d1; ++i)
                for (long long j = 0; j < d1; ++j)
                    np[size_t(d0 + i)][size_t(d0 + j)] = q.Psi[size_t(i)][size_t(j)];
            acc.Psi = std::move(np);
        } else {
            acc.has_psi = false;
            acc.Psi.clear();
        }
    }
    acc.level = lev;
    return acc;
}

// M_i = rho_n C + sum of M[s_j] over the first i entries of the enumeration
inline MotiveSpec mk_M_i(const LaurentCfgPtr& lc,
                         const std::vector<std::pair<Index, long long>>& enumeration, long long n,
                         long long i, const WeightProvider& w) {
    if (i < 0 || i > (long long)enumeration.size())
        fail("BadArgument", "index i out of range of the enumeration");
    std::vector<MotiveSpec> parts;
    parts.push_back(mk_prolong(mk_carlitz(lc), n));
    for (long long j = 0; j < i; ++j)
        parts.push_back(mk_M_index(lc, enumeration[size_t(j)].first, enumeration[size_t(j)].second, w));
    MotiveSpec m = mk_direct_sum(parts);
    m.name = "M_" + std::to_string(i);
    return m;
}

// ---------------------------------------------------------------------------
// rigid-analytic-trivialization verifier, forward form Psi = Phi^{(r)} Psi^{(r)}

struct TrivReport {
    std::string name;
    long long level = 1;
    long long dim = 0;
    bool pass = false;
    bool defect_zero = false;  // no nonzero defect coefficient survives
    Rat defect_val;            // theta-units: exact defect valuation, or the floor
    long long defect_val_u = 0;
    int det_phi_theta_nonzero = -1; // 1 yes / 0 no / -1 not evaluated
    std::string notes;
};

struct Perturbation {
    long long row = 0, col = 0;
    long long u_exp = 5;
};

// determinant at t = theta by exact Gaussian elimination
inline RamifiedLaurent tm_det_theta(const TwistedMatrix& phi) {
    long long depth = 0;
    for (const auto& x : phi.e) depth = std::max(depth, x.insep_depth());
    LaurentCfgPtr wide = widen_cfg(phi.cfg, depth);
    long long n = phi.rows;
    std::vector<RamifiedLaurent> a;
    a.reserve(size_t(n * n));
    for (const auto& x : phi.e) a.push_back(te_eval_theta(x, wide));
    RamifiedLaurent det = rl_one(wide);
    for (long long col = 0; col < n; ++col) {
        long long piv = -1;
        for (long long r = col; r < n; ++r)
            if (a[size_t(r * n + col)].known_nonzero()) {
                piv = r;
                break;
            }
        if (piv < 0) {
            RamifiedLaurent z = rl_zero(wide);
            for (long long r = col; r < n; ++r)
                z.prec = std::min(z.prec, a[size_t(r * n + col)].prec);
            return z; // zero to available precision
        }
        if (piv != col) {
            for (long long j = 0; j < n; ++j)
                std::swap(a[size_t(piv * n + j)], a[size_t(col * n + j)]);
            det = rl_neg(det);
        }
        RamifiedLaurent inv = rl_inv(a[size_t(col * n + col)]);
        det = rl_mul(det, a[size_t(col * n + col)]);
        for (long long r = col + 1; r < n; ++r) {
            RamifiedLaurent f = rl_mul(a[size_t(r * n + col)], inv);
            if (!f.known_nonzero()) continue;
            for (long long j = col; j < n; ++j)
                a[size_t(r * n + j)] =
                    rl_sub(a[size_t(r * n + j)], rl_mul(f, a[size_t(col * n + j)]));
        }
    }
    return det;
}

inline TrivReport verify_rat(const MotiveSpec& m, EvalCtx& ctx, const Rat& threshold,
                             const std::optional<Perturbation>& perturb = std::nullopt) {
    TrivReport rep;
    rep.name = m.name;
    rep.level = m.level;
    rep.dim = m.dim();
    if (!m.has_psi) {
        rep.notes = "no trivialization builder";
        return rep;
    }
    long long d = m.dim();
    if ((long long)m.Psi.size() != d) fail("DimensionMismatch", "Psi dimensions");
    // evaluate Psi
    std::vector<std::vector<TateSeries>> E(static_cast<size_t>(d));
    for (long long i = 0; i < d; ++i)
        for (long long j = 0; j < d; ++j) {
            const PsiPtr& p = m.Psi[size_t(i)][size_t(j)];
            E[size_t(i)].push_back(p ? psi_eval(p, ctx) : ts_zero(ctx.env.lc, ctx.env.Nt));
        }
    if (perturb) {
        TateSeries& t = E[size_t(perturb->row)][size_t(perturb->col)];
        RamifiedLaurent delta = rl_monomial(ctx.env.lc, perturb->u_exp, ff_one(ctx.env.lc->field));
        t.set_coeff(0, rl_add(t.coeff(0), delta));
    }
    // Phi^{(r)} materializes to plain polynomials
    TwistedMatrix phir = tm_twist(m.Phi, m.level);
    std::vector<std::vector<TateSeries>> P(static_cast<size_t>(d));
    for (long long i = 0; i < d; ++i)
        for (long long j = 0; j < d; ++j) {
            const TwistedExpr& x = phir.at(i, j);
            if (!x.is_poly())
                fail("Internal", "Phi^{(r)} kept symbolic atoms; twist depth exceeded the level");
            P[size_t(i)].push_back(tp_to_series(x.poly_part(), ctx.env.Nt));
        }
    // defect of Psi - Phi^{(r)} Psi^{(r)}
    bool all_zero = true;
    Rat val = Rat::inf();
    for (long long i = 0; i < d; ++i)
        for (long long j = 0; j < d; ++j) {
            TateSeries rhs = ts_zero(ctx.env.lc, ctx.env.Nt);
            for (long long k = 0; k < d; ++k)
                rhs = ts_add(rhs, ts_mul(P[size_t(i)][size_t(k)], ts_twist(E[size_t(k)][size_t(j)], m.level)));
            Defect dd = ts_defect(E[size_t(i)][size_t(j)], rhs);
            if (!dd.known_zero) all_zero = false;
            val = rat_min(val, dd.val);
        }
    rep.defect_zero = all_zero;
    rep.defect_val = val;
    if (!val.is_inf()) {
        rep.defect_val_u = val.num * ctx.env.lc->M / val.den;
    } else {
        rep.defect_val_u = PREC_INF;
    }
    rep.pass = all_zero && val > threshold;
    // entireness-criterion hypothesis det Phi|_{t=theta} != 0
    RamifiedLaurent det = tm_det_theta(m.Phi);
    rep.det_phi_theta_nonzero = det.known_nonzero() ? 1 : 0;
    if (rep.det_phi_theta_nonzero == 0)
        rep.notes += (rep.notes.empty() ? "" : "; ") +
                     std::string("det Phi|_theta = 0: entireness hypothesis not applicable");
    return rep;
}

// structural trace of the commutative group of section-4 type: block
// lower-triangular Toeplitz with repeated diagonal blocks
inline bool toeplitz_shape_check(const std::vector<std::vector<TateSeries>>& mat, long long n,
                                 long long block) {
    long long dim = (long long)mat.size();
    if (dim != (n + 1) * block) fail("DimensionMismatch", "matrix is not (n+1)*block square");
    for (const auto& row : mat)
        if ((long long)row.size() != dim) fail("DimensionMismatch", "matrix is not square");
    for (long long bi = 0; bi <= n; ++bi)
        for (long long bj = 0; bj <= n; ++bj)
            for (long long i = 0; i < block; ++i)
                for (long long j = 0; j < block; ++j) {
                    const TateSeries& x = mat[size_t(bi * block + i)][size_t(bj * block + j)];
                    if (bj > bi) {
                        if (!x.is_zero_to_prec()) return false;
                    } else if (bj >= 1) {
                        // must match the block one step up the sub-diagonal
                        const TateSeries& y = mat[size_t((bi - 1) * block + i)][size_t((bj - 1) * block + j)];
                        if (!ts_defect(x, y).known_zero) return false;
                    }
                }
    return true;
}

// rho_n on a plain series matrix (test and shape-check helper)
inline std::vector<std::vector<TateSeries>> rho_n_series(const std::vector<std::vector<TateSeries>>& x,
                                                         long long n) {
    long long d = (long long)x.size();
    std::vector<std::vector<TateSeries>> r(size_t(d * (n + 1)));
    for (auto& row : r) row.resize(size_t(d * (n + 1)), ts_zero(x[0][0].cfg, x[0][0].Nt()));
    for (long long bi = 0; bi <= n; ++bi)
        for (long long bj = 0; bj <= bi; ++bj)
            for (long long i = 0; i < d; ++i)
                for (long long j = 0; j < d; ++j) {
                    TateSeries v = x[size_t(i)][size_t(j)];
                    if (bi != bj) v = ts_hyperderiv(v, bi - bj);
                    r[size_t(bi * d + i)][size_t(bj * d + j)] = v;
                }
    return r;
}

} // namespace tmf
