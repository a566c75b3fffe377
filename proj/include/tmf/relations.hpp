#pragma once

#include <set>
#include <string>
#include <vector>

#include "motive.hpp"

namespace tmf {

// ---------------------------------------------------------------------------
// index combinatorics

using IndexSet = std::set<Index>;

// contiguous sub-indices (s_i, ..., s_j)
inline IndexSet sub(const Index& s) {
    IndexSet out;
    long long d = s.dep();
    for (long long i = 0; i < d; ++i)
        for (long long j = i; j < d; ++j)
            out.insert(Index(std::vector<long long>(s.parts.begin() + i, s.parts.begin() + j + 1)));
    return out;
}

inline IndexSet sub_closure(const IndexSet& I) {
    IndexSet out;
    for (const Index& s : I) {
        IndexSet ss = sub(s);
        out.insert(ss.begin(), ss.end());
    }
    return out;
}

inline bool is_sub_closed(const IndexSet& I) { return sub_closure(I) == I; }

// all nonempty subsequences (the Sub' family)
inline IndexSet subsequences(const Index& s) {
    IndexSet out;
    long long d = s.dep();
    for (long long mask = 1; mask < (1LL << d); ++mask) {
        std::vector<long long> parts;
        for (long long i = 0; i < d; ++i)
            if (mask & (1LL << i)) parts.push_back(s.parts[size_t(i)]);
        out.insert(Index(parts));
    }
    return out;
}

// deterministic enumeration of I x {0..n} satisfying (En): sort by
// (depth, m, lexicographic parts); proper sub-indices have smaller depth
inline std::vector<std::pair<Index, long long>> enumerate_en(const IndexSet& I, long long n) {
    if (!is_sub_closed(I)) fail("NotSubClosed", "index set is not Sub-closed");
    std::vector<std::pair<Index, long long>> out;
    for (const Index& s : I)
        for (long long m = 0; m <= n; ++m) out.emplace_back(s, m);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.first.dep() != b.first.dep()) return a.first.dep() < b.first.dep();
        if (a.second != b.second) return a.second < b.second;
        return a.first.parts < b.first.parts;
    });
    return out;
}

inline bool validate_en(const std::vector<std::pair<Index, long long>>& en) {
    for (size_t i = 0; i < en.size(); ++i) {
        for (const Index& sp : sub(en[i].first))
            for (long long mp = 0; mp <= en[i].second; ++mp) {
                bool found = false;
                for (size_t j = 0; j <= i && !found; ++j)
                    if (en[j].first == sp && en[j].second == mp) found = true;
                if (!found) return false;
            }
    }
    return true;
}

// ---------------------------------------------------------------------------
// predicted transcendence degrees

// s - floor(s/p) - floor(s/(q-1)) + floor(s/(p(q-1))) + l
inline long long trdeg_cpty(long long s, long long l, long long q, long long p) {
    if (s < 1 || l < 1) fail("BadArgument", "trdeg_cpty wants s, l >= 1");
    return s - s / p - s / (q - 1) + s / (p * (q - 1)) + l;
}

inline long long trdeg_gamma_hyper(long long l, long long n) { return l * (n + 1); }
inline long long trdeg_omega_hyper(long long n) { return n + 1; }
inline long long trdeg_sub_indep(long long r, long long n) { return (n + 1) * (1LL << r); }

// total of the main theorem: gamma term + subsequence term - omega term
inline long long trdeg_main_total(long long r, long long n, long long l) {
    return trdeg_gamma_hyper(l, n) + trdeg_sub_indep(r, n) - trdeg_omega_hyper(n);
}

// ---------------------------------------------------------------------------
// linear algebra over F_p and the bounded-height relation hunt

namespace detail {

// nullspace basis of the rows x cols matrix over F_p (column vectors)
inline std::vector<std::vector<int>> fp_nullspace(std::vector<std::vector<int>> m, long long p,
                                                  size_t cols) {
    size_t rows = m.size();
    std::vector<long long> pivot_of_col(cols, -1);
    size_t rank = 0;
    for (size_t c = 0; c < cols && rank < rows; ++c) {
        size_t piv = rank;
        while (piv < rows && m[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[rank], m[piv]);
        // normalize pivot row
        long long inv = 1, base = m[rank][c], e = p - 2;
        while (e) {
            if (e & 1) inv = inv * base % p;
            base = base * base % p;
            e >>= 1;
        }
        for (size_t j = c; j < cols; ++j) m[rank][j] = int(m[rank][j] * inv % p);
        for (size_t r = 0; r < rows; ++r) {
            if (r == rank || m[r][c] == 0) continue;
            long long f = m[r][c];
            for (size_t j = c; j < cols; ++j)
                m[r][j] = int(((m[r][j] - f * m[rank][j]) % p + p) % p);
        }
        pivot_of_col[c] = (long long)rank;
        ++rank;
    }
    std::vector<std::vector<int>> basis;
    for (size_t c = 0; c < cols; ++c) {
        if (pivot_of_col[c] >= 0) continue;
        std::vector<int> v(cols, 0);
        v[c] = 1;
        for (size_t c2 = 0; c2 < cols; ++c2)
            if (pivot_of_col[c2] >= 0) v[c2] = int((p - m[size_t(pivot_of_col[c2])][c]) % p);
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace detail

struct LabeledValue {
    std::string label;
    RamifiedLaurent value;
};

struct Relation {
    std::vector<std::vector<FFElem>> coeffs; // [value][theta-degree], entries in F_q
    Rat residual_val;                        // certified valuation of the residual

    bool trivial() const {
        for (const auto& c : coeffs)
            for (const auto& x : c)
                if (!x.is_zero()) return false;
        return true;
    }
};

struct RelationBasis {
    std::string banner = "bounded-height evidence only";
    std::vector<std::string> labels;
    long long degree_bound = 0;
    std::vector<Relation> relations;
};

// nullspace of (c_i) -> sum c_i(theta) v_i over F_q with deg c_i <= D, using
// every u-exponent row available at the shared certified precision
inline RelationBasis linear_relations(const std::vector<LabeledValue>& values, long long D,
                                      long long precision_theta) {
    if (values.empty()) fail("BadArgument", "no values to relate");
    LaurentCfgPtr lc = values[0].value.cfg;
    for (const auto& v : values)
        if (!same_cfg(lc, v.value.cfg)) fail("ContextMismatch", "values from different contexts");
    long long e = lc->field->e, eL = lc->field->deg();
    FFElem g = ff_primitive(lc->field, 1); // generator of F_q over F_p
    // columns: value i, theta-degree k, F_p-basis element g^j
    struct Col {
        RamifiedLaurent series;
        size_t vi, deg, bj;
    };
    std::vector<Col> cols;
    long long mmin = PREC_INF, mcut = PREC_INF;
    for (size_t i = 0; i < values.size(); ++i)
        for (long long k = 0; k <= D; ++k)
            for (long long j = 0; j < e; ++j) {
                Col c;
                c.series = rl_scale(rl_mul(values[i].value, rl_theta_pow(lc, k)), g.pow(j));
                c.vi = i;
                c.deg = size_t(k);
                c.bj = size_t(j);
                if (c.series.known_nonzero()) mmin = std::min(mmin, c.series.val_u());
                mcut = std::min(mcut, c.series.prec);
                cols.push_back(std::move(c));
            }
    if (mmin >= PREC_INF) mmin = 0;
    if (mcut >= PREC_INF) {
        // every column is exact: rows beyond the supports are vacuous
        mcut = mmin + lc->M;
        for (const auto& c : cols)
            if (c.series.known_nonzero())
                mcut = std::max(mcut, c.series.terms.rbegin()->first + lc->M);
    }
    // use every certified digit; `precision_theta` is the minimum window the
    // caller demands before the nullspace is trusted at all
    long long cap = precision_theta * lc->M;
    long long nrows_exp = mcut - mmin;
    if (nrows_exp < cap || nrows_exp * eL < (long long)cols.size() + 8)
        fail("InsufficientPrecision",
             "only " + std::to_string(nrows_exp < 0 ? 0 : nrows_exp * eL) + " constraint rows for " +
                 std::to_string(cols.size()) + " unknowns at degree bound " + std::to_string(D));
    // dense matrix over F_p
    std::vector<std::vector<int>> mat(size_t(nrows_exp * eL), std::vector<int>(cols.size(), 0));
    for (size_t cidx = 0; cidx < cols.size(); ++cidx)
        for (const auto& [m, cf] : cols[cidx].series.terms) {
            if (m < mmin || m >= mcut) continue;
            for (long long co = 0; co < eL; ++co)
                mat[size_t((m - mmin) * eL + co)][cidx] = cf.c[size_t(co)];
        }
    auto null_basis = detail::fp_nullspace(std::move(mat), lc->p(), cols.size());
    RelationBasis rb;
    rb.degree_bound = D;
    for (const auto& v : values) rb.labels.push_back(v.label);
    for (const auto& vec : null_basis) {
        Relation rel;
        rel.coeffs.assign(values.size(), std::vector<FFElem>(size_t(D + 1), ff_zero(lc->field)));
        for (size_t cidx = 0; cidx < cols.size(); ++cidx) {
            if (vec[cidx] == 0) continue;
            const Col& c = cols[cidx];
            FFElem add = g.pow((long long)c.bj) * FFElem(lc->field, vec[cidx]);
            rel.coeffs[c.vi][c.deg] = rel.coeffs[c.vi][c.deg] + add;
        }
        // residual with certified floor
        RamifiedLaurent res = rl_zero(lc);
        res.prec = PREC_INF;
        for (size_t i = 0; i < values.size(); ++i)
            for (long long k = 0; k <= D; ++k) {
                const FFElem& cf = rel.coeffs[i][size_t(k)];
                if (cf.is_zero()) continue;
                res = rl_add(res, rl_scale(rl_mul(values[i].value, rl_theta_pow(lc, k)), cf));
            }
        // re-verify against every certified digit, not just the hunt window;
        // truncation artifacts show a nonzero residual here and get dropped
        if (res.known_nonzero()) continue;
        rel.residual_val = Rat(res.prec, lc->M);
        rb.relations.push_back(std::move(rel));
    }
    // keep an F_q-independent subset when F_q is not prime: drop any
    // relation inside the F_p-span of the F_q-multiples of the kept ones
    if (e > 1 && !rb.relations.empty()) {
        size_t width = values.size() * size_t(D + 1) * size_t(eL);
        auto flat = [&](const Relation& r, const FFElem& mult) {
            std::vector<int> v(width, 0);
            size_t pos = 0;
            for (const auto& per : r.coeffs)
                for (const auto& x : per) {
                    FFElem y = x * mult;
                    for (long long co = 0; co < eL; ++co) v[pos + size_t(co)] = y.c[size_t(co)];
                    pos += size_t(eL);
                }
            return v;
        };
        std::vector<std::vector<int>> echelon; // reduced rows of the span
        auto reduce_into = [&](std::vector<int> v) -> bool {
            long long pp = lc->p();
            for (const auto& row : echelon) {
                size_t lead = 0;
                while (lead < width && row[lead] == 0) ++lead;
                if (lead < width && v[lead] != 0) {
                    long long f = v[lead]; // row is normalized to lead 1
                    for (size_t k2 = lead; k2 < width; ++k2)
                        v[k2] = int(((v[k2] - f * row[k2]) % pp + pp) % pp);
                }
            }
            size_t lead = 0;
            while (lead < width && v[lead] == 0) ++lead;
            if (lead == width) return false; // dependent
            long long inv = 1, base = v[lead], ee = pp - 2;
            while (ee) {
                if (ee & 1) inv = inv * base % pp;
                base = base * base % pp;
                ee >>= 1;
            }
            for (size_t k2 = lead; k2 < width; ++k2) v[k2] = int(v[k2] * inv % pp);
            echelon.push_back(std::move(v));
            return true;
        };
        std::vector<Relation> kept;
        for (const auto& r : rb.relations) {
            if (!reduce_into(flat(r, ff_one(lc->field)))) continue;
            kept.push_back(r);
            for (long long j = 1; j < e; ++j) reduce_into(flat(r, g.pow(j)));
        }
        rb.relations = std::move(kept);
    }
    return rb;
}

// monomial lift: all products of the values up to the given total degree
inline RelationBasis algebraic_relations(const std::vector<LabeledValue>& values,
                                         long long total_degree, long long D,
                                         long long precision_theta) {
    LaurentCfgPtr lc = values[0].value.cfg;
    std::vector<LabeledValue> monomials;
    std::vector<long long> expo(values.size(), 0);
    std::function<void(size_t, long long)> rec = [&](size_t pos, long long left) {
        if (pos == values.size()) {
            RamifiedLaurent m = rl_one(lc);
            m.prec = PREC_INF;
            std::string label;
            for (size_t i = 0; i < values.size(); ++i) {
                for (long long k = 0; k < expo[i]; ++k) m = rl_mul(m, values[i].value);
                if (expo[i] > 0) {
                    if (!label.empty()) label += "*";
                    label += values[i].label;
                    if (expo[i] > 1) label += "^" + std::to_string(expo[i]);
                }
            }
            if (label.empty()) label = "1";
            monomials.push_back(LabeledValue{label, m});
            return;
        }
        for (long long k = 0; k <= left; ++k) {
            expo[pos] = k;
            rec(pos + 1, left - k);
            expo[pos] = 0;
        }
    };
    rec(0, total_degree);
    if ((long long)monomials.size() * (D + 1) > 20000)
        fail("BudgetExceeded", "monomial count times coefficient degrees too large");
    return linear_relations(monomials, D, precision_theta);
}

// ---------------------------------------------------------------------------
// identity checks of the gamma section

struct IdentityReport {
    std::string name;
    bool pass = false;
    bool defect_zero = false;
    Rat defect_val;
    std::string notes;
};

// G(q^j/(1-q^l)) = (-theta)^{q^j/(q^l-1)} Omega_l^{(-l+j)} G(q^{j-1}/(1-q^l))^q,
// with the j = 0 wraparound through q^{l-1}; exact proof constants
inline IdentityReport check_prop_gam_omega(const SeriesEnv& env, long long l, long long j,
                                           const Rat& threshold, bool sabotage_constant = false) {
    if (l < 2) fail("BadArgument", "the propositions assume l >= 2");
    if (j < 0 || j >= l) fail("BadArgument", "need 0 <= j <= l-1");
    long long q = env.q();
    IdentityReport rep;
    rep.name = "prop-gamma-omega l=" + std::to_string(l) + " j=" + std::to_string(j);
    long long cexp = pow_ll(q, j);
    long long prev = j == 0 ? pow_ll(q, l - 1) : pow_ll(q, j - 1);
    long long twist_depth = j == 0 ? 0 : l - j;
    TateSeries lhs = gfun(env, digits_of_fraction(cexp, l, q));
    // proof constants: (-theta)^{q^l/(q^l-1)} for the wraparound, else
    // (-theta)^{q^j/(q^l-1)}
    long long num = j == 0 ? pow_ll(q, l) : cexp;
    if (sabotage_constant) num += 1;
    TateSeries rhs = ts_mul(omega(env, l, twist_depth),
                            ts_pow(gfun(env, digits_of_fraction(prev, l, q)), q));
    rhs = ts_scale(rhs, rl_const_theta_power(env.lc, num, pow_ll(q, l) - 1));
    Defect d = ts_defect(lhs, rhs);
    rep.defect_zero = d.known_zero;
    rep.defect_val = d.val;
    rep.pass = d.known_zero && d.val > threshold;
    return rep;
}

// Lemma 3.3: b_j = dtheta^{(j)}(P_N) / P_N with q^{Nl} > j satisfies
// dtheta^{(j)} G = b_j G; b_j regular at t = theta
struct LemmaBjReport {
    std::string name;
    bool pass = false;
    bool b0_is_one = false;
    bool regular_at_theta = false;
    Rat min_defect_val;
    std::string notes;
};

inline LemmaBjReport check_lemma_bj(const SeriesEnv& env, long long l, long long h, long long jmax,
                                    const Rat& threshold) {
    long long q = env.q();
    LemmaBjReport rep;
    rep.name = "lemma-bj l=" + std::to_string(l) + " h=" + std::to_string(h);
    rep.min_defect_val = Rat::inf();
    PadicDigits digits = digits_of_fraction(pow_ll(q, h), l, q);
    TateSeries G = gfun(env, digits);
    bool all = true;
    for (long long j = 0; j <= jmax; ++j) {
        long long N = 1;
        while (pow_ll_sat(q, N * l) <= j) ++N;
        TateSeries PN = gfun_upto(env, digits, N * l + h);
        TateSeries bj = ts_mul(ts_theta_hyperderiv(PN, j), ts_inv(PN));
        if (j == 0) rep.b0_is_one = ts_defect(bj, ts_one(env.lc, env.Nt)).known_zero;
        Defect d = ts_defect(ts_theta_hyperderiv(G, j), ts_mul(bj, G));
        if (!d.known_zero || !(d.val > threshold)) all = false;
        rep.min_defect_val = rat_min(rep.min_defect_val, d.val);
    }
    // regularity of the b_j denominator: P_N(theta) != 0, evaluated exactly
    // from the defining factors
    long long Nmax = 1;
    while (pow_ll_sat(q, Nmax * l) <= jmax) ++Nmax;
    RamifiedLaurent pn_theta = rl_one(env.lc);
    for (long long i = 0; i <= Nmax; ++i) {
        long long pos = i * l + h;
        if (pos == 0 || digits.digit(pos) == 0) continue;
        for (long long nn = 0; nn < pos; ++nn) {
            RamifiedLaurent f =
                rl_sub(rl_one(env.lc), rl_theta_pow(env.lc, pow_ll(q, nn) - pow_ll(q, pos)));
            pn_theta = rl_mul(pn_theta, f.truncated(env.lc->prec));
        }
    }
    rep.regular_at_theta = pn_theta.known_nonzero();
    rep.pass = all && rep.b0_is_one && rep.regular_at_theta;
    return rep;
}

// Lemmas 3.4/3.5: hunt the span witness relating dtheta^{(n)} Gamma to the
// t-hyperderivatives of G at theta
struct SpanReport {
    std::string name;
    bool found = false;
    bool conclusive_control = false;
    std::string combination;
    std::string notes = "bounded-height evidence only";
};

inline SpanReport check_span_lemma(const SeriesEnv& env, long long h, long long l, long long n,
                                   long long D) {
    long long q = env.q();
    SpanReport rep;
    rep.name = "span-lemma h=" + std::to_string(h) + " n=" + std::to_string(n);
    PadicDigits digits = digits_of_fraction(pow_ll(q, h), l, q);
    RamifiedLaurent gamma = gamma_arith(env, digits);
    TateSeries G = gfun(env, digits);
    std::vector<LabeledValue> vals;
    vals.push_back({"dtheta^" + std::to_string(n) + "(Gamma)", rl_theta_hyperderiv(gamma, n)});
    for (long long k = n; k >= 0; --k)
        vals.push_back({"dtG^" + std::to_string(k), ts_eval_theta(G, k).value});
    RelationBasis rb = linear_relations(vals, D, 30);
    for (const auto& rel : rb.relations) {
        bool uses_target = false;
        for (const auto& x : rel.coeffs[0])
            if (!x.is_zero()) uses_target = true;
        if (!uses_target) continue;
        rep.found = true;
        std::string comb;
        for (size_t i = 0; i < vals.size(); ++i) {
            bool nz = false;
            for (const auto& x : rel.coeffs[i])
                if (!x.is_zero()) nz = true;
            if (nz) {
                if (!comb.empty()) comb += " + ";
                comb += "c_" + std::to_string(i) + "(theta)*" + vals[i].label;
            }
        }
        rep.combination = comb + " = 0";
        break;
    }
    // control: a random wrong target admits no relation at the same bound
    RamifiedLaurent wrong = rl_add(vals[0].value, rl_theta_pow(env.lc, -7));
    std::vector<LabeledValue> ctrl = vals;
    ctrl[0] = {"wrong", wrong};
    RelationBasis rc = linear_relations(ctrl, D, 30);
    bool ctrl_found = false;
    for (const auto& rel : rc.relations) {
        for (const auto& x : rel.coeffs[0])
            if (!x.is_zero()) ctrl_found = true;
    }
    rep.conclusive_control = !ctrl_found;
    return rep;
}

} // namespace tmf
