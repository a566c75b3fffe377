#pragma once

#include <json.hpp>

#include "suite.hpp"

namespace tmf {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// scalars

inline json rat_to_json(const Rat& r) {
    if (r.is_inf()) return json("inf");
    return json::array({r.num, r.den});
}

inline json val_to_json(const Val& v) {
    if (v.inf) return json("inf");
    return rat_to_json(v.v);
}

// ---------------------------------------------------------------------------
// Laurent model: {p,e,L,modulus,M,prec,terms:[[m,[coords...]],...]}

inline json laurent_to_json(const RamifiedLaurent& x) {
    json j;
    j["p"] = x.cfg->field->p;
    j["e"] = x.cfg->field->e;
    j["L"] = x.cfg->field->L;
    j["modulus"] = x.cfg->field->modulus;
    j["M"] = x.cfg->M;
    j["prec"] = x.prec >= PREC_INF ? json("inf") : json(x.prec);
    json terms = json::array();
    for (const auto& [m, c] : x.terms) terms.push_back(json::array({m, json(c.c)}));
    j["terms"] = std::move(terms);
    return j;
}

inline LaurentCfgPtr laurent_cfg_from_json(const json& j) {
    long long p = j.at("p"), e = j.at("e"), L = j.at("L"), M = j.at("M");
    long long msep = M;
    int ein = 0;
    while (msep % p == 0) {
        msep /= p;
        ++ein;
    }
    // generous working precision; the loaded values carry their own cutoffs
    return laurent_cfg(ff_make(p, e, L), msep, ein, (PREC_INF / 2) / M);
}

inline RamifiedLaurent laurent_from_json(const json& j, LaurentCfgPtr lc = nullptr) {
    if (!lc) lc = laurent_cfg_from_json(j);
    RamifiedLaurent x(lc);
    x.prec = j.at("prec").is_string() ? PREC_INF : (long long)j.at("prec");
    for (const auto& t : j.at("terms")) {
        FFElem c(lc->field);
        std::vector<int> coords = t.at(1);
        c.c = coords;
        x.set_term(t.at(0), c);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Tate model: {N_t, tail:{kind,params}, coeffs:[laurent,...]}

inline json tate_to_json(const TateSeries& f) {
    json j;
    j["N_t"] = f.Nt();
    json tail;
    switch (f.tail.kind) {
        case Tail::None: tail["kind"] = "none"; break;
        case Tail::Exact: tail["kind"] = "exact"; break;
        case Tail::Geometric: tail["kind"] = "geometric"; break;
        case Tail::SuperGeometric: tail["kind"] = "super-geometric"; break;
    }
    if (f.tail.kind == Tail::Geometric || f.tail.kind == Tail::SuperGeometric)
        tail["params"] = json::array({rat_to_json(f.tail.vA), rat_to_json(f.tail.vB)});
    j["tail"] = std::move(tail);
    json coeffs = json::array();
    for (const auto& c : f.a) coeffs.push_back(laurent_to_json(c));
    j["coeffs"] = std::move(coeffs);
    return j;
}

inline Rat rat_from_json(const json& j) {
    if (j.is_string()) return Rat::inf();
    return Rat((long long)j.at(0), (long long)j.at(1));
}

inline TateSeries tate_from_json(const json& j) {
    int Nt = j.at("N_t");
    if (Nt <= 0 || j.at("coeffs").empty()) fail("BadArgument", "empty Tate series");
    LaurentCfgPtr lc = laurent_cfg_from_json(j.at("coeffs").at(0));
    TateSeries f(lc, Nt);
    for (int i = 0; i < Nt; ++i) f.set_coeff(i, laurent_from_json(j.at("coeffs").at(size_t(i)), lc));
    const json& tail = j.at("tail");
    std::string kind = tail.at("kind");
    if (kind == "none")
        f.tail = Tail::none();
    else if (kind == "exact")
        f.tail = Tail::exact();
    else {
        Tail t;
        t.kind = kind == "geometric" ? Tail::Geometric : Tail::SuperGeometric;
        t.vA = rat_from_json(tail.at("params").at(0));
        t.vB = rat_from_json(tail.at("params").at(1));
        f.tail = t;
    }
    return f;
}

// ---------------------------------------------------------------------------
// twisted-expression grammar (public format):
//   e := poly(P) | tw(m,e) | dt(n,e) | mul(e,e) | add(e,e)
// Psi entries extend the atoms:
//   one | omega(l,j) | lser(s1 s2 ...; j; l) | scalar(C) | pow(e,k)
// with P = C|C|... (t-coefficients low to high) and C = m:key[,m:key...] or 0,
// key the base-p coordinate value of the field element.

inline std::string laurent_compact(const RamifiedLaurent& x) {
    if (x.terms.empty()) return "0";
    std::string s;
    for (const auto& [m, c] : x.terms) {
        if (!s.empty()) s += ",";
        s += std::to_string(m) + ":" + std::to_string(c.key());
    }
    return s;
}

inline std::string poly_to_expr(const TPoly& p) {
    std::string s = "poly(";
    for (size_t i = 0; i < p.c.size(); ++i) {
        if (i) s += "|";
        s += laurent_compact(p.c[i]);
    }
    return s + ")";
}

inline std::string texpr_to_string(const TwistedExpr& e) {
    if (e.terms.empty()) return "poly()";
    std::vector<std::string> parts;
    for (const auto& t : e.terms) {
        std::string factor = poly_to_expr(t.coef);
        for (const auto& a : t.sym)
            factor = "mul(" + factor + ",tw(" + std::to_string(a.m) + "," + poly_to_expr(a.p) + "))";
        parts.push_back(factor);
    }
    std::string out = parts.back();
    for (size_t i = parts.size() - 1; i-- > 0;) out = "add(" + parts[i] + "," + out + ")";
    return out;
}

inline std::string psi_to_string(const PsiPtr& p) {
    if (!p) return "poly()";
    switch (p->op) {
        case PsiExpr::One: return "one";
        case PsiExpr::OmegaAtom:
            return "omega(" + std::to_string(p->a) + "," + std::to_string(p->b) + ")";
        case PsiExpr::LAtom: {
            std::string s = "lser(";
            for (size_t i = 0; i < p->idx.parts.size(); ++i) {
                if (i) s += " ";
                s += std::to_string(p->idx.parts[i]);
            }
            return s + ";" + std::to_string(p->jj) + ";" + std::to_string(p->ll) + ")";
        }
        case PsiExpr::PolyAtom: return poly_to_expr(p->poly);
        case PsiExpr::ScalarAtom: return "scalar(" + laurent_compact(p->scal) + ")";
        case PsiExpr::Mul:
            return "mul(" + psi_to_string(p->kids[0]) + "," + psi_to_string(p->kids[1]) + ")";
        case PsiExpr::Add:
            return "add(" + psi_to_string(p->kids[0]) + "," + psi_to_string(p->kids[1]) + ")";
        case PsiExpr::Pow: return "pow(" + psi_to_string(p->kids[0]) + "," + std::to_string(p->a) + ")";
        case PsiExpr::Dt: return "dt(" + std::to_string(p->a) + "," + psi_to_string(p->kids[0]) + ")";
        case PsiExpr::Twist:
            return "tw(" + std::to_string(p->a) + "," + psi_to_string(p->kids[0]) + ")";
    }
    fail("Internal", "unknown Psi node");
}

namespace detail {

struct ExprParser {
    const std::string& s;
    size_t pos = 0;
    LaurentCfgPtr lc;

    char peek() const { return pos < s.size() ? s[pos] : '\0'; }
    void expect(char c) {
        if (peek() != c) fail("BadArgument", "expression parse error at " + std::to_string(pos));
        ++pos;
    }
    bool consume(const std::string& word) {
        if (s.compare(pos, word.size(), word) == 0) {
            pos += word.size();
            return true;
        }
        return false;
    }
    long long number() {
        size_t start = pos;
        if (peek() == '-') ++pos;
        while (isdigit(peek())) ++pos;
        if (pos == start) fail("BadArgument", "expected number at " + std::to_string(pos));
        return std::stoll(s.substr(start, pos - start));
    }

    RamifiedLaurent compact_laurent() {
        RamifiedLaurent x(lc);
        if (peek() == '0' && (pos + 1 >= s.size() || !isdigit(s[pos + 1]))) {
            // lone zero
            if (s[pos] == '0' && (pos + 1 >= s.size() || s[pos + 1] == ')' || s[pos + 1] == '|' ||
                                  s[pos + 1] == ',')) {
                ++pos;
                return x;
            }
        }
        while (true) {
            long long m = number();
            expect(':');
            long long key = number();
            x.set_term(m, ff_from_key(lc->field, key));
            if (peek() == ',' && pos + 1 < s.size() && (isdigit(s[pos + 1]) || s[pos + 1] == '-')) {
                // lookahead: inner commas separate monomials, outer commas arguments
                size_t save = pos;
                ++pos;
                size_t probe = pos;
                bool mono = false;
                while (probe < s.size() && (isdigit(s[probe]) || s[probe] == '-')) ++probe;
                if (probe < s.size() && s[probe] == ':') mono = true;
                if (!mono) {
                    pos = save;
                    break;
                }
                continue;
            }
            break;
        }
        return x;
    }

    TPoly poly_body() {
        TPoly p(lc);
        expect('(');
        if (peek() == ')') {
            ++pos;
            return p;
        }
        while (true) {
            p.c.push_back(compact_laurent());
            if (peek() == '|') {
                ++pos;
                continue;
            }
            break;
        }
        expect(')');
        p.trim();
        return p;
    }

    TwistedExpr texpr() {
        if (consume("add(")) {
            TwistedExpr a = texpr();
            expect(',');
            TwistedExpr b = texpr();
            expect(')');
            return te_add(a, b);
        }
        if (consume("mul(")) {
            TwistedExpr a = texpr();
            expect(',');
            TwistedExpr b = texpr();
            expect(')');
            return te_mul(a, b);
        }
        if (consume("tw(")) {
            long long m = number();
            expect(',');
            TwistedExpr a = texpr();
            expect(')');
            return te_twist(a, m);
        }
        if (consume("dt(")) {
            long long n = number();
            expect(',');
            TwistedExpr a = texpr();
            expect(')');
            return te_dt(a, n);
        }
        if (consume("poly")) return te_from_poly(poly_body());
        fail("BadArgument", "expression parse error at " + std::to_string(pos));
    }

    PsiPtr psi() {
        if (consume("one")) return psi_one();
        if (consume("omega(")) {
            long long l = number();
            expect(',');
            long long j = number();
            expect(')');
            return psi_omega(l, j);
        }
        if (consume("lser(")) {
            std::vector<long long> parts;
            parts.push_back(number());
            while (peek() == ' ') {
                ++pos;
                parts.push_back(number());
            }
            expect(';');
            long long jj = number();
            expect(';');
            long long ll = number();
            expect(')');
            return psi_lseries(Index(parts), jj, ll);
        }
        if (consume("scalar(")) {
            RamifiedLaurent x = compact_laurent();
            expect(')');
            return psi_scalar(x);
        }
        if (consume("pow(")) {
            PsiPtr a = psi();
            expect(',');
            long long k = number();
            expect(')');
            return psi_pow(a, k);
        }
        if (consume("dt(")) {
            long long n = number();
            expect(',');
            PsiPtr a = psi();
            expect(')');
            return psi_dt(a, n);
        }
        if (consume("tw(")) {
            long long m = number();
            expect(',');
            PsiPtr a = psi();
            expect(')');
            return psi_twist(a, m);
        }
        if (consume("mul(")) {
            PsiPtr a = psi();
            expect(',');
            PsiPtr b = psi();
            expect(')');
            return psi_mul(a, b);
        }
        if (consume("add(")) {
            PsiPtr a = psi();
            expect(',');
            PsiPtr b = psi();
            expect(')');
            return psi_add(a, b);
        }
        if (consume("poly")) return psi_poly(poly_body());
        fail("BadArgument", "Psi expression parse error at " + std::to_string(pos));
    }
};

} // namespace detail

inline TwistedExpr texpr_from_string(const std::string& s, const LaurentCfgPtr& lc) {
    detail::ExprParser p{s, 0, lc};
    TwistedExpr e = p.texpr();
    if (p.pos != s.size()) fail("BadArgument", "trailing characters in expression");
    return e;
}

inline PsiPtr psi_from_string(const std::string& s, const LaurentCfgPtr& lc) {
    detail::ExprParser p{s, 0, lc};
    PsiPtr e = p.psi();
    if (p.pos != s.size()) fail("BadArgument", "trailing characters in Psi expression");
    return e;
}

inline json motive_to_json(const MotiveSpec& m) {
    json j;
    j["schema"] = "tmf/1";
    j["name"] = m.name;
    j["level"] = m.level;
    j["blocks"] = m.blocks;
    j["field"] = {{"p", m.Phi.cfg->field->p},
                  {"e", m.Phi.cfg->field->e},
                  {"L", m.Phi.cfg->field->L},
                  {"M", m.Phi.cfg->M}};
    json phi = json::array();
    for (long long i = 0; i < m.Phi.rows; ++i) {
        json row = json::array();
        for (long long jx = 0; jx < m.Phi.cols; ++jx) row.push_back(texpr_to_string(m.Phi.at(i, jx)));
        phi.push_back(std::move(row));
    }
    j["phi"] = std::move(phi);
    if (m.has_psi) {
        json psi = json::array();
        for (const auto& row : m.Psi) {
            json r = json::array();
            for (const auto& p : row) r.push_back(psi_to_string(p));
            psi.push_back(std::move(r));
        }
        j["psi"] = std::move(psi);
    } else {
        j["psi"] = nullptr;
    }
    return j;
}

// ---------------------------------------------------------------------------
// reports

inline json suite_report_to_json(const SuiteReport& rep) {
    json results = json::array();
    for (const auto& it : rep.items)
        results.push_back({{"name", it.name},
                           {"status", it.status},
                           {"defect_valuation", it.defect_valuation},
                           {"runtime_ms", it.runtime_ms},
                           {"notes", it.notes}});
    return {{"schema", "tmf/1"}, {"all_pass", rep.all_pass()}, {"results", std::move(results)}};
}

inline json relation_basis_to_json(const RelationBasis& rb) {
    json rels = json::array();
    for (const auto& r : rb.relations) {
        json coeffs = json::array();
        for (const auto& per : r.coeffs) {
            json cs = json::array();
            for (const auto& c : per) cs.push_back(json(c.c));
            coeffs.push_back(std::move(cs));
        }
        rels.push_back({{"coeffs", std::move(coeffs)}, {"residual_valuation", rat_to_json(r.residual_val)}});
    }
    return {{"schema", "tmf/1"},
            {"banner", rb.banner},
            {"labels", rb.labels},
            {"degree_bound", rb.degree_bound},
            {"relations", std::move(rels)}};
}

} // namespace tmf
