#pragma once

#include <chrono>
#include <future>
#include <random>

#include "relations.hpp"

namespace tmf {

struct SuiteConfig {
    long long p = 3, e = 1, L = 2;
    long long l = 2;
    long long n = 1;
    int Nt = 40;
    long long prec = 200; // coefficient precision, theta-units
    long long Dmax = 8;
    long long D = 10; // relation-degree bound
    Rat threshold = Rat(150);
    IndexSet I{Index{1}, Index{2}, Index{1, 2}};
    WeightProvider::Kind weights = WeightProvider::AndersonThakur;
    int threads = 1;
    std::vector<std::string> only; // substring filters; {"<none>"} empty suite

    long long q() const {
        long long r = 1;
        for (long long i = 0; i < e; ++i) r *= p;
        return r;
    }
    long long msep() const { return std::lcm(q() - 1, pow_ll(q(), l) - 1); }
};

struct SuiteItem {
    std::string name;
    std::string status; // PASS / FAIL / SKIP
    std::string defect_valuation;
    long long runtime_ms = 0;
    std::string notes;
};

struct SuiteReport {
    std::vector<SuiteItem> items;
    bool all_pass() const {
        for (const auto& it : items)
            if (it.status == "FAIL") return false;
        return true;
    }
};

namespace detail {

struct ItemOutcome {
    bool pass = true;
    std::string defect;
    std::string notes;
};

inline SuiteItem run_item(const std::string& name, const std::function<ItemOutcome()>& fn) {
    SuiteItem item;
    item.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        ItemOutcome out = fn();
        item.status = out.pass ? "PASS" : "FAIL";
        item.defect_valuation = out.defect;
        item.notes = out.notes;
    } catch (const error& e) {
        item.status = "FAIL";
        item.notes = e.what();
    }
    item.runtime_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    return item;
}

inline ItemOutcome from_triv(const TrivReport& r) {
    ItemOutcome out;
    out.pass = r.pass;
    out.defect = r.defect_val.str();
    out.notes = r.notes;
    return out;
}

inline ItemOutcome from_identity(const IdentityReport& r) {
    return ItemOutcome{r.pass, r.defect_val.str(), r.notes};
}

} // namespace detail

// the aggregated identity suite: trivializations, gamma identities,
// specializations, hyperderivative laws, and the predicted-count consistency
inline SuiteReport identity_suite(const SuiteConfig& cfg) {
    SuiteReport report;
    if (cfg.only.size() == 1 && cfg.only[0] == "<none>") return report;

    LaurentCfgPtr lc = laurent_cfg(ff_make(cfg.p, cfg.e, cfg.L), cfg.msep(), 0, cfg.prec);
    SeriesEnv env{lc, cfg.Nt};
    WeightProvider w = at_weights(cfg.weights);
    IndexSet I = sub_closure(cfg.I);
    auto en = enumerate_en(I, cfg.n);
    long long q = cfg.q(), l = cfg.l, n = cfg.n;

    using Fn = std::function<detail::ItemOutcome()>;
    std::vector<std::pair<std::string, Fn>> items;
    auto add = [&](std::string name, Fn fn) { items.emplace_back(std::move(name), std::move(fn)); };

    // --- trivializations -----------------------------------------------------
    add("trivialization/C", [=] {
        EvalCtx ctx{env, w, {}};
        return detail::from_triv(verify_rat(mk_carlitz(lc), ctx, cfg.threshold));
    });
    for (long long np = 1; np <= std::min(n, 2LL); ++np)
        add("trivialization/rho_" + std::to_string(np) + "(C)", [=] {
            EvalCtx ctx{env, w, {}};
            return detail::from_triv(verify_rat(mk_prolong(mk_carlitz(lc), np), ctx, cfg.threshold));
        });
    if (cfg.L % l == 0) {
        add("trivialization/Phi_" + std::to_string(l), [=] {
            EvalCtx ctx{env, w, {}};
            return detail::from_triv(verify_rat(mk_phi_psi_l(lc, l), ctx, cfg.threshold));
        });
        add("trivialization/N^(" + std::to_string(l) + ")", [=] {
            EvalCtx ctx{env, w, {}};
            return detail::from_triv(verify_rat(mk_N_derived(lc, l), ctx, cfg.threshold));
        });
    }
    for (size_t j = 0; j < en.size(); ++j) {
        const auto& [s, m] = en[j];
        add("trivialization/M[" + s.str() + ",m=" + std::to_string(m) + "]", [=] {
            EvalCtx ctx{env, w, {}};
            return detail::from_triv(verify_rat(mk_M_index(lc, s, m, w), ctx, cfg.threshold));
        });
    }
    add("trivialization/M_" + std::to_string(en.size()), [=] {
        EvalCtx ctx{env, w, {}};
        return detail::from_triv(verify_rat(mk_M_i(lc, en, n, (long long)en.size(), w), ctx, cfg.threshold));
    });
    if (cfg.L % l == 0)
        add("trivialization/(rho_n N + M_i)^(l)", [=] {
            EvalCtx ctx{env, w, {}};
            MotiveSpec left = mk_prolong(mk_N_derived(lc, l), n);
            MotiveSpec right = mk_derived(mk_M_i(lc, en, n, (long long)en.size(), w), l);
            return detail::from_triv(verify_rat(mk_direct_sum({left, right}), ctx, cfg.threshold));
        });

    // --- gamma identities ----------------------------------------------------
    if (l >= 2 && cfg.L % l == 0) {
        for (long long j = 0; j < l; ++j)
            add("gamma/prop-3.1-3.2 j=" + std::to_string(j),
                [=] { return detail::from_identity(check_prop_gam_omega(env, l, j, cfg.threshold)); });
        for (long long h = 0; h < l; ++h)
            add("gamma/lemma-3.3 h=" + std::to_string(h), [=] {
                LemmaBjReport r = check_lemma_bj(env, l, h, 3, cfg.threshold);
                return detail::ItemOutcome{r.pass, r.min_defect_val.str(), r.notes};
            });
        add("gamma/span-lemma", [=] {
            SpanReport r = check_span_lemma(env, 0, l, n, cfg.D);
            return detail::ItemOutcome{r.found && r.conclusive_control, "",
                                       r.found ? r.combination : "no witness at bound"};
        });
        add("special/omega-product", [=] {
            TateSeries rhs = omega(env, l, 0);
            for (long long j = 1; j < l; ++j) rhs = ts_mul(rhs, omega(env, l, j));
            Defect d = ts_defect(omega(env, 1, 0), rhs);
            return detail::ItemOutcome{d.known_zero && d.val > cfg.threshold, d.val.str(), ""};
        });
    }
    add("special/G-specializes-to-Gamma", [=] {
        bool ok = true;
        Rat worst = Rat::inf();
        for (long long c = 1; c < pow_ll(q, l); ++c) {
            PadicDigits dg = digits_of_fraction(c, l, q);
            auto ev = ts_eval_theta(gfun(env, dg), 0);
            RamifiedLaurent diff = rl_sub(ev.value, gamma_arith(env, dg).truncated(ev.value.prec));
            if (!diff.is_zero_to_prec()) ok = false;
            worst = rat_min(worst, diff.val_lower());
        }
        return detail::ItemOutcome{ok, worst.str(), ""};
    });
    add("special/AT-specialization", [=] {
        bool ok = true;
        Rat worst = Rat::inf();
        for (long long s = 1; s <= q; ++s) {
            auto ev = ts_eval_theta(at_series(env, Index{s}, w), 0);
            ZetaValue z = carlitz_zeta(env, s, cfg.Dmax);
            RamifiedLaurent rhs = rl_mul(gamma_carlitz(env, s), z.value);
            RamifiedLaurent diff = rl_sub(ev.value.truncated(rhs.prec), rhs.truncated(ev.value.prec));
            if (!diff.is_zero_to_prec() || !(diff.val_lower() >= Rat(8 * s))) ok = false;
            worst = rat_min(worst, diff.val_lower());
        }
        for (const Index& s : I) {
            if (s.dep() < 2) continue;
            bool in_range = true;
            for (long long part : s.parts)
                if (part > q) in_range = false;
            if (!in_range) continue;
            auto ev = ts_eval_theta(at_series(env, s, w), 0);
            ZetaValue z = mzv(env, s, cfg.Dmax);
            RamifiedLaurent rhs = z.value;
            for (long long part : s.parts) rhs = rl_mul(rhs, gamma_carlitz(env, part));
            RamifiedLaurent diff = rl_sub(ev.value.truncated(rhs.prec), rhs.truncated(ev.value.prec));
            if (!diff.is_zero_to_prec()) ok = false;
            worst = rat_min(worst, diff.val_lower());
        }
        return detail::ItemOutcome{ok, worst.str(), ""};
    });
    add("special/omega-pi-unit", [=] {
        auto ev = ts_eval_theta(omega(env, 1, 0), 0);
        RamifiedLaurent unit = rl_mul(ev.value, carlitz_pi(env));
        RamifiedLaurent diff = rl_sub(unit, rl_one(lc).truncated(unit.prec));
        return detail::ItemOutcome{diff.is_zero_to_prec(), diff.val_lower().str(),
                                   "achieved unit 1"};
    });

    // --- hyperderivative laws -------------------------------------------------
    add("laws/leibniz-t", [=] {
        std::mt19937_64 rng(101);
        std::uniform_int_distribution<long long> ec(0, lc->field->field_size() - 1);
        std::uniform_int_distribution<long long> em(-2, 4);
        bool ok = true;
        for (int rep = 0; rep < 100 && ok; ++rep) {
            TateSeries f = ts_zero(lc, 12), g = ts_zero(lc, 12);
            for (int i = 0; i < 8; ++i) {
                f.set_coeff(i, rl_monomial(lc, em(rng) * lc->M, ff_from_key(lc->field, ec(rng))));
                g.set_coeff(i, rl_monomial(lc, em(rng) * lc->M, ff_from_key(lc->field, ec(rng))));
            }
            for (long long nn = 0; nn <= 4 && ok; ++nn) {
                TateSeries lhs = ts_hyperderiv(ts_mul(f, g), nn);
                TateSeries rhs = ts_zero(lc, lhs.Nt());
                for (long long i = 0; i <= nn; ++i)
                    rhs = ts_add(rhs, ts_mul(ts_hyperderiv(f, i), ts_hyperderiv(g, nn - i)));
                ok = ts_defect(lhs, rhs).known_zero;
            }
        }
        return detail::ItemOutcome{ok, "", ""};
    });
    add("laws/leibniz-theta", [=] {
        std::mt19937_64 rng(103);
        std::uniform_int_distribution<long long> ec(0, lc->field->field_size() - 1);
        std::uniform_int_distribution<long long> em(0, 8);
        bool ok = true;
        for (int rep = 0; rep < 100 && ok; ++rep) {
            RamifiedLaurent f(lc), g(lc);
            f.prec = lc->prec;
            g.prec = lc->prec;
            for (int i = 0; i < 5; ++i) {
                f.set_term(em(rng) * lc->M, ff_from_key(lc->field, ec(rng)));
                g.set_term(em(rng) * lc->M, ff_from_key(lc->field, ec(rng)));
            }
            for (long long nn = 0; nn <= 4 && ok; ++nn) {
                RamifiedLaurent lhs = rl_theta_hyperderiv(rl_mul(f, g), nn);
                RamifiedLaurent rhs = rl_zero(lc);
                for (long long i = 0; i <= nn; ++i)
                    rhs = rl_add(rhs, rl_mul(rl_theta_hyperderiv(f, i), rl_theta_hyperderiv(g, nn - i)));
                ok = rl_sub(lhs, rhs).is_zero_to_prec();
            }
        }
        return detail::ItemOutcome{ok, "", ""};
    });
    add("laws/recentering", [=] {
        std::mt19937_64 rng(107);
        std::uniform_int_distribution<long long> ec(0, lc->field->field_size() - 1);
        std::uniform_int_distribution<long long> em(-2, 4);
        bool ok = true;
        RamifiedLaurent th = rl_theta_pow(lc, 1);
        for (int rep = 0; rep < 100 && ok; ++rep) {
            TateSeries f = ts_zero(lc, 10);
            for (int i = 0; i < 10; ++i)
                f.set_coeff(i, rl_monomial(lc, em(rng) * lc->M, ff_from_key(lc->field, ec(rng))));
            // synthetic division oracle for the (t-theta)-expansion
            std::vector<RamifiedLaurent> work = f.a;
            for (int k = 0; k <= 3 && ok; ++k) {
                RamifiedLaurent rem = rl_zero(lc);
                for (size_t i = work.size(); i-- > 0;) rem = rl_add(rl_mul(rem, th), work[i]);
                ok = rl_sub(ts_eval_theta(f, k).value, rem).is_zero_to_prec();
                std::vector<RamifiedLaurent> quot(work.size() ? work.size() - 1 : 0, rl_zero(lc));
                RamifiedLaurent carry = rl_zero(lc);
                for (size_t i = work.size(); i-- > 1;) {
                    carry = rl_add(work[i], rl_mul(carry, th));
                    quot[i - 1] = carry;
                }
                work = quot;
            }
        }
        return detail::ItemOutcome{ok, "", ""};
    });
    add("laws/derivative-kills-qh-powers", [=] {
        std::mt19937_64 rng(109);
        std::uniform_int_distribution<long long> ec(0, lc->field->field_size() - 1);
        std::uniform_int_distribution<long long> em(-2, 6);
        bool ok = true;
        for (int rep = 0; rep < 50 && ok; ++rep) {
            RamifiedLaurent f(lc);
            f.prec = lc->prec;
            for (int i = 0; i < 4; ++i) f.set_term(em(rng) * lc->M, ff_from_key(lc->field, ec(rng)));
            for (long long h = 1; h <= 2 && ok; ++h) {
                RamifiedLaurent fq = f;
                for (long long i = 0; i < h; ++i) fq = rl_frobenius(fq, 1);
                for (long long nn = 1; nn < pow_ll(q, h) && ok; ++nn)
                    ok = rl_theta_hyperderiv(fq, nn).is_zero_to_prec();
            }
        }
        return detail::ItemOutcome{ok, "", ""};
    });
    add("laws/rho-homomorphism", [=] {
        std::mt19937_64 rng(113);
        std::uniform_int_distribution<long long> ec(0, lc->field->field_size() - 1);
        std::uniform_int_distribution<int> ed(0, 3);
        bool ok = true;
        for (long long d : {2LL, 3LL})
            for (int rep = 0; rep < 50 && ok; ++rep) {
                TwistedMatrix X(lc, d, d), Y(lc, d, d);
                for (long long i = 0; i < d; ++i)
                    for (long long j = 0; j < d; ++j) {
                        TPoly px(lc), py(lc);
                        for (int k = 0; k <= ed(rng); ++k)
                            px.c.push_back(rl_monomial(lc, (ed(rng) - 1) * lc->M, ff_from_key(lc->field, ec(rng))));
                        for (int k = 0; k <= ed(rng); ++k)
                            py.c.push_back(rl_monomial(lc, (ed(rng) - 1) * lc->M, ff_from_key(lc->field, ec(rng))));
                        px.trim();
                        py.trim();
                        X.at(i, j) = te_from_poly(px);
                        Y.at(i, j) = te_from_poly(py);
                    }
                for (long long nn = 1; nn <= std::min(n, 2LL) && ok; ++nn)
                    ok = tm_equal(tm_prolong(tm_mul(X, Y), nn),
                                  tm_mul(tm_prolong(X, nn), tm_prolong(Y, nn)));
            }
        // rho_n of derived = derived of rho_n on C and N, symbolically
        MotiveSpec C = mk_carlitz(lc), N = mk_N(lc, l);
        for (long long s = 2; s <= 3 && ok; ++s) {
            ok = tm_equal(mk_prolong(mk_derived(C, s), n).Phi, mk_derived(mk_prolong(C, n), s).Phi);
            if (ok)
                ok = tm_equal(mk_prolong(mk_derived(N, s), n).Phi, mk_derived(mk_prolong(N, n), s).Phi);
        }
        return detail::ItemOutcome{ok, "", ""};
    });

    // --- predicted counts -----------------------------------------------------
    add("counts/consistency", [=] {
        bool ok = true;
        for (long long s = 1; s <= 12 && ok; ++s)
            for (long long ll = 1; ll <= 3 && ok; ++ll) {
                long long count = 0;
                if (q > 2)
                    for (long long mm = 1; mm <= s; ++mm)
                        if (mm % cfg.p != 0 && mm % (q - 1) != 0) ++count;
                ok = trdeg_cpty(s, ll, q, cfg.p) == count + ll;
            }
        for (long long r = 1; r <= 3 && ok; ++r)
            for (long long nn = 0; nn <= 2 && ok; ++nn)
                for (long long ll = 1; ll <= 3 && ok; ++ll)
                    ok = trdeg_main_total(r, nn, ll) ==
                             trdeg_gamma_hyper(ll, nn) + trdeg_sub_indep(r, nn) - trdeg_omega_hyper(nn) &&
                         trdeg_main_total(r, nn, ll) == (nn + 1) * (ll + (1LL << r) - 1);
        return detail::ItemOutcome{ok, "", ""};
    });

    // filter and run
    std::vector<std::pair<std::string, Fn>> selected;
    for (auto& it : items) {
        if (!cfg.only.empty()) {
            bool match = false;
            for (const auto& f : cfg.only)
                if (it.first.find(f) != std::string::npos) match = true;
            if (!match) continue;
        }
        selected.push_back(std::move(it));
    }
    report.items.resize(selected.size());
    int threads = cfg.threads;
    if (const char* envd = std::getenv("TMF_THREADS")) threads = std::max(1, atoi(envd));
    if (threads <= 1) {
        for (size_t i = 0; i < selected.size(); ++i)
            report.items[i] = detail::run_item(selected[i].first, selected[i].second);
    } else {
        std::vector<std::future<SuiteItem>> futs(selected.size());
        size_t next = 0;
        while (next < selected.size()) {
            size_t batch = std::min(size_t(threads), selected.size() - next);
            for (size_t k = 0; k < batch; ++k)
                futs[next + k] = std::async(std::launch::async, detail::run_item,
                                            selected[next + k].first, selected[next + k].second);
            for (size_t k = 0; k < batch; ++k) report.items[next + k] = futs[next + k].get();
            next += batch;
        }
    }
    return report;
}

} // namespace tmf
