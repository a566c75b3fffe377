#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <tmf/motive.hpp>

using namespace tmf;

namespace {

LaurentCfgPtr lc_q3_l2() { return laurent_cfg(ff_make(3, 1, 2), 8, 0, 200); }
LaurentCfgPtr lc_q3_l3() { return laurent_cfg(ff_make(3, 1, 3), 26, 0, 150); }

EvalCtx ctx_for(const LaurentCfgPtr& lc, int Nt = 40) {
    return EvalCtx{SeriesEnv{lc, Nt}, at_weights(WeightProvider::AndersonThakur), {}};
}

TwistedMatrix random_poly_matrix(const LaurentCfgPtr& lc, long long d, std::mt19937_64& rng) {
    TwistedMatrix m(lc, d, d);
    std::uniform_int_distribution<long long> ec(0, lc->field->field_size() - 1);
    std::uniform_int_distribution<int> ed(0, 3);
    for (long long i = 0; i < d; ++i)
        for (long long j = 0; j < d; ++j) {
            TPoly p(lc);
            int deg = ed(rng);
            for (int k = 0; k <= deg; ++k)
                p.c.push_back(rl_monomial(lc, (ed(rng) - 1) * lc->M, ff_from_key(lc->field, ec(rng))));
            p.trim();
            m.at(i, j) = te_from_poly(p);
        }
    return m;
}

std::vector<std::vector<TateSeries>> mat_mul_ts(const std::vector<std::vector<TateSeries>>& a,
                                                const std::vector<std::vector<TateSeries>>& b) {
    size_t n = a.size();
    std::vector<std::vector<TateSeries>> r(n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            TateSeries s = ts_mul(a[i][0], b[0][j]);
            for (size_t k = 1; k < n; ++k) s = ts_add(s, ts_mul(a[i][k], b[k][j]));
            r[i].push_back(s);
        }
    return r;
}

} // namespace

TEST_CASE("carlitz motive") {
    auto lc = lc_q3_l2();
    auto ctx = ctx_for(lc);
    MotiveSpec C = mk_carlitz(lc);
    TrivReport rep = verify_rat(C, ctx, Rat(150));
    REQUIRE(rep.pass);
    REQUIRE(rep.defect_zero);
    REQUIRE(rep.defect_val > Rat(150));
    // det Phi|_theta = 0: hypothesis of the entireness criterion not applicable
    REQUIRE(rep.det_phi_theta_nonzero == 0);

    // rho_1(t - theta) = [[t-theta, 0], [1, t-theta]]
    MotiveSpec C1 = mk_prolong(C, 1);
    REQUIRE(te_equal(C1.Phi.at(0, 0), C.Phi.at(0, 0)));
    REQUIRE(te_equal(C1.Phi.at(1, 1), C.Phi.at(0, 0)));
    REQUIRE(te_equal(C1.Phi.at(1, 0), te_one(lc)));
    REQUIRE(C1.Phi.at(0, 1).is_zero());
    for (long long n = 1; n <= 2; ++n) {
        TrivReport r2 = verify_rat(mk_prolong(C, n), ctx, Rat(150));
        REQUIRE(r2.pass);
    }
}

TEST_CASE("companion motive of the Carlitz F_{q^l}[t]-module") {
    for (long long l : {2LL, 3LL}) {
        auto lc = l == 2 ? lc_q3_l2() : lc_q3_l3();
        auto ctx = ctx_for(lc);
        MotiveSpec M = mk_phi_psi_l(lc, l);
        // top-left Psi entry is Omega_l itself
        TateSeries e00 = psi_eval(M.Psi[0][0], ctx);
        REQUIRE(ts_defect(e00, omega(ctx.env, l, 0)).known_zero);
        TrivReport rep = verify_rat(M, ctx, Rat(100));
        REQUIRE(rep.pass);
        REQUIRE(rep.det_phi_theta_nonzero == 0); // det = +-(t-theta)
        // det Psi_l is a unit in the model
        std::vector<std::vector<TateSeries>> E(static_cast<size_t>(l));
        for (long long i = 0; i < l; ++i)
            for (long long j = 0; j < l; ++j)
                E[size_t(i)].push_back(psi_eval(M.Psi[size_t(i)][size_t(j)], ctx));
        TateSeries det = l == 2 ? ts_sub(ts_mul(E[0][0], E[1][1]), ts_mul(E[0][1], E[1][0]))
                                : ts_zero(lc, ctx.env.Nt);
        if (l == 3) {
            TateSeries d0 = ts_mul(E[0][0], ts_sub(ts_mul(E[1][1], E[2][2]), ts_mul(E[1][2], E[2][1])));
            TateSeries d1 = ts_mul(E[0][1], ts_sub(ts_mul(E[1][0], E[2][2]), ts_mul(E[1][2], E[2][0])));
            TateSeries d2 = ts_mul(E[0][2], ts_sub(ts_mul(E[1][0], E[2][1]), ts_mul(E[1][1], E[2][0])));
            det = ts_add(ts_sub(d0, d1), d2);
        }
        REQUIRE(det.coeff(0).known_nonzero());
        TateSeries dinv = ts_inv(det);
        REQUIRE(ts_defect(ts_mul(det, dinv), ts_one(lc, det.Nt())).known_zero);
    }
}

TEST_CASE("derived carlitz motives") {
    auto lc = lc_q3_l2();
    auto ctx = ctx_for(lc);
    MotiveSpec C = mk_carlitz(lc);
    MotiveSpec C2 = mk_derived(C, 2);
    REQUIRE(C2.level == 2);
    // Phi' = (t - theta^{(-1)})(t - theta)
    TwistedExpr lin = te_from_poly(tp_linear(lc, rl_theta_pow(lc, 1)));
    TwistedExpr expect = te_mul(te_twist(lin, -1), lin);
    REQUIRE(te_equal(C2.Phi.at(0, 0), expect));
    REQUIRE(C2.Phi.at(0, 0).insep_depth() == 1);
    REQUIRE(verify_rat(C2, ctx, Rat(100)).pass);
    REQUIRE(verify_rat(mk_derived(C, 3), ctx, Rat(100)).pass);
}

TEST_CASE("N and its l-th derived motive") {
    for (long long l : {2LL, 3LL}) {
        auto lc = l == 2 ? lc_q3_l2() : lc_q3_l3();
        auto ctx = ctx_for(lc);
        MotiveSpec N = mk_N(lc, l);
        REQUIRE_FALSE(N.has_psi);
        MotiveSpec Nl = mk_derived(N, l);
        MotiveSpec Nbar = mk_N_derived(lc, l);
        REQUIRE(tm_equal(Nl.Phi, Nbar.Phi)); // the derived companion diagonalizes
        TrivReport rep = verify_rat(Nbar, ctx, Rat(100));
        REQUIRE(rep.pass);
        REQUIRE(rep.level == l);
        REQUIRE(rep.det_phi_theta_nonzero == 0); // the (t-theta) factors vanish at theta
    }
}

TEST_CASE("prolongation is a monoid homomorphism") {
    auto lc = lc_q3_l2();
    std::mt19937_64 rng(31);
    for (long long d : {2LL, 3LL}) {
        for (int rep = 0; rep < 50; ++rep) {
            TwistedMatrix X = random_poly_matrix(lc, d, rng);
            TwistedMatrix Y = random_poly_matrix(lc, d, rng);
            for (long long n = 1; n <= 2; ++n) {
                REQUIRE(tm_equal(tm_prolong(tm_mul(X, Y), n),
                                 tm_mul(tm_prolong(X, n), tm_prolong(Y, n))));
            }
        }
        for (long long n = 1; n <= 2; ++n)
            REQUIRE(tm_equal(tm_prolong(tm_identity(lc, d), n), tm_identity(lc, d * (n + 1))));
    }
}

TEST_CASE("prolongation commutes with twisting and derivation") {
    auto lc = lc_q3_l2();
    std::mt19937_64 rng(37);
    TwistedMatrix X = random_poly_matrix(lc, 2, rng);
    for (long long n = 1; n <= 2; ++n)
        for (long long m : {1LL, 2LL})
            REQUIRE(tm_equal(tm_prolong(tm_twist(X, m), n), tm_twist(tm_prolong(X, n), m)));

    // rho_n(P^{(s)}) = (rho_n P)^{(s)} on the Carlitz and N motives
    MotiveSpec C = mk_carlitz(lc);
    MotiveSpec N = mk_N(lc, 2);
    for (long long n = 1; n <= 2; ++n)
        for (long long s = 2; s <= 3; ++s) {
            REQUIRE(tm_equal(mk_prolong(mk_derived(C, s), n).Phi,
                             mk_derived(mk_prolong(C, n), s).Phi));
            REQUIRE(tm_equal(mk_prolong(mk_derived(N, s), n).Phi,
                             mk_derived(mk_prolong(N, n), s).Phi));
        }
}

TEST_CASE("M[s] matrices match the displayed examples") {
    auto lc = lc_q3_l2();
    auto ctx = ctx_for(lc);
    WeightProvider w = at_weights(WeightProvider::AndersonThakur);
    TPoly lin = tp_linear(lc, rl_theta_pow(lc, 1));

    // depth 1, m = 0: [[(t-theta)^s, 0], [(t-theta)^s u_s^{(-1)}, 1]]
    for (long long s : {1LL, 2LL}) {
        MotiveSpec M = mk_M_index(lc, Index{s}, 0, w);
        REQUIRE(te_equal(M.Phi.at(0, 0), te_from_poly(tp_pow(lin, s))));
        REQUIRE(te_equal(M.Phi.at(1, 0), te_from_poly(tp_pow(lin, s)))); // u_s = 1
        REQUIRE(te_equal(M.Phi.at(1, 1), te_one(lc)));
        REQUIRE(M.Phi.at(0, 1).is_zero());
        REQUIRE(verify_rat(M, ctx, Rat(100)).pass);
    }

    // depth 2 block of Phi_3 for (s, s') = (1, 2)
    MotiveSpec M12 = mk_M_index(lc, Index{1, 2}, 0, w);
    REQUIRE(te_equal(M12.Phi.at(0, 0), te_from_poly(tp_pow(lin, 3))));
    REQUIRE(te_equal(M12.Phi.at(1, 0), te_from_poly(tp_pow(lin, 3))));
    REQUIRE(te_equal(M12.Phi.at(1, 1), te_from_poly(tp_pow(lin, 2))));
    REQUIRE(te_equal(M12.Phi.at(2, 1), te_from_poly(tp_pow(lin, 2))));
    REQUIRE(te_equal(M12.Phi.at(2, 2), te_one(lc)));
    REQUIRE(M12.Phi.at(0, 1).is_zero());
    REQUIRE(M12.Phi.at(2, 0).is_zero());
    REQUIRE(verify_rat(M12, ctx, Rat(100)).pass);
    TateSeries e00 = psi_eval(M12.Psi[0][0], ctx);
    REQUIRE(ts_defect(e00, ts_pow(omega(ctx.env, 1, 0), 3)).known_zero);
    TateSeries e21 = psi_eval(M12.Psi[2][1], ctx);
    REQUIRE(ts_defect(e21, cmpl_L(ctx.env, Index{1, 2}, 3, 2, w)).known_zero);

    // rho_1 M[(s)]: the Phi_4 block display
    MotiveSpec M4 = mk_M_index(lc, Index{2}, 1, w);
    REQUIRE(M4.dim() == 4);
    TPoly p2 = tp_pow(lin, 2);
    REQUIRE(te_equal(M4.Phi.at(0, 0), te_from_poly(p2)));
    REQUIRE(te_equal(M4.Phi.at(1, 0), te_from_poly(p2)));
    REQUIRE(te_equal(M4.Phi.at(1, 1), te_one(lc)));
    REQUIRE(te_equal(M4.Phi.at(2, 0), te_from_poly(tp_hyperderiv(p2, 1))));
    REQUIRE(te_equal(M4.Phi.at(3, 0), te_from_poly(tp_hyperderiv(p2, 1))));
    REQUIRE(te_equal(M4.Phi.at(2, 2), te_from_poly(p2)));
    REQUIRE(te_equal(M4.Phi.at(3, 2), te_from_poly(p2)));
    REQUIRE(te_equal(M4.Phi.at(3, 3), te_one(lc)));
    REQUIRE(M4.Phi.at(2, 1).is_zero());
    REQUIRE(M4.Phi.at(3, 1).is_zero());
    REQUIRE(verify_rat(M4, ctx, Rat(100)).pass);
}

TEST_CASE("M_i assembly from the enumeration") {
    auto lc = lc_q3_l2();
    auto ctx = ctx_for(lc);
    WeightProvider w = at_weights(WeightProvider::AndersonThakur);
    std::vector<std::pair<Index, long long>> en = {
        {Index{1}, 0}, {Index{2}, 0}, {Index{1}, 1}, {Index{2}, 1}, {Index{1, 2}, 0}, {Index{1, 2}, 1}};
    // M_0 = rho_n C
    MotiveSpec M0 = mk_M_i(lc, en, 2, 0, w);
    REQUIRE(tm_equal(M0.Phi, mk_prolong(mk_carlitz(lc), 2).Phi));

    // M_2 with n = 2: rho_2 C + M[(s)] + M[(s')], the Example display
    MotiveSpec M2 = mk_M_i(lc, en, 2, 2, w);
    REQUIRE(M2.dim() == 3 + 2 + 2);
    TwistedMatrix expect = mk_prolong(mk_carlitz(lc), 2).Phi;
    expect = tm_direct_sum(expect, mk_M_index(lc, Index{1}, 0, w).Phi);
    expect = tm_direct_sum(expect, mk_M_index(lc, Index{2}, 0, w).Phi);
    REQUIRE(tm_equal(M2.Phi, expect));
    REQUIRE(verify_rat(M2, ctx, Rat(100)).pass);

    // direct-sum verification = conjunction of component verifications
    REQUIRE(verify_rat(mk_M_index(lc, Index{1}, 0, w), ctx, Rat(100)).pass);
    REQUIRE(verify_rat(mk_M_index(lc, Index{2}, 0, w), ctx, Rat(100)).pass);
    REQUIRE(verify_rat(mk_prolong(mk_carlitz(lc), 2), ctx, Rat(100)).pass);

    // derived motives keep the same trivialization
    MotiveSpec M2d = mk_derived(M2, 2);
    REQUIRE(verify_rat(M2d, ctx, Rat(100)).pass);
}

TEST_CASE("fault injection flips the verifier") {
    // in the M = q-1 context the injected u^5 dominates Phi^{(1)} delta^{(1)},
    // so the reported defect valuation is exactly 5
    auto lc = laurent_cfg(ff_make(3, 1, 2), 2, 0, 200);
    auto ctx = ctx_for(lc);
    MotiveSpec C = mk_carlitz(lc);
    REQUIRE(verify_rat(C, ctx, Rat(100)).pass);
    TrivReport bad = verify_rat(C, ctx, Rat(100), Perturbation{0, 0, 5});
    REQUIRE_FALSE(bad.pass);
    REQUIRE_FALSE(bad.defect_zero);
    REQUIRE(bad.defect_val_u == 5);
    MotiveSpec C1 = mk_prolong(C, 1);
    for (long long i = 0; i < 2; ++i) {
        TrivReport b2 = verify_rat(C1, ctx, Rat(100), Perturbation{i, 0, 5});
        REQUIRE_FALSE(b2.pass);
        REQUIRE(b2.defect_val_u == 5);
    }

    // any perturbed Psi_l entry flips its check to FAIL
    auto lc8 = lc_q3_l2();
    auto ctx8 = ctx_for(lc8);
    MotiveSpec M = mk_phi_psi_l(lc8, 2);
    REQUIRE(verify_rat(M, ctx8, Rat(100)).pass);
    for (long long i = 0; i < 2; ++i)
        for (long long j = 0; j < 2; ++j) {
            TrivReport b3 = verify_rat(M, ctx8, Rat(100), Perturbation{i, j, 5});
            REQUIRE_FALSE(b3.pass);
            REQUIRE_FALSE(b3.defect_zero);
            REQUIRE(b3.defect_val_u <= 5);
        }
}

TEST_CASE("toeplitz shape check") {
    auto lc = lc_q3_l2();
    auto ctx = ctx_for(lc, 24);
    TateSeries om = omega(ctx.env, 2, 0);
    std::vector<std::vector<TateSeries>> base = {{om}};
    REQUIRE(toeplitz_shape_check(rho_n_series(base, 2), 2, 1));

    // product closure: rho_1(X) rho_1(Y) keeps the shape
    std::mt19937_64 rng(41);
    std::vector<std::vector<TateSeries>> X(2), Y(2);
    std::uniform_int_distribution<long long> ec(0, 8);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            TateSeries f = ts_zero(lc, 24), g = ts_zero(lc, 24);
            for (int k = 0; k < 4; ++k) {
                f.set_coeff(k, rl_monomial(lc, 0, ff_from_key(lc->field, ec(rng))));
                g.set_coeff(k, rl_monomial(lc, 0, ff_from_key(lc->field, ec(rng))));
            }
            X[size_t(i)].push_back(f);
            Y[size_t(i)].push_back(g);
        }
    REQUIRE(toeplitz_shape_check(mat_mul_ts(rho_n_series(X, 1), rho_n_series(Y, 1)), 1, 2));

    auto bad = rho_n_series(X, 1);
    bad[0][1] = ts_one(lc, 24);
    REQUIRE_FALSE(toeplitz_shape_check(bad, 1, 2));
}

TEST_CASE("composite motive of the main theorem") {
    auto lc = lc_q3_l2();
    auto ctx = ctx_for(lc);
    WeightProvider w = at_weights(WeightProvider::AndersonThakur);
    std::vector<std::pair<Index, long long>> en = {{Index{1}, 0}, {Index{2}, 0}};
    long long l = 2, n = 1;
    MotiveSpec left = mk_prolong(mk_N_derived(lc, l), n);
    MotiveSpec right = mk_derived(mk_M_i(lc, en, n, 2, w), l);
    MotiveSpec total = mk_direct_sum({left, right});
    REQUIRE(total.level == l);
    REQUIRE(verify_rat(total, ctx, Rat(100)).pass);
}
