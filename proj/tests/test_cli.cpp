#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <tmf/serialize.hpp>

using namespace tmf;

namespace {

std::string bin() {
    const char* b = std::getenv("TMF_BIN");
    REQUIRE(b != nullptr);
    return b;
}

int run_cli(const std::string& args) {
    std::string cmd = bin() + " " + args + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

json slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

// strip volatile fields for byte-determinism comparisons
void strip_volatile(json& j) {
    j.erase("generated_at");
    if (j.contains("results"))
        for (auto& r : j["results"]) r.erase("runtime_ms");
}

} // namespace

TEST_CASE("exit status contract") {
    REQUIRE(run_cli("predict cpty --s 3 --l 1 --out /tmp/tmf_p.json") == 0);
    REQUIRE(run_cli("predict nonsense") == 2);
    REQUIRE(run_cli("--bogus-flag compute omega") == 2);
    REQUIRE(run_cli("compute omega --l 2 --j 9 --out /tmp/tmf_x.json") == 2); // j out of range
    // a passing suite exits 0
    REQUIRE(run_cli("verify gamma-identities --l 2 --prec 200 --out /tmp/tmf_v.json") == 0);
    // starving the precision below the pinned threshold flips checks to FAIL
    REQUIRE(run_cli("verify gamma-identities --l 2 --prec 100 --out /tmp/tmf_vf.json") == 1);
    json rep = slurp("/tmp/tmf_vf.json");
    REQUIRE(rep["all_pass"] == false);
    // the empty suite yields an empty report and exit 0
    REQUIRE(run_cli("verify none --out /tmp/tmf_ve.json") == 0);
    REQUIRE(slurp("/tmp/tmf_ve.json")["results"].empty());
}

TEST_CASE("compute subcommands produce loadable series") {
    REQUIRE(run_cli("compute omega --l 2 --j 1 --prec 160 --out /tmp/tmf_omega.json") == 0);
    TateSeries loaded = tate_from_json(slurp("/tmp/tmf_omega.json"));
    SeriesEnv env{laurent_cfg(ff_make(3, 1, 2), 8, 0, 160), 40};
    TateSeries direct = omega(env, 2, 1);
    REQUIRE(loaded.Nt() == direct.Nt());
    for (int i = 0; i < loaded.Nt(); ++i) REQUIRE(loaded.coeff(i).terms == direct.coeff(i).terms);

    REQUIRE(run_cli("compute gamma --frac \"1/(1-q^2)\" --prec 160 --out /tmp/tmf_gamma.json") == 0);
    RamifiedLaurent g = laurent_from_json(slurp("/tmp/tmf_gamma.json"));
    RamifiedLaurent expect = gamma_arith(env, digits_of_fraction(1, 2, 3));
    REQUIRE(g.terms == expect.terms);

    REQUIRE(run_cli("compute atseries --index 1,2 --at-theta --hyper 1 --prec 160 "
                    "--out /tmp/tmf_at.json") == 0);
    json at = slurp("/tmp/tmf_at.json");
    REQUIRE(at.contains("value"));
    REQUIRE(at.contains("error_valuation"));
    REQUIRE(at["error_valuation"] != json("inf"));

    REQUIRE(run_cli("compute zeta --s 2 --Dmax 6 --prec 160 --out /tmp/tmf_z.json") == 0);
    json z = slurp("/tmp/tmf_z.json");
    REQUIRE(rat_from_json(z["tail_valuation"]) == Rat(14));
}

TEST_CASE("hunts") {
    REQUIRE(run_cli("hunt omega-products --l 2 --prec 160 --out /tmp/tmf_h1.json") == 0);
    REQUIRE(slurp("/tmp/tmf_h1.json")["relations"].size() == 1);

    REQUIRE(run_cli("hunt euler-carlitz --weight q-1 --Dmax 8 --prec 160 --out /tmp/tmf_h2.json") == 0);
    json h2 = slurp("/tmp/tmf_h2.json");
    REQUIRE(h2["banner"] == "bounded-height evidence only");
    REQUIRE(!h2["relations"].empty());

    REQUIRE(run_cli("hunt corollary64 --index 1,2 --l 2 --n 0 --D 2 --prec 160 "
                    "--out /tmp/tmf_h3.json") == 0);
    REQUIRE(slurp("/tmp/tmf_h3.json")["relations"].empty());
}

TEST_CASE("reports are deterministic modulo timestamps") {
    REQUIRE(run_cli("verify gamma-identities --l 2 --prec 200 --out /tmp/tmf_d1.json") == 0);
    REQUIRE(run_cli("verify gamma-identities --l 2 --prec 200 --threads 4 --out /tmp/tmf_d2.json") == 0);
    json a = slurp("/tmp/tmf_d1.json"), b = slurp("/tmp/tmf_d2.json");
    strip_volatile(a);
    strip_volatile(b);
    REQUIRE(a.dump() == b.dump());
}

TEST_CASE("config file mirrors the flags") {
    {
        std::ofstream f("/tmp/tmf.conf");
        f << "# desk-scale defaults\n"
          << "p = 3\n"
          << "l = 2\n"
          << "n = 1\n"
          << "prec = 160\n"
          << "index_set = 1;2\n";
    }
    REQUIRE(run_cli("--config /tmp/tmf.conf compute gammaC --s 4 --out /tmp/tmf_c1.json") == 0);
    REQUIRE(run_cli("compute gammaC --s 4 --prec 160 --out /tmp/tmf_c2.json") == 0);
    REQUIRE(slurp("/tmp/tmf_c1.json") == slurp("/tmp/tmf_c2.json"));
    REQUIRE(run_cli("--config /tmp/missing.conf compute gammaC --s 4") == 2);
}

TEST_CASE("laurent and tate serialization round-trips") {
    SeriesEnv env{laurent_cfg(ff_make(3, 1, 2), 8, 0, 120), 24};
    RamifiedLaurent pi = carlitz_pi(env);
    RamifiedLaurent back = laurent_from_json(laurent_to_json(pi));
    REQUIRE(back.terms == pi.terms);
    REQUIRE(back.prec == pi.prec);

    TateSeries om = omega(env, 2, 0);
    TateSeries om2 = tate_from_json(tate_to_json(om));
    REQUIRE(om2.tail.kind == om.tail.kind);
    REQUIRE(om2.tail.vA == om.tail.vA);
    for (int i = 0; i < om.Nt(); ++i) {
        REQUIRE(om2.coeff(i).terms == om.coeff(i).terms);
        REQUIRE(om2.coeff(i).prec == om.coeff(i).prec);
    }
}

TEST_CASE("motive expression grammar round-trips") {
    auto lc = laurent_cfg(ff_make(3, 1, 2), 8, 0, 120);
    WeightProvider w = at_weights(WeightProvider::AndersonThakur);

    // Phi entries, including symbolic inseparable twists
    for (const MotiveSpec& m : {mk_N_derived(lc, 2), mk_derived(mk_carlitz(lc), 2),
                                mk_M_index(lc, Index{1, 2}, 1, w)}) {
        for (const auto& e : m.Phi.e) {
            std::string s = texpr_to_string(e);
            TwistedExpr back = texpr_from_string(s, lc);
            REQUIRE(te_equal(back, e));
        }
    }

    // Psi entries evaluate identically after a round-trip
    EvalCtx ctx{SeriesEnv{lc, 16}, w, {}};
    MotiveSpec M = mk_M_index(lc, Index{1, 2}, 0, w);
    for (const auto& row : M.Psi)
        for (const auto& p : row) {
            if (!p) continue;
            PsiPtr back = psi_from_string(psi_to_string(p), lc);
            REQUIRE(ts_defect(psi_eval(back, ctx), psi_eval(p, ctx)).known_zero);
        }

    // the full motive document carries the grammar strings
    json j = motive_to_json(M);
    REQUIRE(j["phi"].size() == 3);
    REQUIRE(j["psi"].size() == 3);
}
