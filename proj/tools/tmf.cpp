// tmf: exact computations with Carlitz/Anderson-Thakur deformation series,
// pre-t-motive trivialization checks, predicted transcendence degrees, and
// bounded-height relation hunts.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include <tmf/config.hpp>
#include <tmf/serialize.hpp>

using namespace tmf;

namespace {

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void emit(const json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream f(out);
        if (!f) fail("BadArgument", "cannot open output file " + out);
        f << j.dump(2) << "\n";
    }
}

json config_json(const RunConfig& rc) {
    return {{"p", rc.p},     {"e", rc.e},       {"L", rc.L == 0 ? rc.l : rc.L},
            {"l", rc.l},     {"n", rc.n},       {"M", rc.M_policy},
            {"Nt", rc.Nt},   {"prec", rc.prec}, {"Dmax", rc.Dmax},
            {"D", rc.D},     {"total_degree", rc.total_degree},
            {"index_set", rc.index_set},        {"weights", rc.weights},
            {"threads", rc.threads}};
}

json theta_value_json(const ThetaValue& tv) {
    return {{"value", laurent_to_json(tv.value)}, {"error_valuation", val_to_json(tv.err)}};
}

Index single_index(const std::string& arg) {
    IndexSet set = parse_index_set(arg);
    if (set.size() != 1) fail("BadArgument", "expected exactly one index, got '" + arg + "'");
    return *set.begin();
}

int run(int argc, char** argv) {
    CLI::App app{"exact ultrametric computer algebra for function-field special values"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig rc;
    std::string config_path;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--p", rc.p, "characteristic");
    app.add_option("--e", rc.e, "q = p^e");
    app.add_option("--L", rc.L, "field extension degree over F_q (default l)");
    app.add_option("--l", rc.l, "the fixed l");
    app.add_option("--n", rc.n, "prolongation / hyperderivative order");
    app.add_option("--M", rc.M_policy, "ramification policy: auto or an integer");
    app.add_option("--Nt", rc.Nt, "t-adic truncation order");
    app.add_option("--prec", rc.prec, "coefficient precision in theta-units");
    app.add_option("--Dmax", rc.Dmax, "zeta brute-force strata");
    app.add_option("--D", rc.D, "relation coefficient degree bound");
    app.add_option("--total-degree", rc.total_degree, "monomial total degree for algebraic hunts");
    app.add_option("--index-set", rc.index_set, "semicolon-separated MZV indices, e.g. \"1;2;1,2\"");
    app.add_option("--weights", rc.weights, "constant-one | anderson-thakur | user-file");
    app.add_option("--threads", rc.threads, "worker count (or TMF_THREADS)");
    std::string out;
    app.add_option("--out", out, "output path (default stdout)");

    // ---- compute -------------------------------------------------------------
    auto* compute = app.add_subcommand("compute", "construct a series or value");
    std::string target, frac, index_arg;
    long long arg_j = 0, arg_s = 1, arg_jpos = 0, arg_lpos = 1, hyper = 0;
    bool at_theta = false;
    compute->add_option("target", target,
                        "omega | G | gamma | gammaC | zeta | mzv | atseries | cmpl | pi")
        ->required();
    compute->add_option("--j", arg_j, "twist depth for omega");
    compute->add_option("--frac", frac, "argument c/(1-q^l) or integer for G/gamma");
    compute->add_option("--s", arg_s, "positive integer argument");
    compute->add_option("--index", index_arg, "comma-separated MZV index");
    compute->add_option("--jpos", arg_jpos, "L-series position j");
    compute->add_option("--lpos", arg_lpos, "L-series position l");
    compute->add_option("--hyper", hyper, "hyperderivative order before evaluation");
    compute->add_flag("--at-theta", at_theta, "evaluate at t = theta with a certified error");

    // ---- verify --------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "run an identity suite");
    std::string suite_name;
    verify->add_option("suite", suite_name, "trivializations | gamma-identities | all | none")
        ->required();

    // ---- predict -------------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "predicted transcendence degrees");
    std::string kind;
    long long arg_r = 1;
    predict->add_option("kind", kind, "cpty | gamma-hyper | omega-hyper | sub-indep | main")
        ->required();
    predict->add_option("--s", arg_s, "s parameter for cpty");
    predict->add_option("--r", arg_r, "index depth r");

    // ---- hunt ------------------------------------------------------------------
    auto* hunt = app.add_subcommand("hunt", "bounded-height relation search");
    std::string family, files, weight_arg;
    hunt->add_option("family", family, "omega-products | euler-carlitz | corollary64 | values")
        ->required();
    hunt->add_option("--files", files, "comma-separated Laurent JSON files for 'values'");
    hunt->add_option("--weight", weight_arg, "weight selector (euler-carlitz accepts q-1)");
    hunt->add_option("--index", index_arg, "index for corollary64");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags are configuration errors
    }

    if (!config_path.empty()) {
        RunConfig merged;
        load_config_file(merged, config_path);
        if (app.count("--p")) merged.p = rc.p;
        if (app.count("--e")) merged.e = rc.e;
        if (app.count("--L")) merged.L = rc.L;
        if (app.count("--l")) merged.l = rc.l;
        if (app.count("--n")) merged.n = rc.n;
        if (app.count("--M")) merged.M_policy = rc.M_policy;
        if (app.count("--Nt")) merged.Nt = rc.Nt;
        if (app.count("--prec")) merged.prec = rc.prec;
        if (app.count("--Dmax")) merged.Dmax = rc.Dmax;
        if (app.count("--D")) merged.D = rc.D;
        if (app.count("--total-degree")) merged.total_degree = rc.total_degree;
        if (app.count("--index-set")) merged.index_set = rc.index_set;
        if (app.count("--weights")) merged.weights = rc.weights;
        if (app.count("--threads")) merged.threads = rc.threads;
        rc = merged;
    }

    if (compute->parsed()) {
        Runtime rt = make_runtime(rc);
        json j;
        if (target == "omega") {
            TateSeries om = omega(rt.env, rc.l, arg_j);
            j = at_theta ? theta_value_json(ts_eval_theta(om, hyper)) : tate_to_json(om);
        } else if (target == "G") {
            TateSeries g = gfun(rt.env, parse_fraction(frac, rc.q()));
            j = at_theta ? theta_value_json(ts_eval_theta(g, hyper)) : tate_to_json(g);
        } else if (target == "gamma") {
            j = laurent_to_json(gamma_arith(rt.env, parse_fraction(frac, rc.q())));
        } else if (target == "gammaC") {
            j = laurent_to_json(gamma_carlitz(rt.env, arg_s));
        } else if (target == "zeta") {
            ZetaValue z = carlitz_zeta(rt.env, arg_s, rc.Dmax);
            j = {{"value", laurent_to_json(z.value)}, {"tail_valuation", rat_to_json(z.tail_val)}};
        } else if (target == "mzv") {
            ZetaValue z = mzv(rt.env, single_index(index_arg), rc.Dmax);
            j = {{"value", laurent_to_json(z.value)}, {"tail_valuation", rat_to_json(z.tail_val)}};
        } else if (target == "atseries") {
            TateSeries a = at_series(rt.env, single_index(index_arg), rt.weights);
            j = at_theta ? theta_value_json(ts_eval_theta(a, hyper)) : tate_to_json(a);
        } else if (target == "cmpl") {
            TateSeries c = cmpl_L(rt.env, single_index(index_arg), arg_jpos, arg_lpos, rt.weights);
            j = at_theta ? theta_value_json(ts_eval_theta(c, hyper)) : tate_to_json(c);
        } else if (target == "pi") {
            j = laurent_to_json(carlitz_pi(rt.env));
        } else {
            fail("BadArgument", "unknown compute target '" + target + "'");
        }
        emit(j, out);
        return 0;
    }

    if (verify->parsed()) {
        Runtime rt = make_runtime(rc);
        SuiteConfig sc = make_suite_config(rt);
        if (suite_name == "trivializations")
            sc.only = {"trivialization/"};
        else if (suite_name == "gamma-identities")
            sc.only = {"gamma/"};
        else if (suite_name == "all")
            sc.only = {};
        else if (suite_name == "none")
            sc.only = {"<none>"};
        else
            fail("BadArgument", "unknown suite '" + suite_name + "'");
        SuiteReport rep = identity_suite(sc);
        json j = suite_report_to_json(rep);
        j["config"] = config_json(rc);
        if (rt.closure_applied) j["notices"] = json::array({"index set extended to its Sub-closure"});
        j["generated_at"] = now_iso();
        emit(j, out);
        for (const auto& it : rep.items)
            std::cerr << it.status << "  " << it.name
                      << (it.defect_valuation.empty() ? "" : "  defect>=" + it.defect_valuation)
                      << "\n";
        return rep.all_pass() ? 0 : 1;
    }

    if (predict->parsed()) {
        json j;
        j["schema"] = "tmf/1";
        if (kind == "cpty") {
            j["kind"] = "cpty";
            j["params"] = {{"s", arg_s}, {"l", rc.l}, {"q", rc.q()}, {"p", rc.p}};
            j["value"] = trdeg_cpty(arg_s, rc.l, rc.q(), rc.p);
        } else if (kind == "gamma-hyper") {
            j["kind"] = "gamma-hyper";
            j["params"] = {{"l", rc.l}, {"n", rc.n}};
            j["value"] = trdeg_gamma_hyper(rc.l, rc.n);
        } else if (kind == "omega-hyper") {
            j["kind"] = "omega-hyper";
            j["params"] = {{"n", rc.n}};
            j["value"] = trdeg_omega_hyper(rc.n);
        } else if (kind == "sub-indep") {
            j["kind"] = "sub-indep";
            j["params"] = {{"r", arg_r}, {"n", rc.n}};
            j["value"] = trdeg_sub_indep(arg_r, rc.n);
        } else if (kind == "main") {
            j["kind"] = "main";
            j["params"] = {{"r", arg_r}, {"n", rc.n}, {"l", rc.l}};
            j["value"] = trdeg_main_total(arg_r, rc.n, rc.l);
            j["terms"] = {{"gamma", trdeg_gamma_hyper(rc.l, rc.n)},
                          {"sub", trdeg_sub_indep(arg_r, rc.n)},
                          {"omega", trdeg_omega_hyper(rc.n)}};
        } else {
            fail("BadArgument", "unknown prediction kind '" + kind + "'");
        }
        emit(j, out);
        std::cerr << j["value"] << "\n";
        return 0;
    }

    if (hunt->parsed()) {
        Runtime rt = make_runtime(rc);
        RelationBasis rb;
        if (family == "omega-products") {
            auto a = ts_eval_theta(omega(rt.env, 1, 0), 0);
            TateSeries prod = omega(rt.env, rc.l, 0);
            for (long long jx = 1; jx < rc.l; ++jx) prod = ts_mul(prod, omega(rt.env, rc.l, jx));
            auto b = ts_eval_theta(prod, 0);
            std::vector<LabeledValue> vals = {{"Omega(theta)", a.value},
                                              {"prod Omega_l^(-j)(theta)", b.value}};
            rb = linear_relations(vals, rc.D, 30);
        } else if (family == "euler-carlitz") {
            ZetaValue z = carlitz_zeta(rt.env, rc.q() - 1, rc.Dmax);
            RamifiedLaurent pi = carlitz_pi(rt.env);
            RamifiedLaurent piw = rl_one(rt.lc);
            for (long long k = 0; k < rc.q() - 1; ++k) piw = rl_mul(piw, pi);
            std::vector<LabeledValue> vals = {{"1", rl_one(rt.lc)},
                                              {"zeta(q-1)", z.value},
                                              {"pi~^(q-1)", piw}};
            rb = linear_relations(vals, rc.D, rc.Dmax);
        } else if (family == "corollary64") {
            Index idx = single_index(index_arg.empty() ? "1" : index_arg);
            std::vector<LabeledValue> vals;
            for (long long lp = 0; lp < rc.l; ++lp)
                for (long long np = 0; np <= rc.n; ++np) {
                    auto g = gfun(rt.env, digits_of_fraction(pow_ll(rc.q(), lp), rc.l, rc.q()));
                    vals.push_back({"dt^" + std::to_string(np) + " G(q^" + std::to_string(lp) +
                                        "/(1-q^l))|theta",
                                    ts_eval_theta(g, np).value});
                }
            for (const Index& sub_idx : subsequences(idx))
                for (long long np = 0; np <= rc.n; ++np) {
                    TateSeries a = at_series(rt.env, sub_idx, rt.weights);
                    vals.push_back({"dt^" + std::to_string(np) + " zetaAT" + sub_idx.str() + "|theta",
                                    ts_eval_theta(a, np).value});
                }
            rb = algebraic_relations(vals, rc.total_degree, rc.D, 30);
        } else if (family == "values") {
            std::vector<LabeledValue> vals;
            std::stringstream ss(files);
            std::string f;
            while (std::getline(ss, f, ',')) {
                std::ifstream in(f);
                if (!in) fail("BadArgument", "cannot open " + f);
                json jf = json::parse(in);
                vals.push_back({f, laurent_from_json(jf, rt.lc)});
            }
            if (vals.empty()) fail("BadArgument", "no value files given");
            rb = algebraic_relations(vals, rc.total_degree, rc.D, 30);
        } else {
            fail("BadArgument", "unknown hunt family '" + family + "'");
        }
        json j = relation_basis_to_json(rb);
        j["config"] = config_json(rc);
        j["generated_at"] = now_iso();
        emit(j, out);
        std::cerr << "relations found: " << rb.relations.size() << "\n";
        return 0;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const tmf::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.kind == "InsufficientPrecision")
            std::cerr << "hint: raise --prec or --Dmax to widen the certified window\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
