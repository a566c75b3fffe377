#pragma once

#include <fstream>
#include <sstream>

#include "suite.hpp"

namespace tmf {

// Run configuration shared by the CLI subcommands. A config file is a plain
// key = value list (# starts a comment) with the same keys as the fields.
struct RunConfig {
    long long p = 3;
    long long e = 1;
    long long L = 0; // 0: derive from l
    long long l = 2;
    long long n = 1;
    std::string M_policy = "auto"; // "auto" or a positive integer (separable part)
    int Nt = 40;
    long long prec = 200; // coefficient precision, theta-units
    long long Dmax = 8;
    long long D = 10;
    long long total_degree = 2;
    std::string index_set = "1;2;1,2";
    std::string weights = "anderson-thakur";
    std::string output;
    int threads = 1;

    long long q() const {
        long long r = 1;
        for (long long i = 0; i < e; ++i) r *= p;
        return r;
    }
};

inline IndexSet parse_index_set(const std::string& spec) {
    IndexSet I;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        std::vector<long long> parts;
        std::stringstream ps(item);
        std::string tok;
        while (std::getline(ps, tok, ',')) parts.push_back(std::stoll(tok));
        I.insert(Index(parts));
    }
    return I;
}

inline WeightProvider::Kind parse_weights(const std::string& w) {
    if (w == "constant-one") return WeightProvider::ConstantOne;
    if (w == "anderson-thakur") return WeightProvider::AndersonThakur;
    if (w == "user-file") return WeightProvider::UserTable;
    fail("BadArgument", "unknown weight provider '" + w + "'");
}

// "c/(1-q^l)" or a plain non-negative integer
inline PadicDigits parse_fraction(const std::string& text, long long q) {
    size_t slash = text.find('/');
    if (slash == std::string::npos) return digits_from_integer(std::stoll(text), q);
    long long c = std::stoll(text.substr(0, slash));
    std::string den = text.substr(slash + 1);
    // accept (1-q^l) with or without parentheses
    if (!den.empty() && den.front() == '(') den = den.substr(1, den.size() - 2);
    if (den.rfind("1-q^", 0) != 0)
        fail("BadArgument", "fraction denominator must have the form (1-q^l)");
    long long l = std::stoll(den.substr(4));
    return digits_of_fraction(c, l, q);
}

inline void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("BadArgument", "cannot open config file " + path);
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "p") rc.p = std::stoll(val);
        else if (key == "e") rc.e = std::stoll(val);
        else if (key == "L") rc.L = std::stoll(val);
        else if (key == "l") rc.l = std::stoll(val);
        else if (key == "n") rc.n = std::stoll(val);
        else if (key == "M") rc.M_policy = val;
        else if (key == "Nt") rc.Nt = int(std::stoll(val));
        else if (key == "prec") rc.prec = std::stoll(val);
        else if (key == "Dmax") rc.Dmax = std::stoll(val);
        else if (key == "D") rc.D = std::stoll(val);
        else if (key == "total_degree") rc.total_degree = std::stoll(val);
        else if (key == "index_set") rc.index_set = val;
        else if (key == "weights") rc.weights = val;
        else if (key == "output") rc.output = val;
        else if (key == "threads") rc.threads = int(std::stoll(val));
        else fail("BadArgument", "unknown config key '" + key + "'");
    }
}

struct Runtime {
    RunConfig rc;
    LaurentCfgPtr lc;
    SeriesEnv env;
    WeightProvider weights;
    IndexSet I;
    bool closure_applied = false;
};

inline Runtime make_runtime(RunConfig rc) {
    if (rc.L == 0) rc.L = rc.l;
    if (rc.L % rc.l != 0) fail("BadArgument", "l must divide L");
    long long msep;
    if (rc.M_policy == "auto")
        msep = std::lcm(rc.q() - 1, pow_ll(rc.q(), rc.l) - 1);
    else
        msep = std::stoll(rc.M_policy);
    if (msep % rc.p == 0) fail("BadArgument", "separable ramification must be coprime to p");
    Runtime rt;
    rt.rc = rc;
    rt.lc = laurent_cfg(ff_make(rc.p, rc.e, rc.L), msep, 0, rc.prec);
    rt.env = SeriesEnv{rt.lc, rc.Nt};
    rt.weights = at_weights(parse_weights(rc.weights));
    IndexSet I = parse_index_set(rc.index_set);
    rt.I = sub_closure(I);
    rt.closure_applied = rt.I != I;
    return rt;
}

inline SuiteConfig make_suite_config(const Runtime& rt) {
    SuiteConfig sc;
    sc.p = rt.rc.p;
    sc.e = rt.rc.e;
    sc.L = rt.rc.L == 0 ? rt.rc.l : rt.rc.L;
    sc.l = rt.rc.l;
    sc.n = rt.rc.n;
    sc.Nt = rt.rc.Nt;
    sc.prec = rt.rc.prec;
    sc.Dmax = rt.rc.Dmax;
    sc.D = rt.rc.D;
    sc.I = rt.I;
    sc.weights = parse_weights(rt.rc.weights);
    sc.threads = rt.rc.threads;
    return sc;
}

} // namespace tmf
