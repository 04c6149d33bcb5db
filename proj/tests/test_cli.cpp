#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

// Black-box tests against the installed binary; CLI_PATH and SPECS_DIR are
// injected by the build.

namespace {

struct RunResult {
    int code = -1;
    std::string out;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
    RunResult res;
    std::string cmd = std::string(CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
    int status = pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string spec(const char* name) { return std::string(SPECS_DIR) + "/" + name; }

std::string write_temp(const char* name, const std::string& body) {
    std::string path = std::string("/tmp/pdeseries_cli_test_") + name;
    std::ofstream out(path);
    out << body;
    out.close();
    return path;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("check reports integrability with the documented exit codes") {
    for (const char* name : {"zero.json", "exp.json", "exp_xy.json", "riccati.json",
                             "twin_riccati.json"}) {
        RunResult r = run_cli("check " + spec(name));
        CHECK(r.code == 0);
        CHECK(contains(r.out, "verdict: integrable-to-order-"));
    }

    RunResult nc = run_cli("check " + spec("noncommuting.json"));
    CHECK(nc.code == 2);
    CHECK(contains(nc.out, "verdict: violated"));
    CHECK(contains(nc.out,
                   "entry (t=1, s=1, u=1, v=2) at x^(0,0) has coefficient 1"));

    RunResult mixed = run_cli("check " + spec("mixed_nonintegrable.json"));
    CHECK(mixed.code == 2);
    CHECK(contains(mixed.out, "alpha=(1), beta=(2), u=1, v=2"));
    CHECK(contains(mixed.out, "has coefficient -1"));
}

TEST_CASE("solve prints exact coefficients in a deterministic order") {
    RunResult r = run_cli("solve " + spec("exp.json"));
    CHECK(r.code == 0);
    CHECK(contains(r.out, "y1 @ (0) = 1"));
    CHECK(contains(r.out, "y1 @ (1) = -2"));
    CHECK(contains(r.out, "y1 @ (2) = 2"));
    CHECK(contains(r.out, "y1 @ (3) = -4/3"));
    // Graded order: degree 1 must appear before degree 2.
    CHECK(r.out.find("@ (1)") < r.out.find("@ (2)"));
}

TEST_CASE("eval computes exact rational values") {
    RunResult r = run_cli("eval " + spec("riccati.json") + " --x 1/10");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "values: 3900952380952381/8192000000000000"));

    RunResult r2 = run_cli("eval " + spec("exp_xy.json") + " --x 1/2,1/3");
    CHECK(r2.code == 0);
    CHECK(contains(r2.out, "values: 789869/933120"));

    RunResult missing = run_cli("eval " + spec("exp_xy.json"));
    CHECK(missing.code == 1);
    CHECK(contains(missing.out, "--x"));
}

TEST_CASE("float mode evaluates numerically and cross-validates") {
    RunResult r = run_cli("eval " + spec("exp_xy.json") + " --field float --x 0.2,0.3");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "values: 0.9417645335"));  // exp(-0.06) to series order
    CHECK(contains(r.out, "cross-validation: gap="));
    CHECK(contains(r.out, "point: (0.2, 0.3)"));  // inputs echo in round-trip form
}

TEST_CASE("verify passes on correct specs and fails on the corrupted fixture") {
    RunResult ok = run_cli("verify " + spec("exp_xy.json"));
    CHECK(ok.code == 0);
    CHECK(contains(ok.out, "[PASS] residual"));
    CHECK(contains(ok.out, "[PASS] operator-identity"));
    CHECK(contains(ok.out, "[PASS] oracle-comparison"));
    CHECK(contains(ok.out, "overall: PASS"));

    RunResult ric = run_cli("verify " + spec("riccati.json"));
    CHECK(ric.code == 0);
    CHECK(contains(ric.out, "[PASS] shift-identities"));
    CHECK(contains(ric.out, "sampled identity instances hold exactly"));

    RunResult bad = run_cli("verify " + spec("exp_xy_corrupted.json"));
    CHECK(bad.code == 3);
    CHECK(contains(bad.out, "[FAIL] residual"));
    CHECK(contains(bad.out,
                   "residual for unknown 1, axis 1 has coefficient 2/7 at x^(1,1)"));
    CHECK(contains(bad.out, "overall: FAIL"));
}

TEST_CASE("machine reports are byte-identical across runs") {
    std::string args = "solve " + spec("zero.json") + " --output json";
    RunResult a = run_cli(args);
    RunResult b = run_cli(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(contains(a.out, "\"schema_version\": \"1\""));
    CHECK(contains(a.out, "\"command\": \"solve\""));
    CHECK(contains(a.out, "\"overall\"") == false);

    // Rational-mode reports carry no floating-point content at all.
    CHECK(!contains(a.out, "\"tol\""));
    CHECK(!contains(a.out, "elapsed"));  // timing stays out of the machine report

    RunResult f = run_cli("solve " + spec("zero.json") + " --field float --output json");
    CHECK(f.code == 0);
    CHECK(contains(f.out, "\"tol\""));
    CHECK(contains(f.out, "\"field\": \"float\""));
}

TEST_CASE("json check report shapes the violation as data") {
    RunResult r = run_cli("check " + spec("noncommuting.json") + " --output json");
    CHECK(r.code == 2);
    CHECK(contains(r.out, "\"integrable\": false"));
    CHECK(contains(r.out, "\"verdict\": \"violated\""));
    CHECK(contains(r.out, "\"witness\""));
    CHECK(contains(r.out, "\"value\": \"1\""));
}

TEST_CASE("window control") {
    RunResult escape = run_cli("solve " + spec("riccati.json") + " --window 0..2");
    CHECK(escape.code == 1);
    CHECK(contains(escape.out, "error:"));
    CHECK(contains(escape.out, "escapes the window; widen it"));

    RunResult wide = run_cli("solve " + spec("riccati.json") + " --window -1..30");
    CHECK(wide.code == 0);

    RunResult echo = run_cli("check " + spec("riccati.json"));
    CHECK(contains(echo.out, "window: lo=(0) hi=(26) closure_depth=12"));

    RunResult bad = run_cli("solve " + spec("riccati.json") + " --window nonsense");
    CHECK(bad.code == 1);
}

TEST_CASE("order and initial-value overrides") {
    RunResult r = run_cli("solve " + spec("exp.json") + " --order 3 --output json");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "\"order\": 3"));
    CHECK(!contains(r.out, "\"exponents\": [\n        4"));

    // Polynomial coefficients are exact at any order, so raising works too.
    RunResult raised = run_cli("solve " + spec("exp.json") + " --order 20 --output json");
    CHECK(raised.code == 0);
    CHECK(contains(raised.out, "\"order\": 20"));

    RunResult zero_order = run_cli("solve " + spec("exp.json") + " --order 0");
    CHECK(zero_order.code == 1);

    RunResult c = run_cli("eval " + spec("exp.json") + " --C 3 --x 0");
    CHECK(c.code == 0);
    CHECK(contains(c.out, "values: 3"));

    RunResult wrong = run_cli("solve " + spec("exp.json") + " --C 1,2");
    CHECK(wrong.code == 1);
    CHECK(contains(wrong.out, "error:"));
}

TEST_CASE("spec files are validated strictly") {
    RunResult missing = run_cli("check /tmp/definitely_not_there.json");
    CHECK(missing.code == 1);
    CHECK(contains(missing.out, "cannot open spec file"));

    std::string bad_json = write_temp("bad.json", "{\"name\": ");
    RunResult parse = run_cli("check " + bad_json);
    CHECK(parse.code == 1);
    CHECK(contains(parse.out, "parse error"));

    std::string float_coeff = write_temp("float.json", R"({
  "name": "t", "kind": "linear", "field": "rational",
  "n": 1, "k": 1, "order": 4,
  "equations": [{"r": 1, "s": 1, "u": 1, "coeff": 0.5}]
})");
    RunResult fc = run_cli("check " + float_coeff);
    CHECK(fc.code == 1);
    CHECK(contains(fc.out, "not JSON numbers"));

    std::string dup = write_temp("dup.json", R"({
  "name": "t", "kind": "linear", "field": "rational",
  "n": 1, "k": 1, "order": 4,
  "equations": [{"r": 1, "s": 1, "u": 1, "coeff": "1"},
                {"r": 1, "s": 1, "u": 1, "coeff": "2"}]
})");
    RunResult dr = run_cli("check " + dup);
    CHECK(dr.code == 1);
    CHECK(contains(dr.out, "duplicate"));

    std::string unknown = write_temp("unknown.json", R"({
  "name": "t", "kind": "linear", "field": "rational", "extra": 1,
  "n": 1, "k": 1, "order": 4, "equations": []
})");
    RunResult ur = run_cli("check " + unknown);
    CHECK(ur.code == 1);
    CHECK(contains(ur.out, "unknown"));

    std::string no_c = write_temp("no_c.json", R"({
  "name": "t", "kind": "linear", "field": "rational",
  "n": 1, "k": 1, "order": 4,
  "equations": [{"r": 1, "s": 1, "u": 1, "coeff": "2"}]
})");
    RunResult nr = run_cli("solve " + no_c);
    CHECK(nr.code == 1);
    CHECK(contains(nr.out, "initial values"));
    RunResult with_c = run_cli("solve " + no_c + " --C 1");
    CHECK(with_c.code == 0);

    std::string bad_expr = write_temp("bad_expr.json", R"({
  "name": "t", "kind": "linear", "field": "rational",
  "n": 1, "k": 1, "order": 4,
  "equations": [{"r": 1, "s": 1, "u": 1, "coeff": "x9"}]
})");
    RunResult be = run_cli("check " + bad_expr);
    CHECK(be.code == 1);
    CHECK(contains(be.out, "x9"));
}

TEST_CASE("usage errors exit with code 1") {
    RunResult none = run_cli("");
    CHECK(none.code == 1);
    RunResult badsub = run_cli("frobnicate " + spec("exp.json"));
    CHECK(badsub.code == 1);
    RunResult badflag = run_cli("check " + spec("exp.json") + " --no-such-flag");
    CHECK(badflag.code == 1);
    RunResult badfield = run_cli("check " + spec("exp.json") + " --field complex");
    CHECK(badfield.code == 1);
    RunResult help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(contains(help.out, "check"));
    CHECK(contains(help.out, "solve"));
}
