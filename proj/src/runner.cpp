#include "pdeseries/runner.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pdeseries/oracle.hpp"
#include "pdeseries/specfile.hpp"

namespace pdeseries {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* command_name(Command c) {
    switch (c) {
        case Command::check: return "check";
        case Command::solve: return "solve";
        case Command::eval: return "eval";
        case Command::verify: return "verify";
    }
    return "unknown";
}

template <class R>
std::vector<R> parse_scalars(const std::vector<std::string>& texts, const std::string& what,
                             int expected) {
    if (static_cast<int>(texts.size()) != expected)
        throw UsageError(what + " needs " + std::to_string(expected) + " value(s), got " +
                         std::to_string(texts.size()));
    std::vector<R> out;
    for (const auto& t : texts) {
        auto v = FieldTraits<R>::parse(t);
        if (!v) throw UsageError(what + ": cannot parse \"" + t + "\"");
        out.push_back(*v);
    }
    return out;
}

template <class R>
std::vector<std::string> render_scalars(const std::vector<R>& values) {
    std::vector<std::string> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(FieldTraits<R>::str(v));
    return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string tuple_str(const std::vector<int>& e) {
    std::string s = "(";
    for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
    return s + ")";
}

// Seeded polynomial probe for operator-identity checks.  Uses raw generator
// output (not a distribution) so the same seed gives the same probe on every
// standard library.
template <class R>
std::vector<PowerSeries<R>> random_polynomials(int n, int k, int max_deg, int order,
                                               std::mt19937_64& rng) {
    std::vector<PowerSeries<R>> out;
    for (int r = 0; r < n; ++r) {
        PowerSeries<R> s(k, order);
        for (const auto& m : multi_indices_up_to(k, max_deg)) {
            long num = static_cast<long>(rng() % 7) - 3;
            long den = 1 + static_cast<long>(rng() % 3);
            s.set_coeff(m, FieldTraits<R>::ratio(num, den));
        }
        out.push_back(std::move(s));
    }
    return out;
}

struct Report {
    ordered_json j;
    std::ostringstream human;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    RunOutcome finish(int exit_code) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        human << "elapsed: " << ms << " ms\n";
        return RunOutcome{exit_code, human.str(), j.dump(2) + "\n"};
    }
};

void add_header(Report& rep, const SpecFile& spec, const CommandOptions& opts, int order) {
    rep.j["schema_version"] = "1";
    rep.j["command"] = command_name(opts.command);
    ordered_json s;
    s["path"] = spec.path;
    s["name"] = spec.name;
    s["kind"] = spec.kind_name();
    s["field"] = spec.field_name();
    s["n"] = spec.n;
    s["k"] = spec.k;
    s["order"] = order;
    rep.j["spec"] = s;
    rep.human << "command: " << command_name(opts.command) << "\n";
    rep.human << "spec: " << spec.name << " (" << spec.kind_name() << ", " << spec.field_name()
              << ") n=" << spec.n << " k=" << spec.k << " order=" << order << "\n";
}

void add_warnings(Report& rep, const std::vector<std::string>& warnings) {
    rep.j["warnings"] = warnings;
    for (const auto& w : warnings) rep.human << "warning: " << w << "\n";
}

template <class Witness>
void add_integrability(Report& rep, bool integrable, int checked_order,
                       const std::string& verdict, const Witness* witness,
                       ordered_json witness_json) {
    ordered_json ij;
    ij["integrable"] = integrable;
    ij["checked_order"] = checked_order;
    ij["verdict"] = verdict;
    if (witness) ij["witness"] = std::move(witness_json);
    rep.j["integrability"] = std::move(ij);
    rep.human << "verdict: " << verdict << "\n";
    if (witness) rep.human << "witness: " << witness->str() << "\n";
}

template <class R>
void add_coefficient_table(Report& rep, const std::vector<PowerSeries<R>>& y, int order, int k) {
    ordered_json rows = ordered_json::array();
    std::size_t count = 0;
    std::ostringstream lines;
    for (int d = 0; d <= order; ++d) {
        for (const auto& m : multi_indices_of_total(k, d)) {
            for (std::size_t r = 0; r < y.size(); ++r) {
                R v = y[r].coeff(m);
                if (FieldTraits<R>::is_zero(v, 0.0)) continue;
                ordered_json row;
                row["unknown"] = static_cast<int>(r + 1);
                row["exponents"] = m.entries();
                row["value"] = FieldTraits<R>::str(v);
                rows.push_back(std::move(row));
                lines << "  y" << (r + 1) << " @ " << m.str() << " = " << FieldTraits<R>::str(v)
                      << "\n";
                ++count;
            }
        }
    }
    rep.j["coefficients"] = std::move(rows);
    rep.human << "coefficients (" << count << " nonzero up to degree " << order << "):\n"
              << lines.str();
}

struct CheckList {
    ordered_json rows = ordered_json::array();
    bool all_pass = true;

    void add(Report& rep, const std::string& name, bool pass, const std::string& detail) {
        ordered_json c;
        c["name"] = name;
        c["pass"] = pass;
        c["detail"] = detail;
        rows.push_back(std::move(c));
        all_pass = all_pass && pass;
        rep.human << "  [" << (pass ? "PASS" : "FAIL") << "] " << name << ": " << detail << "\n";
    }

    int finish(Report& rep) {
        rep.j["checks"] = std::move(rows);
        rep.j["overall_pass"] = all_pass;
        rep.human << "overall: " << (all_pass ? "PASS" : "FAIL") << "\n";
        return all_pass ? 0 : 3;
    }
};

// Shared pieces of solve/eval/verify once a solution vector exists.
template <class R>
void apply_injected_error(const SpecFile& spec, std::vector<PowerSeries<R>>& y) {
    if (!spec.injected_error) return;
    const InjectedError& inj = *spec.injected_error;
    auto delta = FieldTraits<R>::parse(inj.delta);
    if (!delta) throw UsageError("inject_solution_error.delta: cannot parse \"" + inj.delta + "\"");
    MultiIndex pos(inj.position);
    auto& series = y[static_cast<std::size_t>(inj.unknown - 1)];
    series.set_coeff(pos, series.coeff(pos) + *delta);
}

template <class R>
double solution_tolerance(double tol_base, double coeff_scale,
                          const std::vector<PowerSeries<R>>& y) {
    if (FieldTraits<R>::exact) return 0.0;
    double scale = coeff_scale;
    for (const auto& s : y) scale = std::max(scale, s.max_abs_coeff());
    return scaled_tolerance(tol_base, scale);
}

ordered_json cross_validation_json(const CrossValidation& cv, int steps) {
    ordered_json c;
    c["permutations"] = cv.permutations;
    c["steps"] = steps;
    c["series_value"] = render_scalars(cv.series_value);
    c["path_value"] = render_scalars(cv.path_value);
    c["max_series_gap"] = FieldTraits<double>::str(cv.max_series_gap);
    c["permutation_spread"] = FieldTraits<double>::str(cv.permutation_spread);
    c["est_error"] = FieldTraits<double>::str(cv.est_error);
    c["ok"] = cv.ok;
    if (!cv.ok) c["diagnostic"] = cv.diagnostic;
    return c;
}

template <class R>
RunOutcome run_linear(const SpecFile& spec, const CommandOptions& opts) {
    Report rep;
    int order = opts.order.value_or(spec.order);
    std::vector<std::string> warnings;
    LinearSystem<R> sys = build_linear_system<R>(spec, order, &warnings);

    bool needs_C = opts.command != Command::check;
    std::vector<R> C;
    if (needs_C) {
        std::vector<std::string> texts;
        if (opts.C) texts = *opts.C;
        else if (spec.C) texts = *spec.C;
        else
            throw UsageError(
                "this command needs initial values: add a \"C\" array to the spec file or pass --C");
        C = parse_scalars<R>(texts, "initial values C", spec.n);
    }
    std::vector<R> x;
    if (opts.command == Command::eval) {
        if (!opts.x) throw UsageError("eval needs a target point: pass --x x1,x2,...");
        x = parse_scalars<R>(*opts.x, "point x", spec.k);
    }

    add_header(rep, spec, opts, order);
    ordered_json options;
    options["order"] = order;
    options["field"] = spec.field_name();
    options["threads"] = opts.threads;
    if (!FieldTraits<R>::exact) options["tol"] = FieldTraits<double>::str(opts.tol_base);
    if (needs_C) options["C"] = render_scalars(C);
    if (opts.command == Command::eval) {
        options["x"] = render_scalars(x);
        if (!FieldTraits<R>::exact) options["steps"] = opts.steps;
    }
    if (opts.command == Command::verify) options["seed"] = opts.seed;
    rep.j["options"] = std::move(options);
    if (needs_C) rep.human << "C: " << join(render_scalars(C), ", ") << "\n";
    add_warnings(rep, warnings);

    IntegrabilityDecision decision = is_integrable(sys, opts.tol_base);
    ordered_json wj;
    if (decision.witness) {
        wj["t"] = decision.witness->t;
        wj["s"] = decision.witness->s;
        wj["u"] = decision.witness->u;
        wj["v"] = decision.witness->v;
        wj["position"] = decision.witness->position;
        wj["value"] = decision.witness->value;
    }
    add_integrability(rep, decision.integrable, decision.checked_order, decision.verdict(),
                      decision.witness ? &*decision.witness : nullptr, std::move(wj));
    if (!decision.integrable) return rep.finish(2);
    if (opts.command == Command::check) return rep.finish(0);

    PropagatorOptions po;
    po.allow_non_integrable = true;  // the gate above already ran
    po.threads = opts.threads;
    po.tol_base = opts.tol_base;
    PropagatorTable<R> table(sys, order, po);
    LinearSolution<R> sol = solve_linear_with_table(sys, table, C, order);

    if (opts.command == Command::solve || opts.command == Command::eval)
        add_coefficient_table(rep, sol.y, order, spec.k);

    if (opts.command == Command::eval) {
        std::vector<R> values = sol.evaluate(x);
        rep.j["point"] = render_scalars(x);
        rep.j["values"] = render_scalars(values);
        rep.human << "point: (" << join(render_scalars(x), ", ") << ")\n";
        rep.human << "values: " << join(render_scalars(values), ", ") << "\n";
        if constexpr (!FieldTraits<R>::exact) {
            CrossValidation cv = cross_validate(sys, C, x, order, opts.steps);
            rep.j["cross_validation"] = cross_validation_json(cv, opts.steps);
            rep.human << "cross-validation: gap=" << FieldTraits<double>::str(cv.max_series_gap)
                      << " spread=" << FieldTraits<double>::str(cv.permutation_spread) << " over "
                      << cv.permutations << " path order(s)\n";
        }
        return rep.finish(0);
    }

    if (opts.command == Command::verify) {
        rep.human << "checks:\n";
        CheckList checks;

        std::vector<PowerSeries<R>> ysub = sol.y;
        apply_injected_error(spec, ysub);
        ResidualReport<R> res = residual_linear(sys, ysub, opts.tol_base);
        checks.add(rep, "residual", res.pass,
                   res.pass ? "every coefficient to degree " +
                                  std::to_string(res.checked_degree) + " is zero"
                            : res.witness->str());

        std::mt19937_64 rng(opts.seed);
        std::vector<PowerSeries<R>> probe = random_polynomials<R>(spec.n, spec.k, 2, order, rng);
        int wmax = std::min(2, order);
        bool id_pass = true;
        std::string id_detail = "derivative expansion matches the transport table for all "
                                "patterns up to total " +
                                std::to_string(wmax) + " on a seeded polynomial probe";
        for (const auto& w : multi_indices_up_to(spec.k, wmax)) {
            if (w.total() == 0) continue;
            IteratedCovariantReport idr = iterated_covariant_check(sys, w, probe, opts.tol_base);
            if (!idr.equal) {
                id_pass = false;
                id_detail = "pattern " + w.str() + ": unknown " + std::to_string(idr.r) +
                            " differs at x^" + tuple_str(idr.position) + " (direct " +
                            idr.lhs_value + ", expansion " + idr.rhs_value + ")";
                break;
            }
        }
        checks.add(rep, "operator-identity", id_pass, id_detail);

        int oracle_order = std::min(order, 6);
        TaylorOracleResult<R> oracle = taylor_oracle_linear(sys, C, oracle_order, opts.tol_base);
        bool oracle_pass = oracle.consistent;
        std::string oracle_detail;
        if (!oracle.consistent) {
            oracle_detail = oracle.witness->str();
        } else {
            double tol = solution_tolerance(opts.tol_base, sys.coeff_scale(), sol.y);
            for (int r = 0; r < spec.n; ++r)
                oracle_pass = oracle_pass &&
                              series_equal_to_order(oracle.y[static_cast<std::size_t>(r)],
                                                    sol.y[static_cast<std::size_t>(r)],
                                                    oracle_order, tol);
            oracle_detail = oracle_pass ? "independent coefficient recursion agrees with the "
                                          "solver to degree " +
                                              std::to_string(oracle_order)
                                        : "independent coefficient recursion disagrees with the "
                                          "solver at or below degree " +
                                              std::to_string(oracle_order);
        }
        checks.add(rep, "oracle-comparison", oracle_pass, oracle_detail);
        return rep.finish(checks.finish(rep));
    }

    return rep.finish(0);
}

template <class R>
RunOutcome run_nonlinear(const SpecFile& spec, const CommandOptions& opts) {
    Report rep;
    int order = opts.order.value_or(spec.order);
    std::vector<std::string> warnings;
    NonlinearSystem<R> sys = build_nonlinear_system<R>(spec, order, &warnings);
    LaurentWindow window = resolve_window(spec, sys, order, opts.window);

    bool needs_C = opts.command != Command::check;
    std::vector<R> C;
    if (needs_C) {
        std::vector<std::string> texts;
        if (opts.C) texts = *opts.C;
        else if (spec.C) texts = *spec.C;
        else
            throw UsageError(
                "this command needs initial values: add a \"C\" array to the spec file or pass --C");
        C = parse_scalars<R>(texts, "initial values C", spec.n);
    }
    std::vector<R> x;
    if (opts.command == Command::eval) {
        if (!opts.x) throw UsageError("eval needs a target point: pass --x x1,x2,...");
        x = parse_scalars<R>(*opts.x, "point x", spec.k);
    }

    add_header(rep, spec, opts, order);
    ordered_json options;
    options["order"] = order;
    options["field"] = spec.field_name();
    options["threads"] = opts.threads;
    if (!FieldTraits<R>::exact) options["tol"] = FieldTraits<double>::str(opts.tol_base);
    {
        ordered_json w;
        w["lo"] = window.lo;
        w["hi"] = window.hi;
        w["closure_depth"] = window.closure_depth;
        options["window"] = std::move(w);
    }
    if (needs_C) options["C"] = render_scalars(C);
    if (opts.command == Command::eval) {
        options["x"] = render_scalars(x);
        if (!FieldTraits<R>::exact) options["steps"] = opts.steps;
    }
    if (opts.command == Command::verify) {
        options["samples"] = opts.samples;
        options["seed"] = opts.seed;
    }
    rep.j["options"] = std::move(options);
    rep.human << "window: lo=" << tuple_str(window.lo) << " hi=" << tuple_str(window.hi)
              << " closure_depth=" << window.closure_depth << "\n";
    if (needs_C) rep.human << "C: " << join(render_scalars(C), ", ") << "\n";
    add_warnings(rep, warnings);

    NonlinearIntegrabilityDecision decision = is_integrable_nonlinear(sys, window, opts.tol_base);
    ordered_json wj;
    if (decision.witness) {
        wj["alpha"] = decision.witness->alpha;
        wj["beta"] = decision.witness->beta;
        wj["u"] = decision.witness->u;
        wj["v"] = decision.witness->v;
        wj["position"] = decision.witness->position;
        wj["value"] = decision.witness->value;
    }
    add_integrability(rep, decision.integrable, decision.checked_order, decision.verdict(),
                      decision.witness ? &*decision.witness : nullptr, std::move(wj));
    if (!decision.integrable) return rep.finish(2);
    if (opts.command == Command::check) return rep.finish(0);

    LiftedPropagatorTable<R> table = lifted_propagators(sys, window, order);
    NonlinearSolution<R> sol = solve_nonlinear_with_table(sys, table, C, order);
    std::vector<PowerSeries<R>> y;
    y.reserve(static_cast<std::size_t>(spec.n));
    for (int r = 0; r < spec.n; ++r) y.push_back(sol.series_with_C(r));

    if (opts.command == Command::solve || opts.command == Command::eval)
        add_coefficient_table(rep, y, order, spec.k);

    if (opts.command == Command::eval) {
        std::vector<R> values = sol.evaluate(x);
        rep.j["point"] = render_scalars(x);
        rep.j["values"] = render_scalars(values);
        rep.human << "point: (" << join(render_scalars(x), ", ") << ")\n";
        rep.human << "values: " << join(render_scalars(values), ", ") << "\n";
        if constexpr (!FieldTraits<R>::exact) {
            CrossValidation cv = cross_validate(sys, window, C, x, order, opts.steps);
            rep.j["cross_validation"] = cross_validation_json(cv, opts.steps);
            rep.human << "cross-validation: gap=" << FieldTraits<double>::str(cv.max_series_gap)
                      << " spread=" << FieldTraits<double>::str(cv.permutation_spread) << " over "
                      << cv.permutations << " path order(s)\n";
        }
        return rep.finish(0);
    }

    if (opts.command == Command::verify) {
        rep.human << "checks:\n";
        CheckList checks;

        std::vector<PowerSeries<R>> ysub = y;
        apply_injected_error(spec, ysub);
        ResidualReport<R> res = residual_nonlinear(sys, ysub, opts.tol_base);
        checks.add(rep, "residual", res.pass,
                   res.pass ? "every coefficient to degree " +
                                  std::to_string(res.checked_degree) + " is zero"
                            : res.witness->str());

        LiftIdentityReport ids =
            check_lift_identities(sys, window, opts.samples, opts.seed, opts.tol_base);
        checks.add(rep, "shift-identities", ids.pass(),
                   ids.pass() ? std::to_string(ids.checked) +
                                    " sampled identity instances hold exactly"
                              : ids.failures.front().identity + " fails at " +
                                    ids.failures.front().indices + ": " +
                                    ids.failures.front().detail);

        int oracle_order = std::min(order, 6);
        TaylorOracleResult<R> oracle =
            taylor_oracle_nonlinear(sys, C, oracle_order, opts.tol_base);
        bool oracle_pass = oracle.consistent;
        std::string oracle_detail;
        if (!oracle.consistent) {
            oracle_detail = oracle.witness->str();
        } else {
            double tol = solution_tolerance(opts.tol_base, sys.coeff_scale(), y);
            for (int r = 0; r < spec.n; ++r)
                oracle_pass = oracle_pass &&
                              series_equal_to_order(oracle.y[static_cast<std::size_t>(r)],
                                                    y[static_cast<std::size_t>(r)], oracle_order,
                                                    tol);
            oracle_detail = oracle_pass ? "independent coefficient recursion agrees with the "
                                          "solver to degree " +
                                              std::to_string(oracle_order)
                                        : "independent coefficient recursion disagrees with the "
                                          "solver at or below degree " +
                                              std::to_string(oracle_order);
        }
        checks.add(rep, "oracle-comparison", oracle_pass, oracle_detail);
        return rep.finish(checks.finish(rep));
    }

    return rep.finish(0);
}

}  // namespace

RunOutcome run_command(const CommandOptions& opts) {
    SpecFile spec = load_spec(opts.spec_path);
    if (opts.field) {
        if (*opts.field == "rational") spec.field = SpecFile::Field::rational;
        else if (*opts.field == "float") spec.field = SpecFile::Field::floating;
        else throw UsageError("--field must be rational or float");
    }
    if (spec.kind == SpecFile::Kind::linear) {
        return spec.field == SpecFile::Field::rational ? run_linear<Rational>(spec, opts)
                                                       : run_linear<double>(spec, opts);
    }
    return spec.field == SpecFile::Field::rational ? run_nonlinear<Rational>(spec, opts)
                                                   : run_nonlinear<double>(spec, opts);
}

}  // namespace pdeseries
