#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdeseries/linear.hpp"
#include "pdeseries/nonlinear.hpp"
#include "pdeseries/parse.hpp"

namespace pdeseries {

// On-disk description of a system: a single JSON document.  Numeric scalars
// that must stay exact (coefficients, initial values, perturbations) are
// carried as strings in the expression grammar and parsed against the active
// field only when a system is built.
//
//   {
//     "name": "riccati",
//     "kind": "nonlinear",                 // "linear" | "nonlinear"
//     "n": 1, "k": 1, "order": 12,
//     "field": "rational",                 // "rational" | "float" (default rational)
//     "window": "auto",                    // nonlinear only; or {"lo": [..], "hi": [..],
//                                          //   "closure_depth": d}
//     "equations": [
//       {"r": 1, "alpha": [2], "u": 1, "coeff": "1"}   // nonlinear rows
//       // {"r": 1, "s": 1, "u": 1, "coeff": "x2"}     // linear rows
//     ],
//     "C": ["1/2"],                        // optional initial values (strings or integers)
//     "inject_solution_error":             // optional test fixture: perturb one solution
//       {"unknown": 1, "position": [3], "delta": "1/7"}   // coefficient before verification
//   }
//
// Indices r, s, u are 1-based in the file and in every report.

struct LinearEntry {
    int r = 0, s = 0, u = 0;  // 1-based
    std::string coeff;
};

struct NonlinearEntry {
    int r = 0;  // 1-based
    std::vector<int> alpha;
    int u = 0;  // 1-based
    std::string coeff;
};

struct InjectedError {
    int unknown = 0;  // 1-based
    std::vector<int> position;
    std::string delta;
};

struct SpecFile {
    enum class Kind { linear, nonlinear };
    enum class Field { rational, floating };

    std::string path;  // as given to load_spec
    std::string name;
    Kind kind = Kind::linear;
    Field field = Field::rational;
    int n = 0, k = 0, order = 0;
    bool window_auto = true;                // nonlinear: derive the window from the support
    std::optional<LaurentWindow> window;    // engaged when the file pins one
    std::vector<LinearEntry> linear_entries;
    std::vector<NonlinearEntry> nonlinear_entries;
    std::optional<std::vector<std::string>> C;
    std::optional<InjectedError> injected_error;

    const char* kind_name() const { return kind == Kind::linear ? "linear" : "nonlinear"; }
    const char* field_name() const { return field == Field::rational ? "rational" : "float"; }
};

// Parses and validates a spec document.  `origin` labels error messages
// (usually the file path).  Syntax problems raise ParseError with the line
// and column in the message; schema problems raise UsageError.
SpecFile parse_spec_text(const std::string& text, const std::string& origin);

SpecFile load_spec(const std::string& path);

// Parses the command-line window override: comma-separated "lo..hi" ranges,
// one per unknown.  closure_depth is left at 0 (derive from use).
LaurentWindow parse_window_ranges(const std::string& text, int n);

// Builds the runtime system at the requested order (which may differ from
// the order recorded in the file; coefficients are re-parsed exactly).  Any
// coefficient whose polynomial degree exceeds `order` is truncated and
// reported through `warnings`.
template <class R>
LinearSystem<R> build_linear_system(const SpecFile& spec, int order,
                                    std::vector<std::string>* warnings = nullptr) {
    if (spec.kind != SpecFile::Kind::linear)
        throw UsageError("spec '" + spec.name + "' is not a linear system");
    LinearSystem<R> sys(spec.n, spec.k, order);
    for (std::size_t i = 0; i < spec.linear_entries.size(); ++i) {
        const auto& e = spec.linear_entries[i];
        try {
            ParsedPolynomial<R> p = parse_polynomial<R>(e.coeff, spec.k, order);
            if (p.truncated && warnings)
                warnings->push_back("coefficient (r=" + std::to_string(e.r) + ", s=" +
                                    std::to_string(e.s) + ", u=" + std::to_string(e.u) +
                                    ") truncated to order " + std::to_string(order));
            sys.set_coeff(e.r - 1, e.s - 1, e.u - 1, p.series);
        } catch (const ParseError& err) {
            throw ParseError("equations[" + std::to_string(i) + "] coefficient \"" + e.coeff +
                                 "\": " + err.what(),
                             err.position);
        }
    }
    return sys;
}

template <class R>
NonlinearSystem<R> build_nonlinear_system(const SpecFile& spec, int order,
                                          std::vector<std::string>* warnings = nullptr) {
    if (spec.kind != SpecFile::Kind::nonlinear)
        throw UsageError("spec '" + spec.name + "' is not a nonlinear system");
    NonlinearSystem<R> sys(spec.n, spec.k, order);
    for (std::size_t i = 0; i < spec.nonlinear_entries.size(); ++i) {
        const auto& e = spec.nonlinear_entries[i];
        try {
            ParsedPolynomial<R> p = parse_polynomial<R>(e.coeff, spec.k, order);
            if (p.truncated && warnings) {
                std::string a = "(";
                for (std::size_t j = 0; j < e.alpha.size(); ++j)
                    a += (j ? "," : "") + std::to_string(e.alpha[j]);
                a += ")";
                warnings->push_back("coefficient (r=" + std::to_string(e.r) + ", alpha=" + a +
                                    ", u=" + std::to_string(e.u) + ") truncated to order " +
                                    std::to_string(order));
            }
            sys.set_coeff(e.r - 1, ExponentVector(e.alpha), e.u - 1, p.series);
        } catch (const ParseError& err) {
            throw ParseError("equations[" + std::to_string(i) + "] coefficient \"" + e.coeff +
                                 "\": " + err.what(),
                             err.position);
        }
    }
    return sys;
}

// Resolves the window a nonlinear run should use: an explicit command-line
// override wins, then the file's window, then the automatic polynomial
// window.  `override_text` is empty when no override was given.
template <class R>
LaurentWindow resolve_window(const SpecFile& spec, const NonlinearSystem<R>& sys, int order,
                             const std::string& override_text = "") {
    LaurentWindow w;
    if (!override_text.empty() && override_text != "auto")
        w = parse_window_ranges(override_text, spec.n);
    else if ((override_text == "auto") || spec.window_auto)
        w = auto_window(sys, order);
    else
        w = *spec.window;
    w.validate(spec.n);
    return w;
}

}  // namespace pdeseries
