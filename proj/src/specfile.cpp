#include "pdeseries/specfile.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace pdeseries {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw UsageError(origin + ": " + msg);
}

void require_keys(const std::string& origin, const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) fail(origin, where + ": unknown key \"" + key + "\"");
}

const json& require(const std::string& origin, const json& j, const std::string& where,
                    const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(origin, where + ": missing required key \"" + key + "\"");
    return *it;
}

int require_int(const std::string& origin, const json& j, const std::string& where,
                const char* key) {
    const json& v = require(origin, j, where, key);
    if (!v.is_number_integer()) fail(origin, where + ": \"" + std::string(key) +
                                                 "\" must be an integer");
    return v.get<int>();
}

std::string require_string(const std::string& origin, const json& j, const std::string& where,
                           const char* key) {
    const json& v = require(origin, j, where, key);
    if (!v.is_string()) fail(origin, where + ": \"" + std::string(key) + "\" must be a string");
    return v.get<std::string>();
}

// Exact scalars may be written as expression strings or as JSON integers;
// JSON floats are rejected because they do not carry an exact value.
std::string scalar_text(const std::string& origin, const json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    fail(origin, where + ": write exact values as strings (e.g. \"1/2\"), not JSON numbers");
}

std::vector<int> int_array(const std::string& origin, const json& v, const std::string& where,
                           int expected_len) {
    if (!v.is_array()) fail(origin, where + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) fail(origin, where + ": expected an array of integers");
        out.push_back(e.get<int>());
    }
    if (expected_len >= 0 && static_cast<int>(out.size()) != expected_len)
        fail(origin, where + ": expected " + std::to_string(expected_len) + " entries, got " +
                         std::to_string(out.size()));
    return out;
}

}  // namespace

SpecFile parse_spec_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann's message already names the line and column.
        throw ParseError(origin + ": " + e.what(), e.byte);
    }
    if (!j.is_object()) fail(origin, "top level must be a JSON object");
    require_keys(origin, j, "top level",
                 {"name", "kind", "n", "k", "order", "field", "window", "equations", "C",
                  "inject_solution_error"});

    SpecFile spec;
    spec.path = origin;
    if (j.contains("name")) spec.name = require_string(origin, j, "top level", "name");

    std::string kind = require_string(origin, j, "top level", "kind");
    if (kind == "linear") spec.kind = SpecFile::Kind::linear;
    else if (kind == "nonlinear") spec.kind = SpecFile::Kind::nonlinear;
    else fail(origin, "\"kind\" must be \"linear\" or \"nonlinear\"");

    spec.n = require_int(origin, j, "top level", "n");
    spec.k = require_int(origin, j, "top level", "k");
    spec.order = require_int(origin, j, "top level", "order");
    if (spec.n < 1) fail(origin, "\"n\" must be >= 1");
    if (spec.k < 1) fail(origin, "\"k\" must be >= 1");
    if (spec.order < 1) fail(origin, "\"order\" must be >= 1");

    if (j.contains("field")) {
        std::string field = require_string(origin, j, "top level", "field");
        if (field == "rational") spec.field = SpecFile::Field::rational;
        else if (field == "float") spec.field = SpecFile::Field::floating;
        else fail(origin, "\"field\" must be \"rational\" or \"float\"");
    }

    if (j.contains("window")) {
        if (spec.kind != SpecFile::Kind::nonlinear)
            fail(origin, "\"window\" only applies to nonlinear systems");
        const json& w = j["window"];
        if (w.is_string()) {
            if (w.get<std::string>() != "auto")
                fail(origin, "\"window\" must be \"auto\" or an object with \"lo\" and \"hi\"");
            spec.window_auto = true;
        } else if (w.is_object()) {
            require_keys(origin, w, "window", {"lo", "hi", "closure_depth"});
            LaurentWindow win;
            win.lo = int_array(origin, require(origin, w, "window", "lo"), "window.lo", spec.n);
            win.hi = int_array(origin, require(origin, w, "window", "hi"), "window.hi", spec.n);
            if (w.contains("closure_depth")) {
                win.closure_depth = require_int(origin, w, "window", "closure_depth");
                if (win.closure_depth < 0) fail(origin, "window.closure_depth must be >= 0");
            }
            spec.window_auto = false;
            spec.window = win;
        } else {
            fail(origin, "\"window\" must be \"auto\" or an object with \"lo\" and \"hi\"");
        }
    }

    const json& eqs = require(origin, j, "top level", "equations");
    if (!eqs.is_array()) fail(origin, "\"equations\" must be an array");
    std::set<std::tuple<int, int, int>> seen_linear;
    std::set<std::tuple<int, std::vector<int>, int>> seen_nonlinear;
    int idx = 0;
    for (const auto& e : eqs) {
        std::string where = "equations[" + std::to_string(idx++) + "]";
        if (!e.is_object()) fail(origin, where + ": expected an object");
        int r = require_int(origin, e, where, "r");
        int u = require_int(origin, e, where, "u");
        std::string coeff =
            scalar_text(origin, require(origin, e, where, "coeff"), where + ".coeff");
        if (r < 1 || r > spec.n)
            fail(origin, where + ": \"r\" out of range (n = " + std::to_string(spec.n) + ")");
        if (u < 1 || u > spec.k)
            fail(origin, where + ": \"u\" out of range (k = " + std::to_string(spec.k) + ")");
        if (spec.kind == SpecFile::Kind::linear) {
            require_keys(origin, e, where, {"r", "s", "u", "coeff"});
            int s = require_int(origin, e, where, "s");
            if (s < 1 || s > spec.n)
                fail(origin, where + ": \"s\" out of range (n = " + std::to_string(spec.n) + ")");
            if (!seen_linear.insert({r, s, u}).second)
                fail(origin, where + ": duplicate coefficient for (r=" + std::to_string(r) +
                                 ", s=" + std::to_string(s) + ", u=" + std::to_string(u) + ")");
            spec.linear_entries.push_back(LinearEntry{r, s, u, coeff});
        } else {
            require_keys(origin, e, where, {"r", "alpha", "u", "coeff"});
            std::vector<int> alpha = int_array(origin, require(origin, e, where, "alpha"),
                                               where + ".alpha", spec.n);
            if (!seen_nonlinear.insert({r, alpha, u}).second)
                fail(origin, where + ": duplicate coefficient for (r=" + std::to_string(r) +
                                 ", alpha, u=" + std::to_string(u) + ")");
            spec.nonlinear_entries.push_back(NonlinearEntry{r, alpha, u, coeff});
        }
    }

    if (j.contains("C")) {
        const json& c = j["C"];
        if (!c.is_array() || static_cast<int>(c.size()) != spec.n)
            fail(origin, "\"C\" must be an array with one entry per unknown");
        std::vector<std::string> values;
        int ci = 0;
        for (const auto& v : c)
            values.push_back(scalar_text(origin, v, "C[" + std::to_string(ci++) + "]"));
        spec.C = values;
    }

    if (j.contains("inject_solution_error")) {
        const json& f = j["inject_solution_error"];
        if (!f.is_object()) fail(origin, "\"inject_solution_error\" must be an object");
        require_keys(origin, f, "inject_solution_error", {"unknown", "position", "delta"});
        InjectedError inj;
        inj.unknown = require_int(origin, f, "inject_solution_error", "unknown");
        if (inj.unknown < 1 || inj.unknown > spec.n)
            fail(origin, "inject_solution_error.unknown out of range");
        inj.position = int_array(origin, require(origin, f, "inject_solution_error", "position"),
                                 "inject_solution_error.position", spec.k);
        for (int p : inj.position)
            if (p < 0) fail(origin, "inject_solution_error.position entries must be >= 0");
        inj.delta = scalar_text(origin, require(origin, f, "inject_solution_error", "delta"),
                                "inject_solution_error.delta");
        spec.injected_error = inj;
    }
    return spec;
}

SpecFile load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    SpecFile spec = parse_spec_text(buf.str(), path);
    spec.path = path;
    return spec;
}

LaurentWindow parse_window_ranges(const std::string& text, int n) {
    LaurentWindow w;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string piece = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        std::size_t dots = piece.find("..");
        if (dots == std::string::npos)
            throw UsageError("window component \"" + piece + "\" must look like lo..hi");
        try {
            std::size_t used = 0;
            int lo = std::stoi(piece.substr(0, dots), &used);
            if (used != dots) throw std::invalid_argument("");
            std::string hi_text = piece.substr(dots + 2);
            int hi = std::stoi(hi_text, &used);
            if (used != hi_text.size()) throw std::invalid_argument("");
            w.lo.push_back(lo);
            w.hi.push_back(hi);
        } catch (const std::logic_error&) {
            throw UsageError("window component \"" + piece + "\" must look like lo..hi");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (static_cast<int>(w.lo.size()) != n)
        throw UsageError("window needs one lo..hi range per unknown (" + std::to_string(n) +
                         " expected, " + std::to_string(w.lo.size()) + " given)");
    return w;
}

}  // namespace pdeseries
