#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pdeseries {

// Command layer shared by the CLI binary and the tests: a fully-specified
// request goes in, a report (human text + machine JSON) and an exit code come
// out.  Exit codes: 0 success / integrable, 2 integrability violation,
// 3 verification failure, 1 usage or parse problems (raised as exceptions
// for the caller to map).

enum class Command { check, solve, eval, verify };

struct CommandOptions {
    Command command = Command::check;
    std::string spec_path;
    std::optional<int> order;                      // overrides the file's order
    std::optional<std::string> field;              // "rational" | "float"
    double tol_base = 1e-10;                       // float-mode comparison base
    std::optional<std::vector<std::string>> C;     // overrides the file's initial values
    std::optional<std::vector<std::string>> x;     // evaluation point (eval only)
    std::string window;                            // "", "auto" or "lo..hi,lo..hi,..."
    int samples = 100;                             // verify: identity sample count
    unsigned long long seed = 1;                   // verify: deterministic sampling seed
    int steps = 1000;                              // float eval: integrator steps per segment
    int threads = 1;
};

struct RunOutcome {
    int exit_code = 0;
    std::string human;    // multi-line human-readable report (includes timing)
    std::string machine;  // deterministic JSON report (no timing, byte-stable)
};

RunOutcome run_command(const CommandOptions& opts);

}  // namespace pdeseries
