#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdeseries/errors.hpp"
#include "pdeseries/nonlinear.hpp"
#include "pdeseries/runner.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = text.find(',', pos);
        out.push_back(text.substr(pos, comma == std::string::npos ? comma : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Decides integrability of analytic first-order PDE systems and builds their unique "
        "local series solutions, with built-in verification."};
    app.require_subcommand(1);

    pdeseries::CommandOptions opts;
    int order = -1;
    std::string field, C_text, x_text, output = "human";

    CLI::App* c_check =
        app.add_subcommand("check", "decide integrability; prints a witness when it fails");
    CLI::App* c_solve =
        app.add_subcommand("solve", "construct the truncated series solution for initial values C");
    CLI::App* c_eval = app.add_subcommand("eval", "evaluate the solution at a point x");
    CLI::App* c_verify =
        app.add_subcommand("verify", "run residual, identity and oracle checks on the solution");

    for (CLI::App* sub : {c_check, c_solve, c_eval, c_verify}) {
        sub->add_option("spec", opts.spec_path, "system description file (JSON)")->required();
        sub->add_option("--order", order, "truncation order override (>= 1)")
            ->check(CLI::Range(1, 10000));
        sub->add_option("--field", field, "coefficient field override")
            ->check(CLI::IsMember({"rational", "float"}));
        sub->add_option("--tol", opts.tol_base, "float-mode tolerance base (scaled internally)");
        sub->add_option("--C", C_text, "initial values, comma-separated (e.g. 1/2,3)");
        sub->add_option("--window", opts.window,
                        "Laurent window override: auto or lo..hi per unknown, comma-separated");
        sub->add_option("--threads", opts.threads, "worker threads for the transport tables")
            ->check(CLI::Range(1, 256));
        sub->add_option("--output", output, "report style on stdout")
            ->check(CLI::IsMember({"human", "json"}));
    }
    c_eval->add_option("--x", x_text, "evaluation point, comma-separated (e.g. 1/5,3/10)");
    c_eval->add_option("--steps", opts.steps, "integrator steps per axis segment (float mode)")
        ->check(CLI::Range(1, 10000000));
    c_verify->add_option("--samples", opts.samples, "identity sample count")
        ->check(CLI::Range(1, 1000000));
    c_verify->add_option("--seed", opts.seed, "sampling seed");

    try {
        app.parse(argc, argv);

        if (c_check->parsed()) opts.command = pdeseries::Command::check;
        else if (c_solve->parsed()) opts.command = pdeseries::Command::solve;
        else if (c_eval->parsed()) opts.command = pdeseries::Command::eval;
        else opts.command = pdeseries::Command::verify;
        if (order >= 0) opts.order = order;
        if (!field.empty()) opts.field = field;
        if (!C_text.empty()) opts.C = split_commas(C_text);
        if (!x_text.empty()) opts.x = split_commas(x_text);

        pdeseries::RunOutcome outcome = pdeseries::run_command(opts);
        std::cout << (output == "json" ? outcome.machine : outcome.human);
        return outcome.exit_code;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help/message; 0 for --help
        return code == 0 ? 0 : 1;
    } catch (const pdeseries::WindowEscapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const pdeseries::NotIntegrableError& e) {
        std::cerr << "error: " << e.what() << "\nwitness: " << e.witness_text << "\n";
        return 2;
    } catch (const pdeseries::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const pdeseries::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
