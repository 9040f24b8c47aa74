// cmalab: run, verify and compare Monge-Ampere continuation experiments.
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "cma/experiment.hpp"

namespace {

cma::ParsedConfig load_config(const std::string& arg, std::optional<int> resolution) {
    std::string text;
    if (std::filesystem::exists(arg)) {
        text = cma::read_text_file(arg);
    } else if (auto b = cma::bundled_scenario_text(arg)) {
        text = *b;
    } else {
        throw cma::InputError("no config file or bundled scenario named '" + arg + "'");
    }
    cma::ParseOptions opt;
    opt.resolution_override = resolution;
    return cma::parse_config(text, opt);
}

std::map<std::string, cma::ColumnTolerance> parse_tolerances(const std::vector<std::string>& specs) {
    auto tol = cma::default_tolerances();
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw cma::ConfigError(0, 0, "--tol expects column=value, got '" + s + "'");
        const double v = std::stod(s.substr(eq + 1));
        tol[s.substr(0, eq)] = {v, 0.0};
    }
    return tol;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degenerate complex Monge-Ampere lab on flat tori"};
    app.require_subcommand(1);
    app.fallthrough();
    bool strict = false;
    std::optional<int> resolution;
    std::optional<std::string> output_dir;
    app.add_flag("--strict", strict, "count inconclusive verdicts as failures");
    app.add_option("--resolution-override", resolution, "grid points per axis");
    app.add_option("--output-dir", output_dir, "parent directory for run output");

    std::string config;
    auto* run_cmd = app.add_subcommand("run", "run continuation and estimates");
    run_cmd->add_option("config", config, "config file or bundled scenario name")->required();
    auto* verify_cmd = app.add_subcommand("verify", "recompute estimates from stored fields");
    verify_cmd->add_option("config", config, "config file or bundled scenario name")->required();

    std::string rec_a, rec_b;
    std::vector<std::string> tol_specs;
    auto* cmp_cmd = app.add_subcommand("compare", "column-wise diff of two run records");
    cmp_cmd->add_option("recordA", rec_a, "run directory or record.csv")->required();
    cmp_cmd->add_option("recordB", rec_b, "run directory or record.csv")->required();
    cmp_cmd->add_option("--tol", tol_specs, "absolute tolerance override, column=value");

    auto* list_cmd = app.add_subcommand("list-scenarios", "list bundled scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cma::kExitConfig;
    }

    try {
        if (list_cmd->parsed()) {
            for (const auto& b : cma::bundled_scenarios()) std::cout << b.name << "\n";
            return cma::kExitOk;
        }
        cma::RunFlags flags;
        flags.strict = strict;
        flags.output_dir = output_dir;
        if (run_cmd->parsed() || verify_cmd->parsed()) {
            const auto cfg = load_config(config, resolution);
            for (const auto& note : cfg.notes) std::cerr << "note: " << note << "\n";
            const auto out = run_cmd->parsed() ? cma::run(cfg, flags) : cma::verify(cfg, flags);
            std::cout << out.verdict_text;
            if (run_cmd->parsed()) std::cout << "output " << out.directory << "\n";
            return out.exit_code;
        }
        if (cmp_cmd->parsed()) {
            const auto a = cma::load_record(rec_a);
            const auto b = cma::load_record(rec_b);
            const auto r = cma::compare(a, b, parse_tolerances(tol_specs));
            if (r.identical) {
                std::cout << "identical\n";
                return cma::kExitOk;
            }
            for (const auto& c : r.columns) {
                char line[256];
                std::snprintf(line, sizeof line, "%-28s max_abs %.3e max_rel %.3e row %d %s\n", c.column.c_str(),
                              c.max_abs, c.max_rel, c.row, c.within ? "ok" : "EXCEEDED");
                std::cout << line;
            }
            return r.exceeded().empty() ? cma::kExitOk : cma::kExitVerdict;
        }
    } catch (const cma::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return cma::kExitConfig;
    } catch (const cma::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return cma::kExitSolver;
    } catch (const cma::ContractError& e) {
        std::cerr << "contract error: " << e.what() << "\n";
        return cma::kExitSolver;
    } catch (const cma::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cma::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cma::kExitSolver;
    }
    return cma::kExitOk;
}
