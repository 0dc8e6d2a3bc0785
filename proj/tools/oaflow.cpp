#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oaflow/commands.hpp"

int main(int argc, char** argv) {
    using namespace oaflow;
    CLI::App app{"Normalized Gauss-curvature flow for origin-symmetric planar convex bodies with an Orlicz weight"};
    app.require_subcommand(1);

    std::string config_path;
    auto* check = app.add_subcommand("check", "classify phi and test the existence hypothesis");
    check->add_option("--config", config_path, "run configuration file")->required();

    std::string resume, output_dir;
    bool skip_check = false;
    auto* run = app.add_subcommand("run", "evolve the flow and write diagnostics, shape and summary");
    run->add_option("--config", config_path, "run configuration file")->required();
    run->add_option("--resume", resume, "snapshot to continue from");
    run->add_option("--output-dir", output_dir, "overrides output.dir");
    run->add_flag("--skip-hypothesis-check", skip_check, "run even when the existence hypothesis fails");

    std::string shape;
    std::optional<double> gamma;
    auto* resid = app.add_subcommand("residual", "stationary-equation residual of a shape CSV");
    resid->add_option("--shape", shape, "shape CSV (theta,h,rho,kappa,gamma)")->required();
    resid->add_option("--config", config_path, "run configuration file (phi and f)")->required();
    resid->add_option("--gamma", gamma, "constant gamma (default: J-weighted mean of the pointwise values)");

    auto* uniq = app.add_subcommand("uniqueness", "compare rescaled solutions from two initial bodies");
    uniq->add_option("--config", config_path, "run configuration file with init and init2")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::usage_or_io;
    }

    try {
        auto cfg = io::parse_config(config_path);
        if (*check) return cli::cmd_check(cfg, std::cout);
        if (*run) {
            if (skip_check) cfg.flow.skip_hypothesis_check = true;
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            return cli::cmd_run(cfg, std::cout, resume.empty() ? std::nullopt : std::optional(std::filesystem::path(resume)));
        }
        if (*resid) return cli::cmd_residual(cfg, shape, gamma, std::cout);
        if (*uniq) return cli::cmd_uniqueness(cfg, std::cout);
    } catch (const IndeterminateClass& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::classification_fail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::usage_or_io;
    }
    return cli::usage_or_io;
}
