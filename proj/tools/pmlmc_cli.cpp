// Command-line driver: kl-build, reference, run, allocate, report.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pmlmc/allocation.hpp"
#include "pmlmc/harness.hpp"

namespace {

struct cli_overrides {
    std::string config_path;
    std::string out;
    std::string samples;
    std::string method;
    std::string transfer;
    std::string reference;
    std::uint64_t seed = 0;
    int levels = 0;
    double eps = -1.0;
    bool has_seed = false, has_levels = false, has_eps = false;
};

void add_common_flags(CLI::App* cmd, cli_overrides& ov) {
    cmd->add_option("--config", ov.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--seed", ov.seed, "master RNG seed")->each([&ov](const std::string&) {
        ov.has_seed = true;
    });
    cmd->add_option("--method", ov.method, "mc | slmc | mlmc | pmlmc");
    cmd->add_option("--levels", ov.levels, "number of grid levels")
        ->each([&ov](const std::string&) { ov.has_levels = true; });
    cmd->add_option("--samples", ov.samples, "per-level sample counts N1[,N2...]");
    cmd->add_option("--eps", ov.eps, "target error; plans counts via the allocator")
        ->each([&ov](const std::string&) { ov.has_eps = true; });
    cmd->add_option("--transfer", ov.transfer, "interp | h1");
    cmd->add_option("--reference", ov.reference, "persisted reference mean field");
    cmd->add_option("--out", ov.out, "output directory");
}

pmlmc::experiment_config load_config(const cli_overrides& ov) {
    pmlmc::experiment_config cfg;
    if (!ov.config_path.empty()) cfg = pmlmc::parse_config_file(ov.config_path);
    if (ov.has_seed) cfg.seed = ov.seed;
    if (!ov.method.empty()) cfg.method = ov.method;
    if (ov.has_levels) cfg.levels = ov.levels;
    if (!ov.samples.empty())
        cfg.samples = pmlmc::detail::parse_count_list(ov.samples, "--samples");
    if (ov.has_eps) cfg.eps = ov.eps;
    if (!ov.transfer.empty()) cfg.transfer = ov.transfer;
    if (!ov.reference.empty()) cfg.reference = ov.reference;
    if (!ov.out.empty()) cfg.out = ov.out;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo, multilevel Monte Carlo and projected multilevel Monte Carlo "
                 "estimation of mean pressure fields for Darcy flow with a lognormal random "
                 "conductivity"};
    app.require_subcommand(1);

    cli_overrides ov;
    std::int64_t n_ref = 1000;
    std::vector<std::string> report_inputs;

    auto* kl_build = app.add_subcommand("kl-build", "build and cache the KL basis");
    add_common_flags(kl_build, ov);

    auto* reference = app.add_subcommand("reference", "build and persist an MC reference mean");
    add_common_flags(reference, ov);
    reference->add_option("--n-ref", n_ref, "number of MC reference samples");

    auto* run = app.add_subcommand("run", "run the configured estimator and write tables");
    add_common_flags(run, ov);

    auto* allocate = app.add_subcommand("allocate", "plan per-level sample counts for a target eps");
    add_common_flags(allocate, ov);

    auto* report = app.add_subcommand("report", "merge result.json files into one long table");
    add_common_flags(report, ov);
    report->add_option("inputs", report_inputs, "result.json files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (kl_build->parsed()) {
            pmlmc::experiment_config cfg = load_config(ov);
            pmlmc::require(!cfg.kl_cache.empty(), "kl-build: set kl_cache in the config");
            pmlmc::save_kl_basis(cfg.kl_cache,
                                 pmlmc::build_kl_basis(pmlmc::field_spec_of(cfg), cfg.kl_dx));
            std::cout << "wrote " << cfg.kl_cache << "\n";
        } else if (reference->parsed()) {
            pmlmc::experiment_config cfg = load_config(ov);
            std::filesystem::create_directories(cfg.out);
            const std::string path =
                cfg.reference.empty()
                    ? (std::filesystem::path(cfg.out) / "reference.csv").string()
                    : cfg.reference;
            pmlmc::build_reference(cfg, n_ref, path);
            std::cout << "wrote " << path << " (" << n_ref << " samples)\n";
        } else if (run->parsed()) {
            pmlmc::experiment_config cfg = load_config(ov);
            const auto out = pmlmc::run_experiment(cfg);
            for (const auto& row : out.rows) {
                std::cout << row.method << " N=" << row.n_total << " ops=" << row.ops;
                if (!std::isnan(row.h1_error)) std::cout << " h1_error=" << row.h1_error;
                std::cout << "\n";
            }
            std::cout << "tables written to " << cfg.out << "\n";
        } else if (allocate->parsed()) {
            pmlmc::experiment_config cfg = load_config(ov);
            pmlmc::require(cfg.eps > 0.0, "allocate: --eps must be positive");
            std::filesystem::create_directories(cfg.out);
            pmlmc::darcy_hierarchy h(pmlmc::build_mesh_ladder(cfg, cfg.levels + 1),
                                     pmlmc::obtain_kl_basis(cfg));
            const pmlmc::error_model m = pmlmc::estimate_error_model(
                h, cfg.seed, cfg.levels, cfg.levels + 1, cfg.pilots, cfg.transfer_mode_enum());
            const pmlmc::allocation_plan plan = pmlmc::pmlmc_allocation(cfg.eps, m);
            nlohmann::json j{{"eps", plan.eps},
                             {"eps_tilde", plan.eps_tilde},
                             {"eta", plan.eta},
                             {"n", plan.n},
                             {"n_real", plan.n_real},
                             {"predicted_cost", plan.predicted_cost},
                             {"norm_u", m.norm_u},
                             {"disc_error", m.disc_error},
                             {"level_cost", m.level_cost}};
            const auto path = std::filesystem::path(cfg.out) / "allocation.json";
            std::ofstream os(path);
            pmlmc::require(bool(os), "cannot write " + path.string());
            os << j.dump(2) << "\n";
            std::cout << j.dump(2) << "\n";
        } else if (report->parsed()) {
            pmlmc::require(!report_inputs.empty(), "report: pass at least one result.json");
            const auto rows = pmlmc::load_report_rows(report_inputs);
            const std::string out_dir = ov.out.empty() ? "." : ov.out;
            std::filesystem::create_directories(out_dir);
            const auto path = std::filesystem::path(out_dir) / "report.csv";
            std::ofstream os(path);
            pmlmc::require(bool(os), "cannot write " + path.string());
            pmlmc::report_tables(rows, os);
            std::cout << "wrote " << path.string() << "\n";
        }
    } catch (const pmlmc::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pmlmc::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
