// lab: configuration-driven front end for the experiment registry.
//   lab list                 catalog with parameter schemas
//   lab run --config f.json  run one experiment (sweeps allowed), write CSV
//   lab region --d 3 --res 32 --output region.csv
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "toruslab/errors.hpp"
#include "toruslab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spectral probes for periodic Schroedinger flows"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "list registered experiments");

    std::string config_path, output_override;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("--config", config_path, "JSON config file")->required();
    run_cmd->add_option("--output", output_override, "override the output path");

    int region_d = 3, region_res = 32;
    std::string region_out = "region.csv";
    auto* region_cmd = app.add_subcommand("region", "emit diagonal classification data");
    region_cmd->add_option("--d", region_d, "dimension");
    region_cmd->add_option("--res", region_res, "grid resolution per axis");
    region_cmd->add_option("--output", region_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            for (const auto& def : toruslab::experiment_catalog()) {
                std::cout << def.name << "\n  " << def.description << "\n  defaults: "
                          << def.defaults.dump() << "\n";
            }
            std::cout << toruslab::experiment_catalog().size() << " experiments\n";
            return 0;
        }
        if (run_cmd->parsed()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot read config: " << config_path << "\n";
                return 2;
            }
            nlohmann::json j = nlohmann::json::parse(in);
            auto cfg = toruslab::parse_run_config(j);
            if (!output_override.empty()) cfg.output = output_override;
            int rc = toruslab::run_experiment(cfg);
            std::cout << (rc == 0 ? "PASS" : "FAIL") << " -> " << cfg.output << "\n";
            return rc;
        }
        if (region_cmd->parsed()) {
            std::ofstream out(region_out, std::ios::binary);
            if (!out) {
                std::cerr << "cannot open output: " << region_out << "\n";
                return 2;
            }
            out << "# toruslab " << toruslab::kVersion << "\n";
            out << toruslab::region_csv(region_d, region_res);
            std::cout << "wrote " << region_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
