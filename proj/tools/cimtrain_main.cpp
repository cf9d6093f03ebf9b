#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cimtrain/config.hpp"
#include "cimtrain/errors.hpp"
#include "cimtrain/runner.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::uint64_t seed = 0;
    int epochs = 0;
    std::string device;
    std::string output_dir;
    double constraint = 0.0;
    std::string sweep_arg;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON run configuration file");
    cmd->add_option("--seed", o.seed, "override the run seed");
    cmd->add_option("--epochs", o.epochs, "override the epoch count");
    cmd->add_option("--device", o.device, "override the device (catalog name)");
    cmd->add_option("--output-dir", o.output_dir, "override the report directory");
    cmd->add_option("--buffer-overhead-constraint", o.constraint,
                    "override the buffer-overhead-constraint ratio (>= 1)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmarking simulator for compute-in-memory on-chip training"};
    app.require_subcommand(1);
    CliOverrides o;

    CLI::App* cmd_run = app.add_subcommand("run", "one benchmark run");
    add_common_options(cmd_run, o);
    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "grid sweep over one device parameter");
    add_common_options(cmd_sweep, o);
    cmd_sweep
        ->add_option("--sweep", o.sweep_arg,
                     "parameter grid, e.g. c2c_sigma=0,0.01,0.03,0.05 "
                     "(also: d2d_sigma, nl)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // bad command line is a configuration error
    }
    CLI::App* active = *cmd_run ? cmd_run : cmd_sweep;

    cimtrain::RunConfig cfg;
    cimtrain::SweepSpec sweep;
    try {
        if (!o.config_path.empty()) cfg = cimtrain::load_config(o.config_path);
        if (active->count("--seed")) cfg.seed = o.seed;
        if (active->count("--epochs")) cfg.epochs = o.epochs;
        if (active->count("--device")) {
            cfg.device_name = o.device;
            cfg.inline_device = false;
        }
        if (active->count("--output-dir")) cfg.output_dir = o.output_dir;
        if (active->count("--buffer-overhead-constraint"))
            cfg.buffer_overhead_constraint = o.constraint;
        cfg.validate();
        if (*cmd_sweep) sweep = cimtrain::parse_sweep(o.sweep_arg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*cmd_run) {
            cimtrain::run_benchmark(cfg, std::cout);
        } else {
            cimtrain::run_sweep(cfg, sweep, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
