#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "dpd/harness.hpp"

namespace {

bool is_train(dpd::Mode m) {
    return m == dpd::Mode::train_dpd || m == dpd::Mode::train_vanilla;
}
bool is_verify(dpd::Mode m) {
    return m == dpd::Mode::verify_prop1 || m == dpd::Mode::verify_prop2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual policy distillation: training, verification and diagnostics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, mode_str;
    long long seed_override = -1;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "output directory (overrides config and DPD_OUT)");
    app.add_option("--seed", seed_override, "override the first seed in run.seeds");
    app.add_option("--mode", mode_str, "mode when the config does not pin one");

    auto* train = app.add_subcommand("train", "train-dpd or train-vanilla per mode");
    auto* verify = app.add_subcommand("verify", "verify-prop1 or verify-prop2 campaigns");
    auto* gradcheck = app.add_subcommand("grad-check", "finite-difference gradient campaign");
    auto* diagnostics = app.add_subcommand("diagnostics", "checkpoint probe diagnostics");

    CLI11_PARSE(app, argc, argv);

    try {
        dpd::KeyValueConfig kv = config_path.empty() ? dpd::KeyValueConfig{}
                                                     : dpd::KeyValueConfig::from_file(config_path);
        if (!mode_str.empty()) kv.set("mode", mode_str);
        // subcommands that pin the mode outright
        if (gradcheck->parsed()) kv.set("mode", "grad-check");
        if (diagnostics->parsed()) kv.set("mode", "diagnostics");
        if (verify->parsed() && !kv.has("mode")) kv.set("mode", "verify-prop1");
        if (train->parsed() && !kv.has("mode")) kv.set("mode", "train-dpd");

        if (const char* env_out = std::getenv("DPD_OUT"); env_out && *env_out && out_dir.empty())
            out_dir = env_out;
        if (!out_dir.empty()) kv.set("run.out_dir", out_dir);

        dpd::ExperimentConfig cfg = dpd::ExperimentConfig::resolve(kv);
        if (seed_override >= 0 && !cfg.seeds.empty())
            cfg.seeds[0] = static_cast<uint64_t>(seed_override);

        if (train->parsed() && !is_train(cfg.mode))
            throw std::invalid_argument("subcommand 'train' needs a train-* mode, got " +
                                        dpd::mode_name(cfg.mode));
        if (verify->parsed() && !is_verify(cfg.mode))
            throw std::invalid_argument("subcommand 'verify' needs a verify-* mode, got " +
                                        dpd::mode_name(cfg.mode));

        return dpd::run_mode(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
