#include "commands.hpp"
#include "config.hpp"

#include "sds/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

int exit_code_for(const std::string& kind) {
    static const std::map<std::string, int> codes{
        {"InvalidArgument", 2},   {"NonSubextremal", 2},    {"BandMismatch", 2},
        {"OutsideExpandingRegion", 2}, {"SingularMatch", 2}, {"MissingSecondDerivative", 2},
        {"StepSizeUnderflow", 3}, {"IllConditionedFit", 3}, {"NonConvergent", 4},
    };
    const auto it = codes.find(kind);
    return it == codes.end() ? 3 : it->second;
}

// All temporaries are written first; renames only start once every file is on disk.
void write_outputs(const fs::path& dir, const std::map<std::string, std::string>& files) {
    fs::create_directories(dir);
    std::map<fs::path, fs::path> moves;
    try {
        for (const auto& [name, text] : files) {
            const fs::path tmp = dir / ("." + name + ".tmp" + std::to_string(::getpid()));
            std::ofstream out(tmp, std::ios::binary);
            moves[tmp] = dir / name;
            out << text;
            out.close();
            if (!out) throw sds::InvalidArgument("cli", "cannot write " + tmp.string());
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& [tmp, _] : moves) fs::remove(tmp, ec);
        throw;
    }
    for (const auto& [tmp, dst] : moves) fs::rename(tmp, dst);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scattering experiments on the expanding region of Schwarzschild-de Sitter"};
    std::string config_path, out_dir = ".";
    std::optional<long> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the config seed")->check(CLI::NonNegativeNumber);
    app.add_option("--threads", threads, "worker threads for mode evolution")->check(CLI::PositiveNumber);

    using Command = std::function<sdslab::Outputs(const sdslab::RunConfig&)>;
    const std::map<std::string, std::pair<Command, const char*>> commands{
        {"geometry", {sdslab::cmd_geometry, "roots, surface gravity, exponents and invariant residuals"}},
        {"forward", {sdslab::cmd_forward, "forward evolution, energy ledger and asymptotic extraction"}},
        {"backward", {sdslab::cmd_backward, "scattering construction from (psi0, psi3)"}},
        {"roundtrip", {sdslab::cmd_roundtrip, "backward then forward, comparing recovered data"}},
        {"energy-report", {sdslab::cmd_energy_report, "energy monotonicity and Sobolev ratio along a trajectory"}},
        {"residual-scan", {sdslab::cmd_residual_scan, "decay of the residual of the asymptotic solution"}},
        {"perturbed", {sdslab::cmd_perturbed, "conformal pipeline for a perturbed boundary metric"}},
    };
    app.fallthrough();
    for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.second);
    app.require_subcommand(1, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "[cli] InvalidArgument: " << e.what() << "\n";
        return 2;
    }
    const std::string name = app.get_subcommands().front()->get_name();

    try {
        sdslab::RunConfig cfg = sdslab::load_config(config_path);
        if (seed) cfg.seed = static_cast<std::uint64_t>(*seed);
        if (threads) cfg.integrator.threads = *threads;
        const sdslab::Outputs out = commands.at(name).first(cfg);
        write_outputs(out_dir, out.files);
        if (!out.verdict) {
            std::cerr << "[cli] " << name << ": verdict failed\n";
            return 1;
        }
        return 0;
    } catch (const sds::Error& e) {
        std::cerr << "[" << e.module() << "] " << e.kind() << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "[cli] InvalidArgument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "[cli] Error: " << e.what() << "\n";
        return 3;
    }
}
