#include "fmmbeat/cli.h"

#include "commands.h"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <vector>

namespace fmmbeat {

namespace cli {

std::ofstream open_output(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw InputError("cannot create output directory " + dir + ": " + ec.message());
    }
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw InputError("cannot write " + path.string());
    }
    return f;
}

}  // namespace cli

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    sink->set_pattern("[%l] %v");
    spdlog::logger log("fmm-beat", sink);

    CLI::App app{"Heartbeat decomposition into five FMM waves"};
    app.name("fmm-beat");
    app.require_subcommand(1);

    cli::FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit every annotated beat of a record");
    fit_cmd->add_option("signal", fit.signal, "Signal CSV, one voltage per row")->required();
    fit_cmd->add_option("annotations", fit.annotations, "Annotation CSV with sample,label rows")
        ->required();
    fit_cmd->add_option("--fs", fit.fs, "Sampling frequency in Hz")->required()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--config", fit.config, "Identification config file");
    fit_cmd->add_option("--out-dir", fit.out_dir, "Output directory")->capture_default_str();
    fit_cmd->add_option("--record-id", fit.record_id, "Record label in outputs (default: signal file stem)");
    fit_cmd->add_option("--jobs", fit.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    bool no_detrend = false;
    fit_cmd->add_flag("--no-detrend", no_detrend, "Skip per-beat trend removal");

    cli::SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic multi-beat record");
    auto* preset_opt = sim_cmd->add_option("--preset", sim.preset, "NORMAL, PACE, RBBB, APC or PVC");
    auto* params_opt = sim_cmd->add_option("--params", sim.params, "Parameter JSON file");
    preset_opt->excludes(params_opt);
    sim_cmd->add_option("--beats", sim.beats, "Beats to fit (one extra beat is added at each end)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sim_cmd->add_option("--beat-samples", sim.beat_samples, "Samples per beat")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{20}, std::size_t{1} << 20));
    sim_cmd->add_option("--noise-sd", sim.noise_sd, "Gaussian noise standard deviation")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
    sim_cmd->add_option("--fs", sim.fs, "Sampling frequency in Hz")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();

    cli::EvaluateOptions eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predicted marks against reference marks");
    eval_cmd->add_option("predicted", eval.predicted, "Predicted marks CSV")->required();
    eval_cmd->add_option("reference", eval.reference, "Reference annotation CSV")->required();
    eval_cmd->add_option("--fs", eval.fs, "Sampling frequency in Hz")->required()->check(CLI::PositiveNumber);
    eval_cmd->add_option("--tol-ms", eval.tol_ms, "Match tolerance in ms")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--out-dir", eval.out_dir, "Also write report.csv and report.txt here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*fit_cmd) {
            fit.detrend = !no_detrend;
            return cli::run_fit(fit, out, log);
        }
        if (*sim_cmd) {
            if (sim.preset.empty() && sim.params.empty()) {
                err << "simulate: one of --preset or --params is required\n";
                return kExitUsage;
            }
            return cli::run_simulate(sim, out, log);
        }
        return cli::run_evaluate(eval, out, log);
    } catch (const std::exception& e) {
        log.error("{}", e.what());
        return kExitInput;
    }
}

}  // namespace fmmbeat
