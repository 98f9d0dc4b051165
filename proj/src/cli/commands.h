#pragma once

#include <spdlog/logger.h>

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace fmmbeat::cli {

/// Bad or unreadable input; maps to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitOptions {
    std::string signal;
    std::string annotations;
    double fs = 0.0;
    std::string config;
    std::string out_dir = ".";
    std::string record_id;
    unsigned jobs = 1;
    bool detrend = true;
};

struct SimulateOptions {
    std::string preset;
    std::string params;
    std::size_t beats = 10;
    std::size_t beat_samples = 250;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    double fs = 250.0;
    std::string out_dir = ".";
};

struct EvaluateOptions {
    std::string predicted;
    std::string reference;
    double fs = 0.0;
    double tol_ms = 75.0;
    std::string out_dir;
};

int run_fit(const FitOptions& opt, std::ostream& out, spdlog::logger& log);
int run_simulate(const SimulateOptions& opt, std::ostream& out, spdlog::logger& log);
int run_evaluate(const EvaluateOptions& opt, std::ostream& out, spdlog::logger& log);

/// Opens `dir/name` for writing, creating `dir` if needed.
std::ofstream open_output(const std::string& dir, const std::string& name);

}  // namespace fmmbeat::cli
