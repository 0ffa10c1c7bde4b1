#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nlab/common.hpp"

namespace nlab::cli {

// Subcommands: norm, dual-check, transfer, series, conditions, dilation-check,
// ritt, dyadic, shift-model, counterexample, subadditive.
struct ExperimentConfig {
    std::string subcommand;
    std::string weights = "cesaro";
    double p = 2.0;
    double q = 1.0;
    std::vector<index_t> n;        // grid; each entry is one experiment
    index_t M = 0;                 // 0 selects the subcommand default
    index_t N = 0;                 // 0 selects the subcommand default
    std::string contraction = "random:5";
    std::string v = "delta";       // transfer: delta | ones:<len> | random:<len>
    std::string sequence = "linear"; // subadditive: linear | bounded | sqrt | log | square | file:<path>
    double alpha = 0.0;
    std::vector<std::string> conditions;
    std::string schedule = "linear";
    std::uint64_t seed = 1;
    index_t samples = 100;
    index_t restarts = 0;
    index_t levels = 8;
    double loglog_power = 3.0;
    std::string out;
    std::string format = "json";
};

struct RunResult {
    int status = 0;                    // 0 ok, 3 numerical flags
    std::string json;                  // {config, results, flags, timings}
    std::string csv;                   // tabular form of the results
    std::vector<std::string> summary;  // one line per experiment
    std::vector<std::string> flags;
};

// Checks every field before any computation; throws ValidationError.
void validate(const ExperimentConfig& cfg);

// Runs the experiment(s). Grid entries run concurrently and are reported in order.
RunResult run(const ExperimentConfig& cfg);

// Writes `content` to `path` through a temporary file and a rename.
void write_atomically(const std::string& path, const std::string& content);

// Full command line handling; returns the process exit status (0, 2 or 3).
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace nlab::cli
