#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "faa/accelerator.hpp"

namespace faa::harness {

using json = nlohmann::json;

/// One executed solve, reduced to what the artifacts need.
struct RunOutcome {
    std::string label;
    std::string problem_name;
    std::string strategy_name;
    std::vector<IterationRecord> records;
    SolveStatus status = SolveStatus::MaxIters;
    bool converged = false;
    std::size_t iterations = 0;       ///< = records.size() = CSV row count
    double final_residual = 0.0;
    double max_cond_F = 0.0;
    std::string classification;       ///< iteration count, ">max_iters", or "F"
    double beta_resolved = 1.0;
    std::size_t max_iters = 0;
};

/// "k,residual,theta,cond_F,m_k,cs,beta,kept_mask" rows, %.17g floats,
/// kept_mask as a 0/1 string with the newest column leftmost.
std::string trace_csv(const std::vector<IterationRecord>& records);

/// Iteration count when converged; otherwise ">max_iters" when the last
/// (up to) 10 residuals are all below 1, else "F".
std::string classify(const std::vector<IterationRecord>& records, bool converged,
                     std::size_t max_iters);

json summary_json(const RunOutcome& out);

/// Validates both blocks (unknown keys rejected by name), builds the problem,
/// resolves "beta-star", runs the solver. Throws ConfigError on bad config.
RunOutcome execute_run(const json& problem_block, const json& solver_block,
                       const std::string& label);

/// Subcommand entry points; the returned value is the process exit code
/// (0 converged / report written, 2 max-iters, 3 diverged). ConfigError
/// propagates and maps to exit 1 in the CLI driver.
int run_command(const json& config);
int compare_command(const json& config);
int sweep_command(const json& config);

json load_config_file(const std::string& path);

/// Key-by-key overlay of `overrides` onto `base`; objects merge recursively,
/// everything else replaces.
void deep_merge(json& base, const json& overrides);

int status_exit_code(SolveStatus status);

}  // namespace faa::harness
