#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "faa/errors.hpp"
#include "faa/harness.hpp"

namespace {

using nlohmann::json;

/// numeric-or-keyword flags ("dynamic", "beta-star") stay strings until the
/// harness parses them; plain numbers are converted here so the config file
/// type checks still apply
json number_or_keyword(const std::string& value, const std::string& keyword,
                       const std::string& flag) {
    if (value == keyword) return json(value);
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return json(v);
    } catch (const std::exception&) {
        throw faa::ConfigError(flag + ": expected a number or \"" + keyword + "\", got \"" +
                               value + "\"");
    }
}

struct CommonFlags {
    std::string problem, strategy, cs, beta, order, depth_schedule, out, config, label;
    double kappa = 0.0, tol = 0.0;
    std::size_t m = 0, max_iters = 0, jobs = 0;
    bool no_plots = false;

    CLI::Option *o_problem = nullptr, *o_strategy = nullptr, *o_cs = nullptr, *o_beta = nullptr,
                *o_order = nullptr, *o_depth = nullptr, *o_out = nullptr, *o_config = nullptr,
                *o_label = nullptr, *o_kappa = nullptr, *o_tol = nullptr, *o_m = nullptr,
                *o_max_iters = nullptr, *o_jobs = nullptr, *o_no_plots = nullptr;

    void attach(CLI::App* cmd, bool with_jobs) {
        o_problem = cmd->add_option("--problem", problem, "problem name: linear_toy, nlh, quasilinear, plap");
        o_strategy = cmd->add_option("--strategy", strategy, "faa, tsvd, aa, or none");
        o_m = cmd->add_option("--m", m, "history depth cap");
        o_cs = cmd->add_option("--cs", cs, "direction-sine threshold, a number or \"dynamic\"");
        o_kappa = cmd->add_option("--kappa", kappa, "condition cap");
        o_beta = cmd->add_option("--beta", beta, "damping factor, a number or \"beta-star\"");
        o_order = cmd->add_option("--order", order, "filter order: length-first or angle-first");
        o_depth = cmd->add_option("--depth-schedule", depth_schedule,
                                  "constant or multilevel:tau,m1,m2");
        o_tol = cmd->add_option("--tol", tol, "convergence tolerance on ||g(x)-x||");
        o_max_iters = cmd->add_option("--max-iters", max_iters, "iteration cap");
        o_out = cmd->add_option("--out", out, "output directory");
        o_config = cmd->add_option("--config", config, "JSON config file (flags override it)");
        o_label = cmd->add_option("--label", label, "run label");
        o_no_plots = cmd->add_flag("--no-plots", no_plots, "skip SVG plot emission");
        if (with_jobs) o_jobs = cmd->add_option("--jobs", jobs, "concurrent runs");
    }

    /// config fragment holding exactly the flags the user passed
    json to_overrides() const {
        json j = json::object();
        json solver = json::object();
        if (o_problem->count()) j["problem"]["name"] = problem;
        if (o_strategy->count()) solver["strategy"] = strategy;
        if (o_m->count()) solver["m"] = m;
        if (o_cs->count()) solver["cs"] = number_or_keyword(cs, "dynamic", "--cs");
        if (o_kappa->count()) solver["kappa"] = kappa;
        if (o_beta->count()) solver["beta"] = number_or_keyword(beta, "beta-star", "--beta");
        if (o_order->count()) solver["order"] = order;
        if (o_depth->count()) solver["depth_schedule"] = depth_schedule;
        if (o_tol->count()) solver["tol"] = tol;
        if (o_max_iters->count()) solver["max_iters"] = max_iters;
        if (!solver.empty()) j["solver"] = solver;
        if (o_out->count()) j["out"] = out;
        if (o_label->count()) j["label"] = label;
        if (o_no_plots->count()) j["plots"] = false;
        if (o_jobs && o_jobs->count()) j["jobs"] = jobs;
        return j;
    }

    json resolved_config() const {
        json cfg = json::object();
        if (o_config->count()) cfg = faa::harness::load_config_file(config);
        faa::harness::deep_merge(cfg, to_overrides());
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixed-point acceleration toolkit"};
    app.require_subcommand(1);

    CLI::App* cmd_run = app.add_subcommand("run", "execute one solve and write its artifacts");
    CLI::App* cmd_compare =
        app.add_subcommand("compare", "run several strategies on one problem, combined report");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a parameter grid, one directory per run");

    CommonFlags run_flags, compare_flags, sweep_flags;
    run_flags.attach(cmd_run, false);
    compare_flags.attach(cmd_compare, false);
    sweep_flags.attach(cmd_sweep, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) return faa::harness::run_command(run_flags.resolved_config());
        if (cmd_compare->parsed())
            return faa::harness::compare_command(compare_flags.resolved_config());
        if (cmd_sweep->parsed()) return faa::harness::sweep_command(sweep_flags.resolved_config());
    } catch (const faa::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const faa::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
    return 1;
}
