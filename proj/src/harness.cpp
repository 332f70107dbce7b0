#include "faa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "faa/errors.hpp"
#include "faa/grid_problems.hpp"
#include "faa/problems.hpp"
#include "faa/svg_plot.hpp"

namespace fs = std::filesystem;

namespace faa::harness {
namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json finite_or_string(double v) {
    if (std::isfinite(v)) return json(v);
    if (std::isnan(v)) return json("nan");
    return json(v > 0 ? "inf" : "-inf");
}

void check_keys(const json& block, std::initializer_list<const char*> allowed,
                const std::string& scope) {
    if (!block.is_object()) throw ConfigError(scope + ": expected a JSON object");
    for (auto it = block.begin(); it != block.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown config key: " + scope + "." + it.key());
    }
}

double get_number(const json& block, const char* key, double dflt, const std::string& scope) {
    if (!block.contains(key)) return dflt;
    const json& v = block.at(key);
    if (!v.is_number()) throw ConfigError(scope + "." + key + ": expected a number");
    return v.get<double>();
}

std::size_t get_size(const json& block, const char* key, std::size_t dflt,
                     const std::string& scope) {
    if (!block.contains(key)) return dflt;
    const json& v = block.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(scope + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

std::string get_string(const json& block, const char* key, const std::string& dflt,
                       const std::string& scope) {
    if (!block.contains(key)) return dflt;
    const json& v = block.at(key);
    if (!v.is_string()) throw ConfigError(scope + "." + key + ": expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& block, const char* key, bool dflt, const std::string& scope) {
    if (!block.contains(key)) return dflt;
    const json& v = block.at(key);
    if (!v.is_boolean()) throw ConfigError(scope + "." + key + ": expected a boolean");
    return v.get<bool>();
}

struct ParsedSolver {
    SolverConfig cfg;
    bool beta_star_requested = false;
    std::string strategy_name = "faa";
};

void parse_depth_schedule(const std::string& s, SolverConfig& cfg) {
    if (s == "constant") {
        cfg.depth_schedule = DepthScheduleKind::Constant;
        return;
    }
    const std::string prefix = "multilevel:";
    if (s.rfind(prefix, 0) == 0) {
        double tau = 0.0;
        unsigned long m1 = 0, m2 = 0;
        char trailing = 0;
        const int got = std::sscanf(s.c_str() + prefix.size(), "%lf,%lu,%lu%c", &tau, &m1, &m2,
                                    &trailing);
        if (got == 3 && tau > 0.0) {
            cfg.depth_schedule = DepthScheduleKind::Multilevel;
            cfg.multilevel_tau = tau;
            cfg.m_early = m1;
            cfg.m_late = m2;
            return;
        }
    }
    throw ConfigError("solver.depth_schedule: expected \"constant\" or \"multilevel:tau,m1,m2\", got \"" +
                      s + "\"");
}

ParsedSolver parse_solver(const json& block) {
    const std::string scope = "solver";
    check_keys(block,
               {"strategy", "m", "beta", "cs", "kappa", "order", "sharpen_cs", "depth_schedule",
                "tol", "max_iters"},
               scope);

    ParsedSolver out;
    SolverConfig& cfg = out.cfg;

    const std::string strat = get_string(block, "strategy", "faa", scope);
    bool force_picard = false;
    if (strat == "faa") {
        cfg.strategy = Strategy::FAA;
    } else if (strat == "tsvd") {
        cfg.strategy = Strategy::TSVD;
    } else if (strat == "aa" || strat == "plain") {
        cfg.strategy = Strategy::PlainAA;
    } else if (strat == "none") {
        cfg.strategy = Strategy::PlainAA;
        force_picard = true;
    } else {
        throw ConfigError("solver.strategy: unknown strategy \"" + strat +
                          "\" (expected faa, tsvd, aa, or none)");
    }
    out.strategy_name = strat;

    cfg.m = get_size(block, "m", cfg.m, scope);
    if (force_picard) cfg.m = 0;

    if (block.contains("beta")) {
        const json& b = block.at("beta");
        if (b.is_string()) {
            if (b.get<std::string>() != "beta-star")
                throw ConfigError("solver.beta: expected a number or \"beta-star\"");
            out.beta_star_requested = true;
        } else if (b.is_number()) {
            cfg.beta = b.get<double>();
        } else {
            throw ConfigError("solver.beta: expected a number or \"beta-star\"");
        }
    }
    if (!out.beta_star_requested && (!(cfg.beta > 0.0) || cfg.beta > 1.0))
        throw ConfigError("solver.beta: must be in (0, 1]");

    double cs_value = 0.4;
    if (block.contains("cs")) {
        const json& c = block.at("cs");
        if (c.is_string()) {
            if (c.get<std::string>() != "dynamic")
                throw ConfigError("solver.cs: expected a number or \"dynamic\"");
            cfg.cs_schedule = CsSchedule::Dynamic;
        } else if (c.is_number()) {
            cs_value = c.get<double>();
            if (!(cs_value > 0.0) || cs_value > 1.0)
                throw ConfigError("solver.cs: must be in (0, 1]");
        } else {
            throw ConfigError("solver.cs: expected a number or \"dynamic\"");
        }
    }

    const double kappa = get_number(block, "kappa", 1e8, scope);
    if (!(kappa > 1.0)) throw ConfigError("solver.kappa: must exceed 1");
    cfg.tsvd_kappa = kappa;

    FilterOrder order = FilterOrder::LengthThenAngle;
    const std::string order_s = get_string(block, "order", "length-first", scope);
    if (order_s == "length-first") {
        order = FilterOrder::LengthThenAngle;
    } else if (order_s == "angle-first") {
        order = FilterOrder::AngleThenLength;
    } else {
        throw ConfigError("solver.order: expected \"length-first\" or \"angle-first\"");
    }
    const bool sharpen = get_bool(block, "sharpen_cs", false, scope);
    cfg.filter = FilterParams(cs_value, kappa, order, sharpen);

    parse_depth_schedule(get_string(block, "depth_schedule", "constant", scope), cfg);

    cfg.tol = get_number(block, "tol", cfg.tol, scope);
    if (!(cfg.tol > 0.0)) throw ConfigError("solver.tol: must be positive");
    cfg.max_iters = get_size(block, "max_iters", cfg.max_iters, scope);
    if (cfg.max_iters == 0) throw ConfigError("solver.max_iters: must be at least 1");
    return out;
}

template <typename T>
void run_into(const FixedPointProblem<T>& problem, ParsedSolver& ps, RunOutcome& out) {
    if (ps.beta_star_requested) {
        if (!problem.beta_star)
            throw ConfigError("solver.beta: \"beta-star\" requested but problem \"" +
                              out.problem_name + "\" defines no beta*");
        ps.cfg.beta = *problem.beta_star;
    }
    RunTrace<T> trace = faa::solve<T>(problem.map, ps.cfg, problem.initial_guess);
    out.records = std::move(trace.records);
    out.status = trace.status;
    out.converged = trace.converged;
    out.iterations = out.records.size();
    out.final_residual = out.records.empty() ? 0.0 : out.records.back().residual_norm;
    out.max_cond_F = 0.0;
    for (const IterationRecord& r : out.records) out.max_cond_F = std::max(out.max_cond_F, r.cond_F);
    out.beta_resolved = ps.cfg.beta;
    out.max_iters = ps.cfg.max_iters;
    out.classification = classify(out.records, out.converged, ps.cfg.max_iters);
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIters: return "max-iters";
        case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    f << content;
}

void write_run_artifacts(const fs::path& dir, const RunOutcome& out, bool plots) {
    fs::create_directories(dir);
    write_text(dir / "trace.csv", trace_csv(out.records));
    write_text(dir / "summary.json", summary_json(out).dump(2) + "\n");
    if (!plots) return;

    plot::Series resid{out.label, {}, {}};
    plot::Series cond{out.label, {}, {}};
    std::vector<std::size_t> ks;
    std::vector<std::vector<bool>> masks;
    for (const IterationRecord& r : out.records) {
        resid.xs.push_back(static_cast<double>(r.k));
        resid.ys.push_back(r.residual_norm);
        cond.xs.push_back(static_cast<double>(r.k));
        cond.ys.push_back(r.cond_F > 0.0 ? r.cond_F : std::numeric_limits<double>::quiet_NaN());
        ks.push_back(r.k);
        std::vector<bool> mask(r.kept_mask.size());
        for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = r.kept_mask[j];
        masks.push_back(std::move(mask));
    }
    write_text(dir / "residual.svg", plot::line_plot("residual history", "||g(x_k) - x_k||",
                                                     {resid}, true));
    write_text(dir / "condition.svg",
               plot::line_plot("condition telemetry", "cond_F", {cond}, true));
    write_text(dir / "columns.svg", plot::kept_columns_raster("columns kept", ks, masks));
}

}  // namespace

std::string trace_csv(const std::vector<IterationRecord>& records) {
    std::string s = "k,residual,theta,cond_F,m_k,cs,beta,kept_mask\n";
    for (const IterationRecord& r : records) {
        s += std::to_string(r.k);
        s += ',';
        s += fmt17(r.residual_norm);
        s += ',';
        s += fmt17(r.theta);
        s += ',';
        s += fmt17(r.cond_F);
        s += ',';
        s += std::to_string(r.m_k);
        s += ',';
        s += fmt17(r.cs_used);
        s += ',';
        s += fmt17(r.beta_used);
        s += ',';
        for (bool kept : r.kept_mask) s += kept ? '1' : '0';
        s += '\n';
    }
    return s;
}

std::string classify(const std::vector<IterationRecord>& records, bool converged,
                     std::size_t max_iters) {
    if (converged) return std::to_string(records.size());
    if (records.empty()) return "F";
    const std::size_t take = std::min<std::size_t>(10, records.size());
    for (std::size_t i = records.size() - take; i < records.size(); ++i)
        if (!(records[i].residual_norm < 1.0)) return "F";
    return ">" + std::to_string(max_iters);
}

json summary_json(const RunOutcome& out) {
    json j;
    j["schema_version"] = 1;
    j["label"] = out.label;
    j["problem"] = out.problem_name;
    j["strategy"] = out.strategy_name;
    j["status"] = status_name(out.status);
    j["converged"] = out.converged;
    j["iterations"] = out.iterations;
    j["final_residual"] = finite_or_string(out.final_residual);
    j["max_cond_F"] = finite_or_string(out.max_cond_F);
    j["classification"] = out.classification;
    j["beta"] = finite_or_string(out.beta_resolved);
    j["max_iters"] = out.max_iters;
    return j;
}

RunOutcome execute_run(const json& problem_block, const json& solver_block,
                       const std::string& label) {
    if (!problem_block.is_object() || !problem_block.contains("name"))
        throw ConfigError("problem: missing \"name\"");
    const std::string name = get_string(problem_block, "name", "", "problem");

    ParsedSolver ps = parse_solver(solver_block);
    RunOutcome out;
    out.problem_name = name;
    out.strategy_name = ps.strategy_name;
    out.label = label.empty() ? name + "-" + ps.strategy_name : label;

    if (name == "linear_toy") {
        check_keys(problem_block, {"name", "dim", "norm", "seed"}, "problem");
        const std::size_t dim = get_size(problem_block, "dim", 20, "problem");
        const double norm = get_number(problem_block, "norm", 0.9, "problem");
        const std::size_t seed = get_size(problem_block, "seed", 42, "problem");
        if (dim == 0 || dim > 64) throw ConfigError("problem.dim: must be in [1, 64]");
        if (!(norm > 0.0)) throw ConfigError("problem.norm: must be positive");
        run_into(scaled_random_toy(dim, norm, seed), ps, out);
    } else if (name == "nlh") {
        check_keys(problem_block, {"name", "k0", "eps", "n_points"}, "problem");
        NlhParams p;
        p.k0 = get_number(problem_block, "k0", p.k0, "problem");
        p.eps = get_number(problem_block, "eps", p.eps, "problem");
        p.n_points = get_size(problem_block, "n_points", p.n_points, "problem");
        if (!(p.k0 > 0.0)) throw ConfigError("problem.k0: must be positive");
        if (p.n_points < 3) throw ConfigError("problem.n_points: must be at least 3");
        run_into(nlh_problem(p), ps, out);
    } else if (name == "quasilinear") {
        check_keys(problem_block, {"name", "subdivisions"}, "problem");
        QuasilinearParams p;
        p.subdivisions = get_size(problem_block, "subdivisions", p.subdivisions, "problem");
        if (p.subdivisions < 4) throw ConfigError("problem.subdivisions: must be at least 4");
        run_into(quasilinear_problem(p), ps, out);
    } else if (name == "plap") {
        check_keys(problem_block, {"name", "subdivisions", "p", "eps_reg"}, "problem");
        PLapParams p;
        p.subdivisions = get_size(problem_block, "subdivisions", p.subdivisions, "problem");
        p.p = get_number(problem_block, "p", p.p, "problem");
        p.eps_reg = get_number(problem_block, "eps_reg", p.eps_reg, "problem");
        if (p.subdivisions < 4) throw ConfigError("problem.subdivisions: must be at least 4");
        if (!(p.p > 1.0) || p.p > 2.0) throw ConfigError("problem.p: must be in (1, 2]");
        if (!(p.eps_reg > 0.0)) throw ConfigError("problem.eps_reg: must be positive");
        run_into(plap_problem(p), ps, out);
    } else {
        throw ConfigError("problem.name: unknown problem \"" + name +
                          "\" (expected linear_toy, nlh, quasilinear, or plap)");
    }
    return out;
}

int run_command(const json& config) {
    check_keys(config, {"problem", "solver", "out", "label", "plots"}, "run");
    if (!config.contains("problem")) throw ConfigError("run: missing \"problem\" block");
    const json solver = config.contains("solver") ? config.at("solver") : json::object();
    const std::string label = get_string(config, "label", "", "run");
    const bool plots = get_bool(config, "plots", true, "run");

    RunOutcome out = execute_run(config.at("problem"), solver, label);
    const std::string out_dir = get_string(config, "out", "runs/" + out.label, "run");
    write_run_artifacts(out_dir, out, plots);

    std::printf("%s: status=%s iterations=%zu final_residual=%s classification=%s\n",
                out.label.c_str(), status_name(out.status), out.iterations,
                fmt17(out.final_residual).c_str(), out.classification.c_str());
    std::printf("artifacts: %s\n", out_dir.c_str());
    return status_exit_code(out.status);
}

int compare_command(const json& config) {
    check_keys(config, {"problem", "strategies", "out", "plots"}, "compare");
    if (!config.contains("problem")) throw ConfigError("compare: missing \"problem\" block");
    if (!config.contains("strategies") || !config.at("strategies").is_array() ||
        config.at("strategies").size() < 2)
        throw ConfigError("compare: needs a \"strategies\" array with at least 2 entries");
    const bool plots = get_bool(config, "plots", true, "compare");
    const std::string out_dir = get_string(config, "out", "compare_out", "compare");

    const json& problem = config.at("problem");
    std::vector<RunOutcome> runs;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < config.at("strategies").size(); ++i) {
        json entry = config.at("strategies")[i];
        if (!entry.is_object()) throw ConfigError("compare: strategies entries must be objects");
        if (entry.contains("problem")) {
            if (entry.at("problem") != problem)
                throw ConfigError("compare: strategy " + std::to_string(i + 1) +
                                  " carries a problem block that differs from the shared one");
            entry.erase("problem");
        }
        std::string label = get_string(entry, "label", "", "compare.strategies");
        entry.erase("label");
        if (label.empty()) label = get_string(entry, "strategy", "faa", "solver");
        while (std::find(labels.begin(), labels.end(), label) != labels.end()) label += "+";
        labels.push_back(label);
        runs.push_back(execute_run(problem, entry, label));
    }

    std::size_t max_rows = 0;
    for (const RunOutcome& r : runs) max_rows = std::max(max_rows, r.records.size());
    std::string csv = "k";
    for (const RunOutcome& r : runs)
        csv += "," + r.label + ":residual," + r.label + ":theta," + r.label + ":cond_F," +
               r.label + ":m_k";
    csv += '\n';
    for (std::size_t row = 0; row < max_rows; ++row) {
        csv += std::to_string(row);
        for (const RunOutcome& r : runs) {
            if (row < r.records.size()) {
                const IterationRecord& rec = r.records[row];
                csv += "," + fmt17(rec.residual_norm) + "," + fmt17(rec.theta) + "," +
                       fmt17(rec.cond_F) + "," + std::to_string(rec.m_k);
            } else {
                csv += ",,,,";
            }
        }
        csv += '\n';
    }

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "compare.csv", csv);

    json summary;
    summary["schema_version"] = 1;
    summary["problem"] = get_string(problem, "name", "", "problem");
    summary["runs"] = json::array();
    for (const RunOutcome& r : runs) summary["runs"].push_back(summary_json(r));
    write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");

    if (plots) {
        std::vector<plot::Series> resid, cond;
        for (const RunOutcome& r : runs) {
            plot::Series rs{r.label, {}, {}}, cs{r.label, {}, {}};
            for (const IterationRecord& rec : r.records) {
                rs.xs.push_back(static_cast<double>(rec.k));
                rs.ys.push_back(rec.residual_norm);
                cs.xs.push_back(static_cast<double>(rec.k));
                cs.ys.push_back(rec.cond_F > 0.0 ? rec.cond_F
                                                 : std::numeric_limits<double>::quiet_NaN());
            }
            resid.push_back(std::move(rs));
            cond.push_back(std::move(cs));
        }
        write_text(fs::path(out_dir) / "residual.svg",
                   plot::line_plot("residual history", "||g(x_k) - x_k||", resid, true));
        write_text(fs::path(out_dir) / "condition.svg",
                   plot::line_plot("condition telemetry", "cond_F", cond, true));
    }

    std::printf("%-24s %-12s %-10s %-22s %s\n", "strategy", "class", "iters", "final_residual",
                "max_cond_F");
    for (const RunOutcome& r : runs)
        std::printf("%-24s %-12s %-10zu %-22s %s\n", r.label.c_str(), r.classification.c_str(),
                    r.iterations, fmt17(r.final_residual).c_str(), fmt17(r.max_cond_F).c_str());
    std::printf("artifacts: %s\n", out_dir.c_str());
    return 0;
}

int sweep_command(const json& config) {
    check_keys(config, {"problem", "solver", "grid", "out", "jobs", "plots"}, "sweep");
    if (!config.contains("problem")) throw ConfigError("sweep: missing \"problem\" block");
    if (!config.contains("grid")) throw ConfigError("sweep: missing \"grid\" block (empty grid)");
    const json& grid = config.at("grid");
    check_keys(grid, {"strategy", "cs", "kappa", "m", "beta"}, "grid");

    const json base_solver = config.contains("solver") ? config.at("solver") : json::object();
    const bool plots = get_bool(config, "plots", false, "sweep");
    const std::string out_dir = get_string(config, "out", "sweep_out", "sweep");
    std::size_t jobs = get_size(config, "jobs", 1, "sweep");
    if (jobs == 0) jobs = 1;

    // absent axis -> one point that leaves the base value untouched (null)
    auto axis = [&grid](const char* key) -> std::vector<json> {
        if (!grid.contains(key)) return {json()};
        const json& v = grid.at(key);
        if (!v.is_array()) return {v};
        std::vector<json> vals(v.begin(), v.end());
        return vals;
    };
    const std::vector<json> ax_strategy = axis("strategy");
    const std::vector<json> ax_cs = axis("cs");
    const std::vector<json> ax_kappa = axis("kappa");
    const std::vector<json> ax_m = axis("m");
    const std::vector<json> ax_beta = axis("beta");

    struct Point {
        json solver;
        json coords;
    };
    std::vector<Point> points;
    for (const json& vs : ax_strategy)
        for (const json& vc : ax_cs)
            for (const json& vk : ax_kappa)
                for (const json& vm : ax_m)
                    for (const json& vb : ax_beta) {
                        Point pt;
                        pt.solver = base_solver;
                        pt.coords = json::object();
                        auto put = [&pt](const char* key, const json& v) {
                            if (v.is_null()) return;
                            pt.solver[key] = v;
                            pt.coords[key] = v;
                        };
                        put("strategy", vs);
                        put("cs", vc);
                        put("kappa", vk);
                        put("m", vm);
                        put("beta", vb);
                        points.push_back(std::move(pt));
                    }
    if (points.empty() || (points.size() == 1 && points[0].coords.empty()))
        throw ConfigError("sweep: empty grid");

    // validate every grid point before any run starts, so a bad grid is a
    // config error rather than a recorded failure
    for (const Point& pt : points) parse_solver(pt.solver);

    fs::create_directories(out_dir);
    const json& problem = config.at("problem");
    std::vector<json> entries(points.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            char dirname[32];
            std::snprintf(dirname, sizeof(dirname), "run_%04zu", i);
            json entry;
            entry["point"] = points[i].coords;
            entry["dir"] = dirname;
            try {
                RunOutcome out = execute_run(problem, points[i].solver, dirname);
                write_run_artifacts(fs::path(out_dir) / dirname, out, plots);
                entry["summary"] = summary_json(out);
            } catch (const std::exception& e) {
                entry["error"] = e.what();
            }
            entries[i] = std::move(entry);
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    json index;
    index["schema_version"] = 1;
    index["problem"] = get_string(problem, "name", "", "problem");
    index["runs"] = json::array();
    for (json& e : entries) index["runs"].push_back(std::move(e));
    write_text(fs::path(out_dir) / "index.json", index.dump(2) + "\n");

    std::size_t failures = 0;
    for (const json& e : index["runs"])
        if (e.contains("error")) ++failures;
    std::printf("sweep: %zu runs, %zu failed, index at %s/index.json\n", points.size(), failures,
                out_dir.c_str());
    return 0;
}

json load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + ": expected a JSON object");
    return j;
}

void deep_merge(json& base, const json& overrides) {
    if (!base.is_object() || !overrides.is_object()) {
        base = overrides;
        return;
    }
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
            deep_merge(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

int status_exit_code(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return 0;
        case SolveStatus::MaxIters: return 2;
        case SolveStatus::Diverged: return 3;
    }
    return 2;
}

}  // namespace faa::harness
