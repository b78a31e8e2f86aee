// gradgap command-line driver: run, check, sweep, build-instance.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradgap/gradgap.hpp"

namespace fs = std::filesystem;
using namespace gradgap;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, check_failed = 1, usage_error = 2 };

struct Options {
    std::string config;
    std::string out = "out";
    std::string suite;
    std::optional<std::uint64_t> seed;
    std::optional<int> stride;
};

class Manifest {
public:
    Manifest(std::string command, const Options& opt) : command_(std::move(command)), out_(opt.out) {
        fs::create_directories(out_);
        start_ = std::chrono::steady_clock::now();
    }

    void set_config(const json& resolved) {
        digest_ = hex64(fnv1a(resolved.dump()));
        config_ = resolved;
    }
    void set_seed(std::uint64_t s) { seed_ = s; }
    json& extra() { return extra_; }

    fs::path write(const std::string& name, const std::string& contents) {
        const fs::path p = fs::path(out_) / name;
        write_file_atomic(p, contents);
        outputs_.push_back(p.string());
        return p;
    }

    void finish() {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
        json m{{"command", command_},
               {"config", config_},
               {"config_digest", digest_},
               {"seed", seed_},
               {"code_version", kVersion},
               {"outputs", outputs_},
               {"wall_time_ms", ms.count()}};
        for (auto it = extra_.begin(); it != extra_.end(); ++it)
            m[it.key()] = it.value();
        write_file_atomic(fs::path(out_) / "manifest.json", m.dump(2) + "\n");
    }

private:
    std::string command_;
    std::string out_;
    json config_ = json::object();
    std::string digest_;
    std::uint64_t seed_ = 0;
    std::vector<std::string> outputs_;
    json extra_ = json::object();
    std::chrono::steady_clock::time_point start_;
};

/// Config file with flag overrides applied.
json resolve_config(const Options& opt) {
    json cfg = read_json_file(opt.config);
    if (!cfg.is_object())
        throw ConfigError(opt.config + ": top level must be a JSON object");
    if (opt.seed)
        cfg["seed"] = *opt.seed;
    if (opt.stride)
        cfg["stride"] = *opt.stride;
    return cfg;
}

std::string trace_csv(const DynamicsTrace& tr) {
    std::ostringstream os;
    write_trace_csv(os, tr);
    return os.str();
}

json trace_summary(const DynamicsTrace& tr) {
    const FloorCheck fc = check_convergence_floor(tr);
    return {{"diverged", tr.diverged},
            {"steps", tr.records.empty() ? 0 : tr.records.size() - 1},
            {"J0", tr.records.empty() ? 0.0 : tr.records.front().value},
            {"JK", tr.records.empty() ? 0.0 : tr.records.back().value},
            {"M", tr.records.empty() ? 0.0 : tr.records.back().cumulative_alignment},
            {"floor_checked", fc.checked},
            {"floor_skipped", fc.skipped},
            {"floor_violations", fc.violations}};
}

AnyInstance load_instance(const ConfigView& cfg) {
    if (cfg.has("instance"))
        return instance_from_json(cfg.raw().at("instance"));
    if (cfg.has("instance_path"))
        return instance_from_json(read_json_file(cfg.required<std::string>("instance_path")));
    throw ConfigError(cfg.where() + ": missing required field 'instance' (or 'instance_path')");
}

UpdateRule parse_rule(const ConfigView& r, std::size_t dimension) {
    const RuleKind kind = [&] {
        try {
            return rule_kind_from_string(r.required<std::string>("kind"));
        } catch (const InvalidInput& e) {
            throw ConfigError(r.where() + ": " + e.what());
        }
    }();
    if (kind != RuleKind::prescribed)
        return UpdateRule::make(kind, r.required<double>("alpha"));
    const auto name = r.required<std::string>("prescribed_name");
    if (name == "constant") {
        Vec w = r.required<Vec>("direction");
        const double eta = r.required<double>("eta");
        if (w.size() != dimension)
            throw ConfigError(r.where() + ": 'direction' has the wrong dimension");
        return UpdateRule::make_prescribed([w, eta](int) { return Step{w, eta}; }, name);
    }
    if (name == "thm33")
        return build_trajectory_lb(r.required<double>("g"), r.required<double>("eta")).rule();
    if (name == "thm44")
        return build_token_lb(r.required<double>("g"), r.required<double>("eta"), r.required<int>("t_inf")).rule();
    throw ConfigError(r.where() + ": unknown prescribed_name '" + name + "' (expected constant, thm33 or thm44)");
}

template <typename Instance>
DynamicsTrace run_on(const Instance& inst, const ConfigView& cfg) {
    Vec theta0 = cfg.optional<Vec>("theta0", Vec(inst.dimension(), 0.0));
    if (theta0.size() != inst.dimension())
        throw ConfigError(cfg.where() + ": 'theta0' has the wrong dimension");
    const UpdateRule rule = parse_rule(cfg.child("rule"), inst.dimension());
    return run_dynamics(inst, ParamVector(theta0), rule, cfg.required<int>("horizon"));
}

int cmd_run(const Options& opt) {
    const json resolved = resolve_config(opt);
    const ConfigView cfg(resolved, opt.config);
    const auto kind = cfg.required<std::string>("kind");
    const std::uint64_t seed = cfg.optional<std::uint64_t>("seed", 0);
    Manifest man("run", opt);
    man.set_config(resolved);
    man.set_seed(seed);
    man.extra()["kind"] = kind;

    const auto lipschitz = lipschitz_source_from_string(cfg.optional<std::string>("lipschitz", "analytic"));
    if (kind == "dynamics") {
        const AnyInstance inst = load_instance(cfg);
        const DynamicsTrace tr = std::visit([&](const auto& i) { return run_on(i, cfg); }, inst);
        man.write("trace.csv", trace_csv(tr));
        man.extra()["summary"] = trace_summary(tr);
    } else if (kind == "thm33") {
        const double g = cfg.required<double>("g"), eta = cfg.required<double>("eta");
        const auto s = build_trajectory_lb(g, eta, lipschitz);
        const DynamicsTrace tr = run_dynamics(s.instance, s.theta0, s.rule(), cfg.required<int>("horizon"));
        man.write("trace.csv", trace_csv(tr));
        man.extra()["summary"] = trace_summary(tr);
        man.extra()["scheme"] = {{"delta", s.delta}, {"rho_floor", s.rho_floor}, {"band", {s.band_lo, s.band_hi}}};
    } else if (kind == "thm44") {
        const auto s = build_token_lb(cfg.required<double>("g"), cfg.required<double>("eta"),
                                      cfg.required<int>("t_inf"), lipschitz);
        const DynamicsTrace tr = run_dynamics(s.instance, s.theta0, s.rule(), cfg.required<int>("horizon"));
        man.write("trace.csv", trace_csv(tr));
        man.extra()["summary"] = trace_summary(tr);
        man.extra()["scheme"] = {{"delta", s.delta}, {"rho_floor", s.rho_floor}, {"band", {s.band_lo, s.band_hi}}};
    } else if (kind == "mab") {
        const MabResult r = run_mab(cfg.optional<int>("n_arms", 100), cfg.optional<int>("horizon", 10000),
                                    cfg.optional<double>("eta", 1.0), seed);
        man.write("trace.csv", trace_csv(r.trace));
        json summary = trace_summary(r.trace);
        summary["best_arm"] = r.best_arm;
        summary["nondecreasing"] = r.nondecreasing;
        summary["max_rho_closed_form_error"] = r.max_rho_error;
        man.extra()["summary"] = summary;
    } else if (kind == "contextual") {
        ContextualConfig c;
        c.d = cfg.optional<int>("d", c.d);
        c.n_arms = cfg.optional<int>("n_arms", c.n_arms);
        c.eta = cfg.optional<double>("eta", c.eta);
        c.horizon = cfg.optional<int>("horizon", c.horizon);
        c.pool_size = cfg.optional<int>("pool_size", c.pool_size);
        c.eval_size = cfg.optional<int>("eval_size", c.eval_size);
        if (cfg.has("curriculum_band")) {
            const auto band = cfg.required<std::vector<double>>("curriculum_band");
            if (band.size() != 2)
                throw ConfigError(cfg.where() + ": 'curriculum_band' must have two entries");
            c.band_lo = band[0];
            c.band_hi = band[1];
        }
        c.theta0_scale = cfg.optional<double>("theta0_scale", c.theta0_scale);
        c.seed = seed;
        c.stride = cfg.optional<int>("stride", 0);
        const ContextualResult r = run_contextual(c);
        const ContextualSummary s = summarize(r);
        man.write("contextual_trace.csv", contextual_trace_csv(r));
        man.write("training.csv", contextual_training_csv(r));
        man.extra()["summary"] = {{"fraction_J_ge_0.9", s.frac_above_09},
                                  {"spearman_gap_logodds", s.spearman_gap_logodds},
                                  {"spearman_gap_logodds_J_gt_0.5", s.spearman_gap_logodds_above_half},
                                  {"spearman_abs_relgap_J", s.spearman_relgap_value},
                                  {"median_J", s.median_value},
                                  {"fallback_steps", r.fallback_steps},
                                  {"floor_checked", r.floor_checked},
                                  {"floor_skipped", r.floor_skipped},
                                  {"floor_violations", r.floor_violations}};
    } else {
        throw ConfigError(opt.config + ": unknown kind '" + kind +
                          "' (expected dynamics, thm33, thm44, mab or contextual)");
    }
    man.finish();
    std::cout << "run " << kind << ": wrote " << opt.out << "\n";
    return Exit::ok;
}

int cmd_check(const Options& opt) {
    const std::uint64_t seed = opt.seed.value_or(0);
    std::vector<std::string> names;
    if (opt.suite == "all") {
        names = suite_names();
    } else {
        const auto& known = suite_names();
        if (std::find(known.begin(), known.end(), opt.suite) == known.end()) {
            std::cerr << "error: unknown suite '" << opt.suite << "'\n";
            return Exit::usage_error;
        }
        names = {opt.suite};
    }
    Manifest man("check", opt);
    man.set_config({{"suite", opt.suite}, {"seed", seed}});
    man.set_seed(seed);
    int total_failures = 0;
    json results = json::object();
    for (const auto& name : names) {
        const SuiteResult r = run_suite(name, seed);
        std::ostringstream lines;
        for (const auto& rep : r.reports)
            write_bound_report_jsonl(lines, rep);
        man.write("check_" + name + ".jsonl", lines.str());
        std::cout << name << ": " << r.reports.size() << " reports, " << r.failures() << " failures, " << r.skipped()
                  << " skipped\n";
        results[name] = {{"reports", r.reports.size()}, {"failures", r.failures()}, {"skipped", r.skipped()}};
        total_failures += r.failures();
    }
    man.extra()["pass_fail"] = results;
    man.extra()["passed"] = total_failures == 0;
    man.finish();
    return total_failures == 0 ? Exit::ok : Exit::check_failed;
}

int cmd_sweep(const Options& opt) {
    const json resolved = resolve_config(opt);
    const ConfigView cfg(resolved, opt.config);
    const auto family = cfg.optional<std::string>("family", "token_lb");
    std::vector<double> etas;
    if (cfg.has("etas")) {
        etas = cfg.required<std::vector<double>>("etas");
    } else {
        const ConfigView grid = cfg.child("eta_grid");
        etas = dyadic_grid(grid.required<int>("lo_exp"), grid.required<int>("hi_exp"));
    }
    const auto t_infs = cfg.required<std::vector<int>>("t_infs");
    const int horizon = cfg.optional<int>("horizon", 200);
    const SweepFamily fam =
        sweep_family_by_name(family, cfg.optional<double>("g", 2.0), cfg.optional<double>("theta0", 0.5));
    const SweepResult res = threshold_sweep(family, fam, etas, t_infs, horizon);

    Manifest man("sweep", opt);
    man.set_config(resolved);
    man.set_seed(cfg.optional<std::uint64_t>("seed", 0));
    man.write("sweep.csv", sweep_csv(res));
    man.write("thresholds.csv", threshold_csv(res));
    json th = json::object();
    for (const auto& [t, v] : res.threshold)
        th[std::to_string(t)] = v ? json(*v) : json(nullptr);
    man.extra()["eta_star"] = th;
    man.finish();
    std::cout << threshold_csv(res);
    return Exit::ok;
}

int cmd_build_instance(const Options& opt) {
    const json resolved = resolve_config(opt);
    const ConfigView cfg(resolved, opt.config);
    const auto builder = cfg.required<std::string>("builder");
    json inst;
    if (builder == "thm33")
        inst = to_json(build_trajectory_lb(cfg.required<double>("g"), cfg.required<double>("eta")).instance);
    else if (builder == "thm44")
        inst = to_json(
            build_token_lb(cfg.required<double>("g"), cfg.required<double>("eta"), cfg.required<int>("t_inf")).instance);
    else if (builder == "token_lb")
        inst = to_json(token_lb_family_instance(cfg.optional<double>("g", 2.0), cfg.required<int>("t_inf")));
    else if (builder == "mab")
        inst = to_json(mab_instance(cfg.required<int>("n_arms"), cfg.optional<int>("best_arm", 0)));
    else
        throw ConfigError(opt.config + ": unknown builder '" + builder + "' (expected thm33, thm44, token_lb or mab)");
    Manifest man("build-instance", opt);
    man.set_config(resolved);
    man.write("instance.json", inst.dump(2) + "\n");
    man.finish();
    return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-gap dynamics of softmax policies on enumerable instances"};
    app.require_subcommand(1);
    Options opt;

    auto* run = app.add_subcommand("run", "Run dynamics or an experiment from a config file");
    auto* check = app.add_subcommand("check", "Run a property suite and write JSON-lines bound reports");
    auto* sweep = app.add_subcommand("sweep", "Step-size threshold sweep from a config file");
    auto* build = app.add_subcommand("build-instance", "Write a built-in instance as JSON");
    for (auto* sub : {run, sweep, build})
        sub->add_option("--config", opt.config, "Config file (JSON)")->required();
    check->add_option("--suite", opt.suite, "identity, taylor, mgf, difflog, token-difflog, gap-floor or all")
        ->required();
    for (auto* sub : {run, check, sweep, build}) {
        sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Seed (overrides the config)");
    }
    run->add_option("--stride", opt.stride, "Evaluation recording stride (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Exit::ok : Exit::usage_error;
    }

    try {
        if (*run)
            return cmd_run(opt);
        if (*check)
            return cmd_check(opt);
        if (*sweep)
            return cmd_sweep(opt);
        return cmd_build_instance(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return Exit::usage_error;
}
