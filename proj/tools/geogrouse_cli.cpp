#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "geogrouse/config.hpp"
#include "geogrouse/episode.hpp"
#include "geogrouse/grouping.hpp"
#include "geogrouse/metrics.hpp"
#include "geogrouse/simulator.hpp"
#include "geogrouse/training.hpp"

namespace gg = geogrouse;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::string variant_override;
    std::int64_t seed_override = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "run config file")->required();
    cmd->add_option("--out", opts.out_override, "output directory (overrides io.output_dir)");
    cmd->add_option("--variant", opts.variant_override, "gs variant (overrides model.gs_variant)");
    cmd->add_option("--seed", opts.seed_override, "seed override (train.seed; env.seed for gen-data)");
}

gg::RunConfig resolve(const CommonOpts& opts, bool seed_is_env) {
    gg::RunConfig cfg = gg::load_run_config(opts.config_path);
    if (!opts.out_override.empty()) cfg.output_dir = opts.out_override;
    if (!opts.variant_override.empty()) {
        cfg.model.variant = gg::variant_from_name(opts.variant_override);
    }
    if (opts.seed_override >= 0) {
        if (seed_is_env) {
            cfg.env.seed = static_cast<std::uint64_t>(opts.seed_override);
        } else {
            cfg.train.seed = static_cast<std::uint64_t>(opts.seed_override);
        }
    }
    return cfg;
}

void announce(const gg::RunConfig& cfg, std::uint64_t active_seed) {
    std::filesystem::create_directories(cfg.output_dir);
    std::string resolved = gg::serialize_run_config(cfg);
    std::cout << "# resolved config (seed " << active_seed << ")\n" << resolved;
    std::ofstream out(cfg.output_dir + "/resolved_config.ini");
    out << resolved;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "'");
    out << content;
}

gg::PolicyNet make_policy(const gg::RunConfig& cfg, const gg::Environment& env) {
    return gg::PolicyNet(cfg.model, env.vocabs(cfg.model.aoi_level), env.item_category);
}

int cmd_gen_data(const CommonOpts& opts) {
    gg::RunConfig cfg = resolve(opts, true);
    announce(cfg, cfg.env.seed);
    gg::Environment env = gg::generate_environment(cfg.env);
    gg::Scorer logger = gg::uniform_scorer();
    std::vector<gg::Episode> episodes;
    for (int i = 0; i < cfg.n_logged_sessions; ++i) {
        gg::Rng rng = gg::Rng::substream(cfg.env.seed, 0x10C, static_cast<std::uint64_t>(i));
        const gg::SyntheticUser& user = env.users[rng.uniform_index(env.users.size())];
        gg::Episode ep = gg::simulate_session(env, user, logger, cfg.env.max_session_len, rng);
        ep.session_id = i;
        episodes.push_back(std::move(ep));
    }
    gg::write_sessions(episodes, cfg.output_dir + "/sessions.jsonl");
    std::cout << "wrote " << episodes.size() << " sessions to " << cfg.output_dir
              << "/sessions.jsonl\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    gg::RunConfig cfg = resolve(opts, false);
    announce(cfg, cfg.train.seed);
    gg::Environment env = gg::generate_environment(cfg.env);
    gg::PolicyNet policy = make_policy(cfg, env);
    gg::TrainResult res = gg::train_em(policy, env, cfg.train);
    res.params.save_json(cfg.output_dir + "/params.json");
    res.history.save_csv(cfg.output_dir + "/history.csv");
    double last = res.history.rows.empty() ? 0.0 : res.history.rows.back().mean_return;
    std::cout << "trained " << cfg.train.em_rounds << " rounds (variant "
              << gg::variant_name(cfg.model.variant) << "), final mean return " << last << "\n";
    std::cout << "checkpoint: " << cfg.output_dir << "/params.json\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint) {
    gg::RunConfig cfg = resolve(opts, false);
    announce(cfg, cfg.train.seed);
    gg::Environment env = gg::generate_environment(cfg.env);
    gg::PolicyNet policy = make_policy(cfg, env);
    gg::ParamStore ps = gg::ParamStore::load_json(checkpoint);
    gg::MetricsReport report = gg::offline_eval(gg::policy_scorer(policy, ps), env, cfg.eval);
    write_file(cfg.output_dir + "/metrics.json", report.to_json());
    write_file(cfg.output_dir + "/metrics.txt", report.to_table());
    std::cout << report.to_table();
    return 0;
}

int cmd_sweep(const CommonOpts& opts, std::vector<int> levels) {
    gg::RunConfig cfg = resolve(opts, false);
    announce(cfg, cfg.train.seed);
    if (levels.empty()) levels = {1, 2, 3, 4, 5};
    gg::Environment env = gg::generate_environment(cfg.env);
    std::vector<gg::SweepRow> rows =
        gg::sensitivity_sweep(levels, env, cfg.model, cfg.train, cfg.eval, cfg.sweep_seeds);
    gg::save_sweep_csv(rows, cfg.output_dir + "/sweep.csv");
    for (const gg::SweepRow& r : rows) {
        std::cout << "aoi level " << r.aoi_level << ": mean AUC " << r.mean_auc << "\n";
    }
    return 0;
}

int cmd_grad_check(const CommonOpts& opts, int n_seeds) {
    gg::RunConfig cfg = resolve(opts, false);
    announce(cfg, cfg.train.seed);
    gg::Environment env = gg::generate_environment(cfg.env);
    gg::PolicyNet policy = make_policy(cfg, env);
    double worst = 0.0;
    for (int i = 0; i < n_seeds; ++i) {
        double err = gg::full_stack_grad_check(policy, env, cfg.train.seed + static_cast<std::uint64_t>(i));
        worst = std::max(worst, err);
    }
    std::cout << "grad-check (" << gg::variant_name(cfg.model.variant) << ", " << n_seeds
              << " seeds): max relative error " << worst << "\n";
    if (!(worst < 1e-4)) {
        std::cerr << "grad-check FAILED: " << worst << " >= 1e-4\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GeoGrouse: geographic group-specific recommendation policy"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, eval_opts, sweep_opts, gc_opts;
    std::string checkpoint;
    std::vector<int> levels;
    int gc_seeds = 20;

    CLI::App* gen = app.add_subcommand("gen-data", "generate an environment and logged sessions");
    add_common(gen, gen_opts);
    CLI::App* train = app.add_subcommand("train", "run EM + REINFORCE training");
    add_common(train, train_opts);
    CLI::App* eval = app.add_subcommand("eval", "offline metrics for a checkpoint");
    add_common(eval, eval_opts);
    eval->add_option("--checkpoint", checkpoint, "params.json to evaluate")->required();
    CLI::App* sweep = app.add_subcommand("sweep", "AOI-level sensitivity sweep");
    add_common(sweep, sweep_opts);
    sweep->add_option("--levels", levels, "AOI levels to sweep (default 1..5)");
    CLI::App* gc = app.add_subcommand("grad-check", "full-stack finite-difference gradient check");
    add_common(gc, gc_opts);
    gc->add_option("--seeds", gc_seeds, "number of random seeds");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(gen_opts);
        if (train->parsed()) return cmd_train(train_opts);
        if (eval->parsed()) return cmd_eval(eval_opts, checkpoint);
        if (sweep->parsed()) return cmd_sweep(sweep_opts, levels);
        if (gc->parsed()) return cmd_grad_check(gc_opts, gc_seeds);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gg::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const gg::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
