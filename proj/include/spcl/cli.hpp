#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spcl/checks.hpp"
#include "spcl/consistency.hpp"
#include "spcl/envs.hpp"
#include "spcl/function_approx.hpp"
#include "spcl/mdp.hpp"
#include "spcl/pcl_trainer.hpp"
#include "spcl/text.hpp"

// Subcommands: solve | train | eval | check.
// Exit codes: 0 success, 1 usage/config error, 2 suite or assertion failure,
// 3 divergence (trainer blow-up or non-convergent solve).
// SPCL_SEED overrides the default of every --seed flag.

namespace spcl::cli {

namespace fs = std::filesystem;

namespace detail {

inline void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << contents;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

/// Every run dumps its effective configuration (flag > config file > default).
inline void write_resolved_config(CLI::App* cmd, const fs::path& dir) {
    fs::create_directories(dir);
    write_file(dir / "resolved_config", cmd->config_to_str(true, false));
}

/// Flat key=value config support with flag > file > default precedence:
/// values from the file are injected as --key=value tokens only for flags the
/// command line did not set. Unknown keys are rejected. A resolved_config
/// dump parses back as a valid config file.
inline void apply_config_file(CLI::App& app, std::vector<std::string>& args) {
    std::string sub_name, config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (sub_name.empty() && !args[i].empty() && args[i][0] != '-') sub_name = args[i];
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return;
    CLI::App* sub = sub_name.empty() ? nullptr : app.get_subcommand_no_throw(sub_name);
    if (sub == nullptr) return;  // parse() will report the bad subcommand
    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("cannot open config file " + config_path);

    auto given = [&args](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("config line is not key=value: " + line);
        const std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key == "config") continue;
        if (sub->get_option_no_throw("--" + key) == nullptr)
            throw CLI::ValidationError("unknown config key: " + key);
        if (given("--" + key)) continue;  // command line wins
        std::stringstream pieces(value);
        std::string piece;
        while (std::getline(pieces, piece, ',')) args.push_back("--" + key + "=" + piece);
    }
}

struct TrainArgs {
    std::string task = "copy";
    std::string mdp_file;
    std::vector<int> vocabs = {5};
    std::vector<std::string> modes = {"sparse"};
    double alpha = 0.1;
    double gamma = 0.9;
    int rollout = 10;
    double lr = 0.005;
    long steps = 100;
    long max_env_steps = 0;
    int batch = 8;
    int replay_batch = 8;
    int buffer = 10000;
    double a_priority = 0.5;
    bool no_replay = false;
    std::string optimizer = "sgd";
    std::string model = "tabular";
    std::string lambda_factor = "per_action";
    std::vector<int> hidden = {64, 64};
    int window = 4;
    int min_len = 1;
    int max_len = 5;
    int horizon = 8;
    int cap_len = 50;
    std::uint64_t seed = 0;
    int n_seeds = 1;
    std::string out = "out";
};

struct BuiltEnv {
    std::unique_ptr<EpisodeEnv> env;
    int n_obs_symbols = 0;
    int n_actions = 0;
};

inline BuiltEnv build_env(const TrainArgs& a, int vocab) {
    BuiltEnv b;
    if (a.task == "bandit") {
        TabularMDP m = TabularMDP::zeros(1, 2, a.gamma);
        m.r(0, 0) = 1.0;
        m.p(0, 0, 0) = 1.0;
        m.p(0, 1, 0) = 1.0;
        b.env = std::make_unique<TabularMDPEnv>(std::move(m), a.horizon, 0);
    } else if (a.task == "mdp") {
        if (a.mdp_file.empty()) throw CLI::ValidationError("--mdp is required for task 'mdp'");
        b.env = std::make_unique<TabularMDPEnv>(load_mdp(a.mdp_file), a.horizon, -1);
    } else {
        b.env = std::make_unique<TapeEnv>(task_kind_from_string(a.task), vocab, a.min_len, a.max_len);
    }
    b.n_obs_symbols = b.env->n_obs_symbols();
    b.n_actions = b.env->n_actions();
    return b;
}

inline WindowEncoder build_encoder(const TrainArgs& a, const BuiltEnv& b) {
    WindowEncoder enc;
    enc.n_symbols = b.n_obs_symbols;
    enc.n_actions = b.n_actions;
    enc.tabular = a.model == "tabular";
    enc.window = enc.tabular ? 1 : a.window;
    return enc;
}

inline Model build_model(const TrainArgs& a, const BuiltEnv& b, const WindowEncoder& enc, TrainMode mode,
                         std::uint64_t seed) {
    ModelSpec spec;
    if (a.model == "tabular") spec.trunk = TrunkKind::Tabular;
    else if (a.model == "linear") spec.trunk = TrunkKind::Linear;
    else if (a.model == "mlp") {
        spec.trunk = TrunkKind::Mlp;
        spec.hidden = a.hidden;
    } else {
        throw CLI::ValidationError("unknown --model: " + a.model);
    }
    spec.policy = mode == TrainMode::Soft ? PolicyHead::Softmax : PolicyHead::Sparsemax;
    spec.unified = mode == TrainMode::UnifiedSparse;
    spec.lambda_factor = a.lambda_factor == "scalar" ? LambdaFactor::Scalar : LambdaFactor::PerAction;
    const int obs_dim = enc.tabular ? b.n_obs_symbols : enc.input_dim();
    Model model(spec, obs_dim, b.n_actions, a.alpha);
    Rng rng(seed);
    model.init_params(rng);
    return model;
}

inline TrainerConfig build_trainer_config(const TrainArgs& a, TrainMode mode, std::uint64_t seed) {
    TrainerConfig cfg;
    cfg.alpha = a.alpha;
    cfg.gamma = a.gamma;
    cfg.rollout = a.rollout;
    cfg.lr = a.lr;
    cfg.buffer_capacity = a.buffer;
    cfg.a_priority = a.a_priority;
    cfg.iterations = a.steps;
    cfg.max_env_steps = a.max_env_steps;
    cfg.batch_episodes = a.batch;
    cfg.replay_batch = a.replay_batch;
    cfg.mode = mode;
    cfg.use_replay = !a.no_replay;
    cfg.max_episode_len = a.cap_len;
    cfg.optimizer = a.optimizer == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
    cfg.seed = seed;
    return cfg;
}

inline int cmd_train(CLI::App* cmd, const TrainArgs& a) {
    const fs::path root(a.out);
    write_resolved_config(cmd, root);
    const bool tape = a.task != "bandit" && a.task != "mdp";
    const std::vector<int> vocabs = tape ? a.vocabs : std::vector<int>{0};
    const bool sweep = vocabs.size() > 1 || a.modes.size() > 1 || a.n_seeds > 1;

    std::string summary = "mode,vocab,seed,final_avg_reward,final_max_prob,final_support_size,env_steps,diverged\n";
    bool any_diverged = false;
    for (const std::string& mode_name : a.modes) {
        const TrainMode mode = train_mode_from_string(mode_name);
        for (int vocab : vocabs) {
            for (int s = 0; s < a.n_seeds; ++s) {
                const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(s);
                fs::path dir = root;
                if (sweep) {
                    std::string cell = "mode_" + mode_name;
                    if (tape) cell += "_vocab_" + std::to_string(vocab);
                    dir = root / cell / ("seed_" + std::to_string(seed));
                }
                fs::create_directories(dir);

                BuiltEnv env = build_env(a, vocab);
                const WindowEncoder enc = build_encoder(a, env);
                Model model = build_model(a, env, enc, mode, seed);
                const TrainerConfig cfg = build_trainer_config(a, mode, seed);

                std::ofstream csv(dir / "metrics.csv");
                const TrainLog log = train(*env.env, model, enc, cfg, &csv);
                csv.close();
                save_checkpoint(model, (dir / "checkpoint.bin").string());

                const IterationMetrics last = log.rows.empty() ? IterationMetrics{} : log.rows.back();
                summary += mode_name + "," + std::to_string(vocab) + "," + std::to_string(seed) + "," +
                           format_double(last.avg_reward) + "," + format_double(last.max_prob) + "," +
                           format_double(last.support_size) + "," + std::to_string(log.total_env_steps) + "," +
                           (log.diverged ? "1" : "0") + "\n";
                if (log.diverged) {
                    any_diverged = true;
                    write_file(dir / "divergence.txt", log.note + "\n");
                }
            }
        }
    }
    if (sweep) write_file(root / "sweep_summary.csv", summary);
    return any_diverged ? 3 : 0;
}

struct SolveArgs {
    std::string mdp_file;
    std::string kind = "sparse";
    double alpha = 0.5;
    double tol = 1e-10;
    std::string out = "out";
};

inline int cmd_solve(CLI::App* cmd, const SolveArgs& a) {
    const fs::path dir(a.out);
    write_resolved_config(cmd, dir);
    const TabularMDP m = load_mdp(a.mdp_file);
    const BackupKind kind = backup_kind_from_string(a.kind);

    ValueIterationResult res;
    try {
        res = value_iteration(m, kind, a.alpha, a.tol);
    } catch (const NonConvergence& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 3;
    }
    const TabularPolicy policy = extract_policy(m, res.v, kind, a.alpha);

    nlohmann::json sol;
    sol["kind"] = a.kind;
    sol["alpha"] = a.alpha;
    sol["tol"] = a.tol;
    sol["gamma"] = m.gamma;
    sol["iterations"] = res.iterations;
    sol["residual"] = res.residual;
    sol["v"] = res.v;
    write_json(dir / "solution.json", sol);

    nlohmann::json pol;
    pol["kind"] = a.kind;
    pol["alpha"] = a.alpha;
    nlohmann::json probs = nlohmann::json::array(), support = nlohmann::json::array();
    for (const auto& d : policy.dist) {
        probs.push_back(d.probs);
        support.push_back(d.support);
    }
    pol["probs"] = probs;
    pol["support"] = support;
    write_json(dir / "policy.json", pol);

    const BoundReport rep = check_bounds(m, a.alpha, a.tol);
    nlohmann::json bounds;
    bounds["alpha"] = rep.alpha;
    bounds["soft_bound"] = rep.soft_bound;
    bounds["sparse_bound"] = rep.sparse_bound;
    bounds["max_soft_gap"] = rep.max_soft_gap;
    bounds["max_sparse_gap"] = rep.max_sparse_gap;
    bounds["max_upper_violation"] = rep.max_upper_violation;
    bounds["ok"] = rep.ok;
    bounds["v_star"] = rep.v_star;
    bounds["v_soft_policy"] = rep.v_soft_policy;
    bounds["v_sparse_policy"] = rep.v_sparse_policy;
    write_json(dir / "bounds.json", bounds);

    if (!rep.ok) {
        std::cerr << "solve: sandwich bound violated (soft gap " << rep.max_soft_gap << "/" << rep.soft_bound
                  << ", sparse gap " << rep.max_sparse_gap << "/" << rep.sparse_bound << ")\n";
        return 2;
    }
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string replay_file;
    std::string task = "copy";
    std::string mdp_file;
    int vocab = 5;
    int min_len = 1;
    int max_len = 5;
    int horizon = 8;
    double gamma = 0.9;
    int episodes = 20;
    int cap_len = 50;
    int window = 4;
    std::string model = "tabular";
    bool greedy = false;
    std::uint64_t seed = 0;
    std::string dump;
    std::string out;
};

inline BuiltEnv build_eval_env(const EvalArgs& a, const std::string& task, int vocab) {
    TrainArgs t;
    t.task = task;
    t.mdp_file = a.mdp_file;
    t.gamma = a.gamma;
    t.horizon = a.horizon;
    t.min_len = a.min_len;
    t.max_len = a.max_len;
    return build_env(t, vocab);
}

inline int cmd_eval(CLI::App* cmd, const EvalArgs& a) {
    if (!a.out.empty()) write_resolved_config(cmd, fs::path(a.out));

    if (!a.replay_file.empty()) {
        std::ifstream in(a.replay_file);
        if (!in) throw std::runtime_error("cannot open " + a.replay_file);
        const TrajectoryDump d = read_trajectory(in);
        BuiltEnv env = build_eval_env(a, d.task, d.vocab);
        int obs = env.env->reset(d.seed);
        for (const auto& row : d.rows) {
            if (obs != row.obs) {
                std::cerr << "replay mismatch at t=" << row.t << ": obs " << obs << " != " << row.obs << "\n";
                return 2;
            }
            const StepResult res = env.env->step(row.action);
            if (res.reward != row.reward || static_cast<int>(res.done) != row.done) {
                std::cerr << "replay mismatch at t=" << row.t << ": reward/done differ\n";
                return 2;
            }
            obs = res.obs;
        }
        std::cout << "replay ok: " << d.rows.size() << " steps\n";
        return 0;
    }

    if (a.checkpoint.empty()) throw CLI::ValidationError("eval needs --checkpoint or --replay");
    Model model = load_checkpoint(a.checkpoint);
    BuiltEnv env = build_eval_env(a, a.task, a.vocab);
    WindowEncoder enc;
    enc.n_symbols = env.n_obs_symbols;
    enc.n_actions = env.n_actions;
    enc.tabular = model.spec().trunk == TrunkKind::Tabular;
    enc.window = enc.tabular ? 1 : a.window;
    const int want = enc.tabular ? 1 : enc.input_dim();
    if (want != model.expected_input_size())
        throw CLI::ValidationError("checkpoint input size does not match the task/window flags");

    Rng rng(a.seed);
    double total = 0.0;
    long total_len = 0;
    std::vector<double> rewards;
    for (int e = 0; e < a.episodes; ++e) {
        const std::uint64_t ep_seed = rng();
        const Episode ep = rollout_episode(*env.env, model, enc, ep_seed, a.cap_len, rng, a.greedy);
        rewards.push_back(ep.total_reward());
        total += ep.total_reward();
        total_len += ep.length();
        if (e == 0 && !a.dump.empty()) {
            // re-run the recorded actions on a fresh env so the dumped rows
            // are exactly what `eval --replay` will recompute
            TrajectoryDump d;
            d.task = a.task;
            d.vocab = a.vocab;
            d.seed = ep_seed;
            BuiltEnv denv = build_eval_env(a, a.task, a.vocab);
            int obs = denv.env->reset(ep_seed);
            for (int t = 0; t < ep.length(); ++t) {
                const StepResult res = denv.env->step(ep.actions[t]);
                d.rows.push_back({t, obs, ep.actions[t], res.reward, res.done ? 1 : 0});
                obs = res.obs;
            }
            std::ofstream dump_out(a.dump);
            write_trajectory(dump_out, d);
        }
    }
    nlohmann::json j;
    j["episodes"] = a.episodes;
    j["mean_reward"] = a.episodes > 0 ? total / a.episodes : 0.0;
    j["mean_length"] = a.episodes > 0 ? static_cast<double>(total_len) / a.episodes : 0.0;
    j["rewards"] = rewards;
    j["n_actions"] = env.n_actions;
    j["vocab"] = a.vocab;
    if (!a.out.empty()) write_json(fs::path(a.out) / "eval.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

struct CheckArgs {
    std::string suite = "all";
    long trials = 200;
    std::uint64_t seed = 1;
    std::string out;
};

inline int cmd_check(CLI::App* cmd, const CheckArgs& a) {
    if (!a.out.empty()) write_resolved_config(cmd, fs::path(a.out));
    const std::vector<checks::SuiteReport> reps = checks::run_suites(a.suite, a.seed, a.trials);
    bool all_ok = true;
    nlohmann::json j = nlohmann::json::array();
    for (const auto& rep : reps) {
        std::cout << "suite=" << rep.suite << " trials=" << rep.trials << " max_violation="
                  << format_double(rep.max_violation) << " status=" << (rep.ok ? "pass" : "fail") << "\n";
        for (const auto& n : rep.notes) std::cout << "  " << n << "\n";
        for (const auto& f : rep.failures) std::cout << "  " << f << "\n";
        nlohmann::json r;
        r["suite"] = rep.suite;
        r["trials"] = rep.trials;
        r["max_violation"] = rep.max_violation;
        r["ok"] = rep.ok;
        r["failures"] = rep.failures;
        j.push_back(r);
        all_ok = all_ok && rep.ok;
    }
    if (!a.out.empty()) write_json(fs::path(a.out) / "check.json", j);
    return all_ok ? 0 : 2;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"Tsallis/Shannon entropy-regularized MDP solvers and path consistency learning"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    auto solve_args = std::make_shared<detail::SolveArgs>();
    std::string config_file;
    CLI::App* solve = app.add_subcommand("solve", "exact tabular solve with sandwich-bound report");
    solve->add_option("--config", config_file, "flat key=value config file");
    solve->add_option("--mdp", solve_args->mdp_file, "MDP JSON file")->required();
    solve->add_option("--kind", solve_args->kind, "backup kind: max|soft|sparse")
        ->check(CLI::IsMember({"max", "soft", "sparse"}));
    solve->add_option("--alpha", solve_args->alpha, "regularizer weight");
    solve->add_option("--tol", solve_args->tol, "sup-norm stopping tolerance");
    solve->add_option("--out", solve_args->out, "output directory");

    auto train_args = std::make_shared<detail::TrainArgs>();
    CLI::App* train = app.add_subcommand("train", "path consistency learning");
    train->add_option("--config", config_file, "flat key=value config file");
    train->add_option("--task", train_args->task,
                      "copy|duplicated_input|repeat_copy|reverse|reversed_addition|bandit|mdp");
    train->add_option("--mdp", train_args->mdp_file, "MDP JSON file (task=mdp)");
    train->add_option("--vocab", train_args->vocabs, "vocabulary size(s); multiple values sweep");
    train->add_option("--mode", train_args->modes, "sparse|soft|unified_sparse; multiple values sweep");
    train->add_option("--alpha", train_args->alpha, "regularizer weight");
    train->add_option("--gamma", train_args->gamma, "discount factor");
    train->add_option("--rollout", train_args->rollout, "consistency window length d");
    train->add_option("--lr", train_args->lr, "learning rate");
    train->add_option("--steps", train_args->steps, "training iterations N");
    train->add_option("--max-env-steps", train_args->max_env_steps, "stop after this many env steps (0 = off)");
    train->add_option("--batch", train_args->batch, "on-policy episodes per iteration");
    train->add_option("--replay-batch", train_args->replay_batch, "replayed episodes per iteration");
    train->add_option("--buffer", train_args->buffer, "replay buffer capacity");
    train->add_option("--a-priority", train_args->a_priority, "replay priority temperature");
    train->add_flag("--no-replay", train_args->no_replay, "disable the replay gradient step");
    train->add_option("--optimizer", train_args->optimizer, "sgd|adam")->check(CLI::IsMember({"sgd", "adam"}));
    train->add_option("--lambda-factor", train_args->lambda_factor, "per_action|scalar multiplier factor head")
        ->check(CLI::IsMember({"per_action", "scalar"}));
    train->add_option("--model", train_args->model, "tabular|linear|mlp");
    train->add_option("--hidden", train_args->hidden, "mlp hidden layer sizes");
    train->add_option("--window", train_args->window, "observation window length (non-tabular models)");
    train->add_option("--min-len", train_args->min_len, "minimum instance length");
    train->add_option("--max-len", train_args->max_len, "maximum instance length");
    train->add_option("--horizon", train_args->horizon, "episode horizon (bandit/mdp tasks)");
    train->add_option("--cap-len", train_args->cap_len, "trainer-side episode length cap");
    train->add_option("--seed", train_args->seed, "base seed")->envname("SPCL_SEED");
    train->add_option("--seeds", train_args->n_seeds, "number of consecutive seeds to run");
    train->add_option("--out", train_args->out, "output directory");

    auto eval_args = std::make_shared<detail::EvalArgs>();
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint or replay a trajectory dump");
    eval->add_option("--config", config_file, "flat key=value config file");
    eval->add_option("--checkpoint", eval_args->checkpoint, "model checkpoint");
    eval->add_option("--replay", eval_args->replay_file, "trajectory dump to verify");
    eval->add_option("--task", eval_args->task, "task kind");
    eval->add_option("--mdp", eval_args->mdp_file, "MDP JSON file (task=mdp)");
    eval->add_option("--vocab", eval_args->vocab, "vocabulary size");
    eval->add_option("--min-len", eval_args->min_len, "minimum instance length");
    eval->add_option("--max-len", eval_args->max_len, "maximum instance length");
    eval->add_option("--horizon", eval_args->horizon, "episode horizon (bandit/mdp)");
    eval->add_option("--gamma", eval_args->gamma, "discount (bandit env construction)");
    eval->add_option("--episodes", eval_args->episodes, "number of evaluation episodes");
    eval->add_option("--cap-len", eval_args->cap_len, "episode length cap");
    eval->add_option("--window", eval_args->window, "observation window length");
    eval->add_flag("--greedy", eval_args->greedy, "act with the most likely action");
    eval->add_option("--seed", eval_args->seed, "evaluation seed")->envname("SPCL_SEED");
    eval->add_option("--dump", eval_args->dump, "write the first episode as a trajectory dump");
    eval->add_option("--out", eval_args->out, "output directory");

    auto check_args = std::make_shared<detail::CheckArgs>();
    CLI::App* check = app.add_subcommand("check", "run the invariant/theorem suites");
    check->add_option("--config", config_file, "flat key=value config file");
    check->add_option("--suite", check_args->suite, "operators|mdp|consistency|gradients|all")
        ->check(CLI::IsMember({"operators", "mdp", "consistency", "gradients", "all"}));
    check->add_option("--trials", check_args->trials, "trial count for the operator suite (others scale down)");
    check->add_option("--seed", check_args->seed, "suite seed")->envname("SPCL_SEED");
    check->add_option("--out", check_args->out, "optional output directory");

    try {
        detail::apply_config_file(app, args);
        std::vector<const char*> argv;
        argv.push_back("spcl");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (solve->parsed()) return detail::cmd_solve(solve, *solve_args);
        if (train->parsed()) return detail::cmd_train(train, *train_args);
        if (eval->parsed()) return detail::cmd_eval(eval, *eval_args);
        if (check->parsed()) return detail::cmd_check(check, *check_args);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ModelDivergence& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const NonConvergence& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

inline int run_cli(int argc, const char* const* argv) {
    return run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace spcl::cli
