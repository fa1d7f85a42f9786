#include "dpd/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dpd/env.hpp"
#include "dpd/metrics.hpp"
#include "dpd/snapshot.hpp"
#include "dpd/verify.hpp"

namespace dpd {

namespace fs = std::filesystem;

std::string CampaignOutcome::verdict_line() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: %ld/%ld pass, max violation %.3e -> %s", check.c_str(),
                  instances - failures, instances, max_violation, pass() ? "PASS" : "FAIL");
    return buf;
}

std::unique_ptr<Learner> make_learner(const ExperimentConfig& cfg, const EnvSpec& spec,
                                      uint64_t seed) {
    if (cfg.family == "off-policy") return std::make_unique<DdpgLearner>(spec, cfg.ddpg, seed);
    return std::make_unique<PpoLearner>(spec, cfg.ppo, seed);
}

std::unique_ptr<Learner> load_learner_snapshot(const ExperimentConfig& cfg, const EnvSpec& spec,
                                               const std::string& path) {
    if (!fs::exists(path))
        throw std::invalid_argument("diagnostics: missing checkpoint " + path);
    const std::string kind = SnapshotReader(path).meta("kind");
    std::unique_ptr<Learner> learner;
    if (kind == "ddpg")
        learner = std::make_unique<DdpgLearner>(spec, cfg.ddpg, 0);
    else if (kind == "ppo")
        learner = std::make_unique<PpoLearner>(spec, cfg.ppo, 0);
    else
        throw std::invalid_argument("snapshot " + path + " has unknown learner kind");
    learner->load(path);
    return learner;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

double sample_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

struct TrainContext {
    const ExperimentConfig& cfg;
    MetricsWriter& metrics;
    EpisodeWriter& episodes;
    RunResult& result;
    fs::path out;
};

long effective_collect_steps(const ExperimentConfig& cfg) {
    return cfg.family == "on-policy" ? cfg.ppo.rollout_steps : cfg.collect_steps;
}

std::string checkpoint_path(const TrainContext& ctx, const std::string& run_id,
                            const std::string& learner_id, long iteration) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "ckpt_%s_l%s_iter%06ld.snap", run_id.c_str(),
                  learner_id.c_str(), iteration);
    return (ctx.out / buf).string();
}

void dump_episodes(TrainContext& ctx, const std::string& run_id, uint64_t seed,
                   const std::string& learner_id, const Learner& learner) {
    const auto& returns = learner.episode_returns();
    for (size_t i = 0; i < returns.size(); ++i)
        ctx.episodes.write({run_id, seed, learner_id, static_cast<long>(i), returns[i]});
}

void finish_learner(TrainContext& ctx, const std::string& learner_id, const Learner& learner) {
    auto& summary = ctx.result.learners[learner_id];
    summary.final_mean_returns.push_back(learner.mean_recent_return(10));
    const auto& r = learner.episode_returns();
    summary.max_episode_returns.push_back(r.empty() ? 0.0
                                                    : *std::max_element(r.begin(), r.end()));
}

void maybe_checkpoint(TrainContext& ctx, const std::string& run_id, uint64_t seed,
                      const std::string& learner_id, const Learner& learner, long iteration,
                      bool final_iteration) {
    const bool interval_hit =
        ctx.cfg.checkpoint_interval > 0 && iteration % ctx.cfg.checkpoint_interval == 0;
    if (!interval_hit && !final_iteration) return;
    const std::string path = checkpoint_path(ctx, run_id, learner_id, iteration);
    learner.save(path);
    ctx.result.checkpoints.push_back({learner_id, seed, iteration, path});
}

void train_dpd_one_seed(TrainContext& ctx, uint64_t base_seed) {
    const auto& cfg = ctx.cfg;
    const std::string run_id = mode_name(cfg.mode) + "-s" + std::to_string(base_seed);
    auto env1 = make_env(cfg.env_name);
    auto env2 = make_env(cfg.env_name);
    auto l1 = make_learner(cfg, env1->spec(), base_seed);
    auto l2 = make_learner(cfg, env2->spec(), base_seed + 1);
    DpdOrchestrator orch(*l1, *l2, *env1, *env2, cfg.dpd, derive_seed(base_seed, 777));

    const long budget = cfg.steps_per_learner;
    const long collect = effective_collect_steps(cfg);
    long iteration = 0;
    while (l1->total_env_steps() < budget) {
        const long n = std::min(collect, budget - l1->total_env_steps());
        const IterationStats stats = orch.iterate(static_cast<int>(n));
        ++iteration;
        const bool last = l1->total_env_steps() >= budget;
        const Learner* learners[2] = {l1.get(), l2.get()};
        const DistillStats* dstats[2] = {&stats.distill1, &stats.distill2};
        const LossStats* rstats[2] = {&stats.rl1, &stats.rl2};
        for (int i = 0; i < 2; ++i) {
            const std::string id = std::to_string(i + 1);
            ctx.metrics.write({run_id, base_seed, mode_name(cfg.mode), id, iteration,
                               learners[i]->total_env_steps(),
                               learners[i]->mean_recent_return(10), rstats[i]->policy_loss,
                               rstats[i]->value_loss, dstats[i]->loss, dstats[i]->mean_xi,
                               dstats[i]->mean_weight});
            maybe_checkpoint(ctx, run_id, base_seed, id, *learners[i], iteration, last);
        }
    }
    dump_episodes(ctx, run_id, base_seed, "1", *l1);
    dump_episodes(ctx, run_id, base_seed, "2", *l2);
    finish_learner(ctx, "1", *l1);
    finish_learner(ctx, "2", *l2);
}

void train_vanilla_one_seed(TrainContext& ctx, uint64_t base_seed) {
    const auto& cfg = ctx.cfg;
    const std::string run_id = mode_name(cfg.mode) + "-s" + std::to_string(base_seed);
    auto env = make_env(cfg.env_name);
    auto learner = make_learner(cfg, env->spec(), base_seed);

    // matched total interaction: twice the per-learner dual budget
    const long budget = 2 * cfg.steps_per_learner;
    const long collect = effective_collect_steps(cfg);
    long iteration = 0;
    while (learner->total_env_steps() < budget) {
        const long n = std::min(collect, budget - learner->total_env_steps());
        learner->collect(*env, static_cast<int>(n));
        const LossStats rl = learner->rl_update();
        ++iteration;
        const bool last = learner->total_env_steps() >= budget;
        ctx.metrics.write({run_id, base_seed, mode_name(cfg.mode), "baseline", iteration,
                           learner->total_env_steps(), learner->mean_recent_return(10),
                           rl.policy_loss, rl.value_loss, 0.0, 0.0, 0.0});
        maybe_checkpoint(ctx, run_id, base_seed, "baseline", *learner, iteration, last);
    }
    dump_episodes(ctx, run_id, base_seed, "baseline", *learner);
    finish_learner(ctx, "baseline", *learner);
}

}  // namespace

RunResult run_training(const ExperimentConfig& cfg) {
    if (cfg.mode != Mode::train_dpd && cfg.mode != Mode::train_vanilla)
        throw std::invalid_argument("run_training: mode is not a train mode");
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_text(out / "config.echo", cfg.echo());

    RunResult result;
    result.steps_per_learner = cfg.steps_per_learner;
    MetricsWriter metrics((out / "metrics.csv").string());
    EpisodeWriter episodes((out / "episodes.csv").string());
    TrainContext ctx{cfg, metrics, episodes, result, out};

    try {
        for (uint64_t seed : cfg.seeds) {
            if (cfg.mode == Mode::train_dpd)
                train_dpd_one_seed(ctx, seed);
            else
                train_vanilla_one_seed(ctx, seed);
        }
    } catch (...) {
        // flag partial artifacts before propagating
        write_text(out / "ABORTED", "run aborted mid-way; artifacts are partial\n");
        throw;
    }

    result.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json summary;
    summary["mode"] = mode_name(cfg.mode);
    summary["env"] = cfg.env_name;
    summary["family"] = cfg.family;
    summary["seeds"] = cfg.seeds;
    summary["steps_per_learner"] = cfg.steps_per_learner;
    summary["vanilla_steps"] = 2 * cfg.steps_per_learner;
    summary["wall_clock_s"] = result.wall_clock_s;
    for (const auto& [id, s] : result.learners) {
        nlohmann::json j;
        j["final_returns"] = s.final_mean_returns;
        j["final_return_mean"] = sample_mean(s.final_mean_returns);
        j["final_return_std"] = sample_std(s.final_mean_returns);
        j["max_returns"] = s.max_episode_returns;
        j["max_return_mean"] = sample_mean(s.max_episode_returns);
        j["max_return_std"] = sample_std(s.max_episode_returns);
        summary["learners"][id] = std::move(j);
    }
    write_text(out / "summary.json", summary.dump(2) + "\n");
    return result;
}

namespace {

CampaignOutcome proposition_campaign(const ExperimentConfig& cfg, std::ofstream& report) {
    CampaignOutcome outcome;
    outcome.check = cfg.mode == Mode::verify_prop1 ? "prop1" : "prop2";
    for (long i = 0; i < cfg.verify_instances; ++i) {
        const uint64_t seed = cfg.verify_seed + static_cast<uint64_t>(i);
        Rng rng(seed);
        const int n = cfg.verify_min_states +
                      static_cast<int>(rng.integer(cfg.verify_max_states - cfg.verify_min_states + 1));
        const int m = cfg.verify_min_actions +
                      static_cast<int>(rng.integer(cfg.verify_max_actions - cfg.verify_min_actions + 1));
        const TabularMdp mdp = random_mdp(n, m, rng, cfg.verify_gamma);
        const TabularPolicy pi = random_policy(n, m, rng);
        const TabularPolicy peer = random_policy(n, m, rng);

        bool pass = false;
        double violation = 0.0;
        if (cfg.mode == Mode::verify_prop1) {
            Prop1Report r = verify_prop1(mdp, pi, peer);
            r.seed = seed;
            pass = r.pass();
            violation = r.max_violation;
            report << r.json_record() << "\n";
        } else {
            Prop2Report r = verify_prop2(mdp, pi, peer, cfg.dpd.distance);
            r.seed = seed;
            pass = r.pass();
            violation = r.abs_diff;
            report << r.json_record() << "\n";
        }
        ++outcome.instances;
        if (!pass) ++outcome.failures;
        outcome.max_violation = std::max(outcome.max_violation, violation);
    }
    return outcome;
}

CampaignOutcome gradcheck_campaign(const ExperimentConfig& cfg, std::ofstream& report) {
    CampaignOutcome outcome;
    outcome.check = "grad_check";
    for (long i = 0; i < cfg.gradcheck_nets; ++i) {
        const uint64_t seed = cfg.gradcheck_seed + static_cast<uint64_t>(i);
        Rng rng(seed);

        std::vector<int> sizes;
        sizes.push_back(1 + static_cast<int>(rng.integer(6)));
        const int depth = 1 + static_cast<int>(rng.integer(3));
        for (int d = 0; d < depth; ++d) sizes.push_back(4 + static_cast<int>(rng.integer(20)));
        const int out_dim = 1 + static_cast<int>(rng.integer(4));
        sizes.push_back(out_dim);

        const auto hidden = rng.integer(2) == 0 ? HiddenActivation::relu : HiddenActivation::tanh;
        const bool bounded = rng.integer(2) == 0;
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(out_dim, -2.0);
        Eigen::VectorXd hi = Eigen::VectorXd::Constant(out_dim, 2.0);
        Network net = Network::random_init(
            sizes, hidden, bounded ? OutputActivation::bounded : OutputActivation::identity, rng,
            1.0, bounded ? lo : Eigen::VectorXd{}, bounded ? hi : Eigen::VectorXd{});

        const int batch = 1 + static_cast<int>(rng.integer(8));
        Eigen::MatrixXd inputs(sizes.front(), batch);
        for (long k = 0; k < inputs.size(); ++k) inputs.data()[k] = rng.uniform(-1.5, 1.5);
        Eigen::MatrixXd target(out_dim, batch);
        for (long k = 0; k < target.size(); ++k) target.data()[k] = rng.uniform(-1.5, 1.5);

        LossSpec loss{
            [&target](const Eigen::MatrixXd& y) {
                return 0.5 * (y - target).squaredNorm() / y.cols();
            },
            [&target](const Eigen::MatrixXd& y) { return (y - target) / y.cols(); },
        };
        const double err = grad_check(net, inputs, loss, cfg.gradcheck_h, 200, rng);
        const bool pass = err < cfg.gradcheck_tol;

        nlohmann::json j{{"check", "grad_check"},
                         {"seed", seed},
                         {"max_violation", err},
                         {"pass", pass}};
        report << j.dump() << "\n";
        ++outcome.instances;
        if (!pass) ++outcome.failures;
        outcome.max_violation = std::max(outcome.max_violation, err);
    }
    return outcome;
}

}  // namespace

CampaignOutcome run_verification(const ExperimentConfig& cfg) {
    if (cfg.mode != Mode::verify_prop1 && cfg.mode != Mode::verify_prop2 &&
        cfg.mode != Mode::grad_check)
        throw std::invalid_argument("run_verification: mode is not a verification mode");
    cfg.validate();

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_text(out / "config.echo", cfg.echo());

    std::ofstream report(out / "report.jsonl");
    if (!report) throw std::runtime_error("cannot open report.jsonl");

    const CampaignOutcome outcome = cfg.mode == Mode::grad_check
                                        ? gradcheck_campaign(cfg, report)
                                        : proposition_campaign(cfg, report);

    nlohmann::json summary{{"check", outcome.check},
                           {"instances", outcome.instances},
                           {"failures", outcome.failures},
                           {"max_violation", outcome.max_violation},
                           {"pass", outcome.pass()}};
    write_text(out / "summary.json", summary.dump(2) + "\n");
    return outcome;
}

DiagnosticsResult run_diagnostics(const ExperimentConfig& cfg) {
    if (cfg.mode != Mode::diagnostics)
        throw std::invalid_argument("run_diagnostics: mode is not diagnostics");
    cfg.validate();
    for (const auto& p : cfg.diag_l1)
        if (!fs::exists(p)) throw std::invalid_argument("diagnostics: missing checkpoint " + p);
    for (const auto& p : cfg.diag_l2)
        if (!fs::exists(p)) throw std::invalid_argument("diagnostics: missing checkpoint " + p);

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_text(out / "config.echo", cfg.echo());

    auto env = make_env(cfg.env_name);
    auto reference = load_learner_snapshot(cfg, env->spec(), cfg.diag_reference);

    // probe states sampled uniformly from deterministic reference rollouts
    std::vector<Eigen::VectorXd> visited;
    Eigen::VectorXd obs = env->reset(cfg.diag_seed);
    for (long e = 0; e < cfg.diag_episodes; ++e) {
        if (e > 0) obs = env->reset();
        while (true) {
            visited.push_back(obs);
            const StepResult r = env->step(reference->act(obs, false));
            obs = r.next_observation;
            if (r.done || r.truncated) break;
        }
    }
    Rng sampler(derive_seed(cfg.diag_seed, 1));
    std::vector<Eigen::VectorXd> probes;
    for (long i = 0; i < cfg.diag_probes; ++i)
        probes.push_back(visited[sampler.integer(visited.size())]);

    DiagnosticsResult result;
    std::ofstream qcsv(out / "diagnostics_qvalues.csv");
    std::ofstream dcsv(out / "diagnostics_action_distance.csv");
    qcsv << "stage,probe,value_l1,value_l2\n";
    dcsv << "stage,probe,distance\n";
    for (size_t stage = 0; stage < cfg.diag_l1.size(); ++stage) {
        auto l1 = load_learner_snapshot(cfg, env->spec(), cfg.diag_l1[stage]);
        auto l2 = load_learner_snapshot(cfg, env->spec(), cfg.diag_l2[stage]);
        auto qv = diagnostics_qvalues(*l1, *l2, probes);
        auto dist = diagnostics_action_distance(*l1, *l2, probes);
        for (size_t p = 0; p < probes.size(); ++p) {
            qcsv << stage << ',' << p << ',' << format_real(qv[p].first) << ','
                 << format_real(qv[p].second) << '\n';
            dcsv << stage << ',' << p << ',' << format_real(dist[p]) << '\n';
        }
        result.qvalues.push_back(std::move(qv));
        result.mean_distance_per_stage.push_back(sample_mean(dist));
        result.action_distances.push_back(std::move(dist));
    }
    return result;
}

int run_mode(const ExperimentConfig& cfg) {
    switch (cfg.mode) {
        case Mode::train_dpd:
        case Mode::train_vanilla:
            run_training(cfg);
            return 0;
        case Mode::verify_prop1:
        case Mode::verify_prop2:
        case Mode::grad_check: {
            const CampaignOutcome outcome = run_verification(cfg);
            std::cout << outcome.verdict_line() << "\n";
            return outcome.pass() ? 0 : 1;
        }
        case Mode::diagnostics:
            run_diagnostics(cfg);
            return 0;
    }
    return 2;
}

}  // namespace dpd
