// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The training criteria run the full matched-budget experiment, so
// this binary takes several minutes on a desktop CPU.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dpd/ddpg.hpp"
#include "dpd/dpd.hpp"
#include "dpd/env.hpp"
#include "dpd/harness.hpp"
#include "dpd/verify.hpp"

using namespace dpd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
    std::printf("[%s] %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig base_config(const std::string& out) {
    KeyValueConfig kv;
    kv.set("run.out_dir", out);
    return ExperimentConfig::resolve(kv);
}

// ---------------------------------------------------------------------------

void criterion_prop1(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = base_config((out / "prop1").string());
    cfg.mode = Mode::verify_prop1;
    cfg.verify_instances = 1000;
    const auto outcome = run_verification(cfg);
    const double secs = elapsed_s(t0);

    char detail[160];
    std::snprintf(detail, sizeof(detail), "%ld/%ld dominance+strict ok, max violation %.2e, %.1fs",
                  outcome.instances - outcome.failures, outcome.instances, outcome.max_violation,
                  secs);
    report(outcome.pass() && outcome.max_violation <= 1e-8 && secs < 60.0, "prop1-campaign",
           detail);
}

void criterion_prop2(const fs::path& out) {
    auto cfg = base_config((out / "prop2").string());
    cfg.mode = Mode::verify_prop2;
    cfg.verify_instances = 1000;
    const auto outcome = run_verification(cfg);
    char detail[120];
    std::snprintf(detail, sizeof(detail), "max |LHS-RHS| = %.2e over %ld instances",
                  outcome.max_violation, outcome.instances);
    report(outcome.pass() && outcome.max_violation < 1e-10, "prop2-identity", detail);
}

void criterion_value_iteration() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(777001);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto mdp = random_mdp(8, 2, rng, 0.9);
        const auto v_star = value_iteration(mdp, 1e-10);
        Eigen::VectorXd best = Eigen::VectorXd::Constant(8, -1e100);
        for (int mask = 0; mask < 256; ++mask) {
            TabularPolicy pi;
            pi.probs = Eigen::MatrixXd::Zero(8, 2);
            for (int s = 0; s < 8; ++s) pi.probs(s, (mask >> s) & 1) = 1.0;
            best = best.cwiseMax(evaluate_policy(mdp, pi).v);
        }
        worst = std::max(worst, (v_star.v - best).lpNorm<Eigen::Infinity>());
    }
    const double secs = elapsed_s(t0);
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "200 instances vs 256-policy enumeration, sup gap %.2e, %.1fs", worst, secs);
    report(worst < 1e-6 && secs < 120.0, "value-iteration-optimality", detail);
}

void criterion_grad_check(const fs::path& out) {
    auto cfg = base_config((out / "gradcheck").string());
    cfg.mode = Mode::grad_check;
    cfg.gradcheck_nets = 50;
    const auto outcome = run_verification(cfg);
    char detail[120];
    std::snprintf(detail, sizeof(detail), "50 nets, max relative error %.2e",
                  outcome.max_violation);
    report(outcome.pass() && outcome.max_violation < 1e-4, "gradient-checks", detail);
}

void criterion_dpd_fixed_point() {
    PendulumEnv e1, e2;
    DdpgConfig dc;
    dc.actor_hidden = {32, 32};
    dc.critic_hidden = {32, 32};
    dc.warmup_steps = 64;
    dc.buffer_capacity = 4096;
    DdpgLearner a(e1.spec(), dc, 2024);
    DdpgLearner b(e2.spec(), dc, 2024);  // identical twin
    a.collect(e1, 400);
    b.collect(e2, 400);

    DpdConfig cfg;
    cfg.distill_window = 200;
    cfg.distill_batch = 64;
    DpdOrchestrator orch(a, b, e1, e2, cfg, 9);
    const auto before = a.policy_mean_net().flatten();
    const auto stats = orch.distill_update(0);
    const bool fixed_point =
        !stats.skipped && stats.loss == 0.0 && a.policy_mean_net().flatten() == before;

    // alpha = 0 reduction on distinct learners, straight-line recomputation
    PendulumEnv e3, e4;
    DdpgLearner c(e3.spec(), dc, 3031);
    DdpgLearner d(e4.spec(), dc, 3032);
    c.collect(e3, 400);
    d.collect(e4, 400);
    DpdConfig cfg0 = cfg;
    cfg0.alpha = 0.0;
    const uint64_t dseed = 17;

    Rng replica(derive_seed(dseed, c.seed()));
    const auto window = d.buffer().recent_window(cfg0.distill_window);
    double unweighted = 0.0;
    for (int i = 0; i < cfg0.distill_batch; ++i) {
        const Transition* t = window[replica.integer(window.size())];
        const Eigen::VectorXd gap = c.policy_mean_net().forward(t->state) - d.act(t->state, false);
        unweighted += gap.squaredNorm();
    }
    unweighted /= cfg0.distill_batch;

    DpdOrchestrator orch0(c, d, e3, e4, cfg0, dseed);
    const auto stats0 = orch0.distill_update(0);
    const bool alpha0 = std::abs(stats0.loss - unweighted) < 1e-12;

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "identical twins unchanged: %s; |weighted - unweighted| = %.2e",
                  fixed_point ? "yes" : "no", std::abs(stats0.loss - unweighted));
    report(fixed_point && alpha0, "dpd-fixed-point-and-alpha0", detail);
}

struct ExperimentData {
    RunResult dpd;
    RunResult vanilla;
    fs::path dpd_out, vanilla_out;
};

ExperimentConfig experiment_config(Mode mode, const std::string& out) {
    KeyValueConfig kv;
    kv.set("mode", mode_name(mode));
    kv.set("env.name", "pendulum");
    kv.set("agent.family", "off-policy");
    kv.set("run.steps_per_learner", "60000");
    kv.set("run.seeds", "1,2,3,4,5");
    kv.set("run.collect_steps", "50");
    kv.set("run.checkpoint_interval", "240");  // first snapshot at 20% of training
    kv.set("run.out_dir", out);
    kv.set("ddpg.actor_hidden", "64,64");
    kv.set("ddpg.critic_hidden", "64,64");
    kv.set("ddpg.actor_lr", "1e-3");
    kv.set("ddpg.critic_lr", "1e-3");
    kv.set("ddpg.warmup_steps", "1000");
    kv.set("ddpg.update_every", "2");
    kv.set("dpd.alpha", "1.0");
    kv.set("dpd.lr", "1e-3");  // equal to the actor lr, as in the reference setup
    kv.set("dpd.updates_per_iter", "2");
    return ExperimentConfig::resolve(kv);
}

ExperimentData criterion_matched_budget(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentData data;
    data.dpd_out = out / "experiment_dpd";
    data.vanilla_out = out / "experiment_vanilla";
    data.dpd = run_training(experiment_config(Mode::train_dpd, data.dpd_out.string()));
    data.vanilla = run_training(experiment_config(Mode::train_vanilla, data.vanilla_out.string()));
    const double secs = elapsed_s(t0);

    const auto& v = data.vanilla.learners.at("baseline");
    const double v_mean = [&] {
        double s = 0;
        for (double x : v.final_mean_returns) s += x;
        return s / v.final_mean_returns.size();
    }();
    auto std_of = [](const std::vector<double>& xs) {
        double m = 0;
        for (double x : xs) m += x;
        m /= xs.size();
        double acc = 0;
        for (double x : xs) acc += (x - m) * (x - m);
        return std::sqrt(acc / (xs.size() - 1));
    };
    const double v_std = std_of(v.final_mean_returns);

    bool pass = secs < 1800.0;
    double best_dpd = -1e300;
    std::string detail;
    for (const std::string id : {"1", "2"}) {
        const auto& l = data.dpd.learners.at(id);
        double mean = 0;
        for (double x : l.final_mean_returns) mean += x;
        mean /= l.final_mean_returns.size();
        const double pooled = std::sqrt((std_of(l.final_mean_returns) * std_of(l.final_mean_returns) +
                                         v_std * v_std) / 2.0);
        if (mean < v_mean - pooled) pass = false;
        best_dpd = std::max(best_dpd, mean);
        char buf[80];
        std::snprintf(buf, sizeof(buf), "dpd%s=%.1f(pooled sd %.1f) ", id.c_str(), mean, pooled);
        detail += buf;
    }
    if (best_dpd < v_mean) pass = false;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "vanilla=%.1f best_dpd=%.1f, %.0fs", v_mean, best_dpd, secs);
    detail += buf;
    report(pass, "matched-budget-experiment", detail);
    return data;
}

std::string checkpoint_for(const RunResult& r, const std::string& learner_id, uint64_t seed,
                           bool first) {
    std::string path;
    long best_iter = first ? std::numeric_limits<long>::max() : -1;
    for (const auto& c : r.checkpoints) {
        if (c.learner_id != learner_id || c.seed != seed) continue;
        if ((first && c.iteration < best_iter) || (!first && c.iteration > best_iter)) {
            best_iter = c.iteration;
            path = c.path;
        }
    }
    return path;
}

void extra_qvalue_trend(const fs::path& out, const ExperimentData& data,
                        const std::string& reference) {
    // mean probe value should be non-decreasing across >= 80% of adjacent
    // checkpoint pairs as the critics learn
    int up = 0, total = 0;
    for (uint64_t s : {1, 2, 3, 4, 5}) {
        std::string l1_list, l2_list;
        std::vector<long> iters;
        for (const auto& c : data.dpd.checkpoints)
            if (c.learner_id == "1" && c.seed == s) iters.push_back(c.iteration);
        std::sort(iters.begin(), iters.end());
        for (long it : iters) {
            for (const auto& c : data.dpd.checkpoints) {
                if (c.seed != s || c.iteration != it) continue;
                if (c.learner_id == "1") l1_list += (l1_list.empty() ? "" : ",") + c.path;
                if (c.learner_id == "2") l2_list += (l2_list.empty() ? "" : ",") + c.path;
            }
        }
        KeyValueConfig kv;
        kv.set("mode", "diagnostics");
        kv.set("env.name", "pendulum");
        kv.set("run.out_dir", (out / ("diag_trend_s" + std::to_string(s))).string());
        kv.set("diagnostics.reference", reference);
        kv.set("diagnostics.l1", l1_list);
        kv.set("diagnostics.l2", l2_list);
        const auto diag = run_diagnostics(ExperimentConfig::resolve(kv));
        double prev = 0;
        for (size_t stage = 0; stage < diag.qvalues.size(); ++stage) {
            double mean = 0;
            for (const auto& [v1, v2] : diag.qvalues[stage]) mean += 0.5 * (v1 + v2);
            mean /= diag.qvalues[stage].size();
            if (stage > 0) {
                ++total;
                if (mean >= prev) ++up;
            }
            prev = mean;
        }
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail), "probe values non-decreasing in %d/%d adjacent pairs",
                  up, total);
    report(up * 100 >= total * 80, "qvalue-trend", detail);
}

void criterion_fig3_direction(const fs::path& out, const ExperimentData& data) {
    // reference policy: the best vanilla final checkpoint (trained at 2x steps)
    const auto& v = data.vanilla.learners.at("baseline");
    uint64_t best_seed = 1;
    double best_ret = -1e300;
    for (size_t i = 0; i < v.final_mean_returns.size(); ++i) {
        if (v.final_mean_returns[i] > best_ret) {
            best_ret = v.final_mean_returns[i];
            best_seed = i + 1;
        }
    }
    const std::string reference = checkpoint_for(data.vanilla, "baseline", best_seed, false);

    auto diag_config = [&](const std::string& sub, const std::string& l1_list,
                           const std::string& l2_list) {
        KeyValueConfig kv;
        kv.set("mode", "diagnostics");
        kv.set("env.name", "pendulum");
        kv.set("run.out_dir", (out / sub).string());
        kv.set("diagnostics.reference", reference);
        kv.set("diagnostics.l1", l1_list);
        kv.set("diagnostics.l2", l2_list);
        kv.set("diagnostics.probes", "100");
        kv.set("diagnostics.episodes", "5");
        return ExperimentConfig::resolve(kv);
    };

    double first_sum = 0, final_sum = 0;
    const std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    for (uint64_t s : seeds) {
        const auto cfg = diag_config(
            "diag_dpd_s" + std::to_string(s),
            checkpoint_for(data.dpd, "1", s, true) + "," + checkpoint_for(data.dpd, "1", s, false),
            checkpoint_for(data.dpd, "2", s, true) + "," + checkpoint_for(data.dpd, "2", s, false));
        const auto diag = run_diagnostics(cfg);
        first_sum += diag.mean_distance_per_stage.at(0);
        final_sum += diag.mean_distance_per_stage.at(1);
    }
    const double dpd_first = first_sum / seeds.size();
    const double dpd_final = final_sum / seeds.size();

    // independently trained vanilla pairs on the same probes
    double indep_sum = 0;
    for (size_t i = 0; i < seeds.size(); ++i) {
        const uint64_t a = seeds[i], b = seeds[(i + 1) % seeds.size()];
        const auto cfg = diag_config("diag_vanilla_" + std::to_string(a),
                                     checkpoint_for(data.vanilla, "baseline", a, false),
                                     checkpoint_for(data.vanilla, "baseline", b, false));
        indep_sum += run_diagnostics(cfg).mean_distance_per_stage.at(0);
    }
    const double indep = indep_sum / seeds.size();

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "dpd distance first=%.3f final=%.3f, independent vanilla pair=%.3f", dpd_first,
                  dpd_final, indep);
    report(dpd_final < dpd_first && dpd_final < indep, "fig3-direction", detail);

    // trained-value ordering: near-upright states should out-value hanging
    // states under a trained learner's own estimate
    auto cfg_any = experiment_config(Mode::train_dpd, (out / "unused").string());
    PendulumEnv env;
    auto learner = load_learner_snapshot(cfg_any, env.spec(), checkpoint_for(data.dpd, "1", 1, false));
    Rng rng(4242);
    int ordered = 0;
    const int pairs = 200;
    for (int i = 0; i < pairs; ++i) {
        const double th_up = rng.uniform(-0.15, 0.15), thd_up = rng.uniform(-0.5, 0.5);
        const double th_dn = M_PI + rng.uniform(-0.3, 0.3), thd_dn = rng.uniform(-0.5, 0.5);
        Eigen::VectorXd up(3), down(3);
        up << std::cos(th_up), std::sin(th_up), thd_up;
        down << std::cos(th_dn), std::sin(th_dn), thd_dn;
        if (learner->value_estimate(up) > learner->value_estimate(down)) ++ordered;
    }
    char detail2[120];
    std::snprintf(detail2, sizeof(detail2), "upright preferred in %d/%d sampled pairs", ordered,
                  pairs);
    report(ordered >= pairs * 9 / 10, "trained-value-ordering", detail2);

    extra_qvalue_trend(out, data, reference);
}

void criterion_determinism(const fs::path& out) {
    auto make = [&](const std::string& sub) {
        KeyValueConfig kv;
        kv.set("mode", "train-dpd");
        kv.set("env.name", "pendulum");
        kv.set("run.steps_per_learner", "1200");
        kv.set("run.seeds", "7");
        kv.set("run.collect_steps", "200");
        kv.set("run.out_dir", (out / sub).string());
        kv.set("ddpg.actor_hidden", "32,32");
        kv.set("ddpg.critic_hidden", "32,32");
        kv.set("ddpg.warmup_steps", "200");
        kv.set("ddpg.update_every", "4");
        return ExperimentConfig::resolve(kv);
    };
    run_training(make("det_a"));
    run_training(make("det_b"));
    const bool train_same =
        slurp(out / "det_a" / "metrics.csv") == slurp(out / "det_b" / "metrics.csv") &&
        slurp(out / "det_a" / "episodes.csv") == slurp(out / "det_b" / "episodes.csv");

    auto vcfg = base_config((out / "det_v1").string());
    vcfg.mode = Mode::verify_prop1;
    vcfg.verify_instances = 25;
    run_verification(vcfg);
    auto vcfg2 = vcfg;
    vcfg2.out_dir = (out / "det_v2").string();
    run_verification(vcfg2);
    const bool verify_same =
        slurp(out / "det_v1" / "report.jsonl") == slurp(out / "det_v2" / "report.jsonl");

    report(train_same && verify_same, "determinism",
           std::string("train metrics byte-identical: ") + (train_same ? "yes" : "no") +
               ", verify reports byte-identical: " + (verify_same ? "yes" : "no"));
}

}  // namespace

int main() {
    const fs::path out = fs::temp_directory_path() / "dpd_acceptance";
    fs::remove_all(out);
    fs::create_directories(out);

    std::printf("acceptance suite (artifacts under %s)\n", out.string().c_str());
    criterion_prop1(out);
    criterion_prop2(out);
    criterion_value_iteration();
    criterion_grad_check(out);
    criterion_dpd_fixed_point();
    const ExperimentData data = criterion_matched_budget(out);
    criterion_fig3_direction(out, data);
    criterion_determinism(out);

    std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures == 0 ? 0 : 1;
}
