#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dpd/config.hpp"
#include "dpd/learner.hpp"

namespace dpd {

struct CheckpointInfo {
    std::string learner_id;
    uint64_t seed = 0;
    long iteration = 0;
    std::string path;
};

struct LearnerSummary {
    std::vector<double> final_mean_returns;   // per seed, last-10-episode window
    std::vector<double> max_episode_returns;  // per seed
};

struct RunResult {
    std::map<std::string, LearnerSummary> learners;  // "1" | "2" | "baseline"
    std::vector<CheckpointInfo> checkpoints;
    long steps_per_learner = 0;
    double wall_clock_s = 0.0;
};

struct CampaignOutcome {
    std::string check;
    long instances = 0;
    long failures = 0;
    double max_violation = 0.0;
    bool pass() const { return failures == 0; }
    std::string verdict_line() const;
};

struct DiagnosticsResult {
    // [stage][probe]
    std::vector<std::vector<std::pair<double, double>>> qvalues;
    std::vector<std::vector<double>> action_distances;
    std::vector<double> mean_distance_per_stage;
};

// Train drivers: write config.echo, metrics.csv, episodes.csv, checkpoints
// and summary.json under cfg.out_dir. Vanilla runs consume exactly twice the
// per-learner budget so total environment interaction matches a dual run.
RunResult run_training(const ExperimentConfig& cfg);

// Randomized campaigns (verify-prop1, verify-prop2, grad-check): write
// report.jsonl and summary.json, return the outcome.
CampaignOutcome run_verification(const ExperimentConfig& cfg);

// Probe-state diagnostics over checkpoint pairs; writes
// diagnostics_qvalues.csv and diagnostics_action_distance.csv.
DiagnosticsResult run_diagnostics(const ExperimentConfig& cfg);

// Mode dispatch; returns a process exit status (0 ok / campaign pass,
// 1 campaign verdict failure, 2 invalid configuration).
int run_mode(const ExperimentConfig& cfg);

std::unique_ptr<Learner> make_learner(const ExperimentConfig& cfg, const EnvSpec& spec,
                                      uint64_t seed);
std::unique_ptr<Learner> load_learner_snapshot(const ExperimentConfig& cfg, const EnvSpec& spec,
                                               const std::string& path);

}  // namespace dpd
