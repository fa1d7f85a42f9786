#pragma once

#include <fstream>
#include <string>

namespace dpd {

// One telemetry row per learner per iteration. Everything in here is
// deterministic given (config, seeds); wall-clock timing lives in
// summary.json so repeated runs produce byte-identical CSVs.
struct MetricsRecord {
    std::string run_id;
    uint64_t seed = 0;
    std::string mode;
    std::string learner_id;  // "1" | "2" | "baseline"
    long iteration = 0;
    long env_steps = 0;         // cumulative for this learner
    double mean_return_10 = 0;  // window of the last 10 finished episodes
    double rl_policy_loss = 0;
    double rl_value_loss = 0;
    double distill_loss = 0;
    double mean_xi = 0;
    double mean_weight = 0;
};

class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path);

    void write(const MetricsRecord& rec);  // throws on non-finite reals
    void flush() { out_.flush(); }

    static std::string header();

private:
    std::ofstream out_;
};

// episode_index is per (run, learner), 0-based
struct EpisodeRecord {
    std::string run_id;
    uint64_t seed = 0;
    std::string learner_id;
    long episode_index = 0;
    double episode_return = 0;
};

class EpisodeWriter {
public:
    explicit EpisodeWriter(const std::string& path);
    void write(const EpisodeRecord& rec);
    static std::string header();

private:
    std::ofstream out_;
};

std::string format_real(double v);  // stable %.10g formatting

}  // namespace dpd
