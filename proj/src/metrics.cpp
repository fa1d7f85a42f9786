#include "dpd/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dpd {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

namespace {

void require_finite(double v, const char* field) {
    if (!std::isfinite(v))
        throw std::logic_error(std::string("metrics: non-finite ") + field);
}

}  // namespace

std::string MetricsWriter::header() {
    return "run_id,seed,mode,learner,iteration,env_steps,mean_return_10,"
           "rl_policy_loss,rl_value_loss,distill_loss,mean_xi,mean_weight";
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("metrics: cannot open " + path);
    out_ << header() << "\n";
}

void MetricsWriter::write(const MetricsRecord& r) {
    require_finite(r.mean_return_10, "mean_return_10");
    require_finite(r.rl_policy_loss, "rl_policy_loss");
    require_finite(r.rl_value_loss, "rl_value_loss");
    require_finite(r.distill_loss, "distill_loss");
    require_finite(r.mean_xi, "mean_xi");
    require_finite(r.mean_weight, "mean_weight");
    out_ << r.run_id << ',' << r.seed << ',' << r.mode << ',' << r.learner_id << ','
         << r.iteration << ',' << r.env_steps << ',' << format_real(r.mean_return_10) << ','
         << format_real(r.rl_policy_loss) << ',' << format_real(r.rl_value_loss) << ','
         << format_real(r.distill_loss) << ',' << format_real(r.mean_xi) << ','
         << format_real(r.mean_weight) << '\n';
    if (!out_) throw std::runtime_error("metrics: write failed");
}

std::string EpisodeWriter::header() {
    return "run_id,seed,learner,episode_index,episode_return";
}

EpisodeWriter::EpisodeWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("episodes: cannot open " + path);
    out_ << header() << "\n";
}

void EpisodeWriter::write(const EpisodeRecord& r) {
    require_finite(r.episode_return, "episode_return");
    out_ << r.run_id << ',' << r.seed << ',' << r.learner_id << ',' << r.episode_index << ','
         << format_real(r.episode_return) << '\n';
    if (!out_) throw std::runtime_error("episodes: write failed");
}

}  // namespace dpd
