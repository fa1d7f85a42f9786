#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpd/ddpg.hpp"
#include "dpd/dpd.hpp"
#include "dpd/ppo.hpp"

namespace dpd {

// Flat key = value text with dotted section keys and '#' comments. Values are
// plain strings; typed access happens at resolution time.
class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<long> get_int_list(const std::string& key,
                                   const std::vector<long>& fallback) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    // keys present in the file but never consumed by the resolver
    std::vector<std::string> unconsumed() const;

private:
    std::map<std::string, std::string> entries_;
    mutable std::map<std::string, bool> consumed_;
};

enum class Mode {
    train_dpd,
    train_vanilla,
    verify_prop1,
    verify_prop2,
    grad_check,
    diagnostics,
};

std::string mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

struct ExperimentConfig {
    Mode mode = Mode::train_dpd;
    std::string env_name = "pendulum";
    std::string family = "off-policy";  // off-policy (ddpg) | on-policy (ppo)
    long steps_per_learner = 60000;     // vanilla baselines run twice this
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    long collect_steps = 50;  // per learner per iteration (on-policy: rollout size)
    long checkpoint_interval = 0;  // iterations between snapshots; 0 = final only
    std::string out_dir = "out";

    DpdConfig dpd;
    DdpgConfig ddpg;
    PpoConfig ppo;

    // verification campaigns
    long verify_instances = 1000;
    int verify_min_states = 4, verify_max_states = 20;
    int verify_min_actions = 2, verify_max_actions = 4;
    double verify_gamma = 0.9;
    uint64_t verify_seed = 20240901;

    long gradcheck_nets = 50;
    double gradcheck_h = 1e-5;
    double gradcheck_tol = 1e-4;
    uint64_t gradcheck_seed = 31415926;

    std::string diag_reference;
    std::vector<std::string> diag_l1, diag_l2;
    long diag_probes = 10;
    long diag_episodes = 5;
    uint64_t diag_seed = 271828;

    static ExperimentConfig resolve(const KeyValueConfig& kv);
    void validate() const;  // throws std::invalid_argument with a full message
    std::string echo() const;
};

}  // namespace dpd
