#include "dpd/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpd {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
        kv.entries_[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    consumed_[key] = true;
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_real(const std::string& key, double fallback) const {
    consumed_[key] = true;
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size())
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + it->second);
    return v;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
    consumed_[key] = true;
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    size_t used = 0;
    const long v = std::stol(it->second, &used);
    if (used != it->second.size())
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
    return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    consumed_[key] = true;
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + it->second);
}

std::vector<long> KeyValueConfig::get_int_list(const std::string& key,
                                               const std::vector<long>& fallback) const {
    consumed_[key] = true;
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<long> out;
    for (const auto& tok : split(it->second, ',')) {
        size_t used = 0;
        out.push_back(std::stol(tok, &used));
        if (used != tok.size())
            throw std::invalid_argument("config: key '" + key + "' has a bad entry: " + tok);
    }
    return out;
}

std::vector<std::string> KeyValueConfig::get_string_list(const std::string& key) const {
    consumed_[key] = true;
    auto it = entries_.find(key);
    if (it == entries_.end()) return {};
    return split(it->second, ',');
}

std::vector<std::string> KeyValueConfig::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : entries_)
        if (!consumed_.count(k)) out.push_back(k);
    return out;
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::train_dpd: return "train-dpd";
        case Mode::train_vanilla: return "train-vanilla";
        case Mode::verify_prop1: return "verify-prop1";
        case Mode::verify_prop2: return "verify-prop2";
        case Mode::grad_check: return "grad-check";
        case Mode::diagnostics: return "diagnostics";
    }
    throw std::invalid_argument("mode_name: bad mode");
}

Mode mode_from_name(const std::string& name) {
    for (Mode m : {Mode::train_dpd, Mode::train_vanilla, Mode::verify_prop1, Mode::verify_prop2,
                   Mode::grad_check, Mode::diagnostics})
        if (mode_name(m) == name) return m;
    throw std::invalid_argument("config: unrecognized mode '" + name + "'");
}

namespace {

std::vector<int> to_int_sizes(const std::vector<long>& v) {
    return std::vector<int>(v.begin(), v.end());
}

}  // namespace

ExperimentConfig ExperimentConfig::resolve(const KeyValueConfig& kv) {
    ExperimentConfig cfg;
    cfg.mode = mode_from_name(kv.get_string("mode", mode_name(cfg.mode)));
    cfg.env_name = kv.get_string("env.name", cfg.env_name);
    cfg.family = kv.get_string("agent.family", cfg.family);
    cfg.steps_per_learner = kv.get_int("run.steps_per_learner", cfg.steps_per_learner);
    const auto seeds = kv.get_int_list("run.seeds", {1, 2, 3, 4, 5});
    cfg.seeds.assign(seeds.begin(), seeds.end());
    cfg.collect_steps = kv.get_int("run.collect_steps", cfg.collect_steps);
    cfg.checkpoint_interval = kv.get_int("run.checkpoint_interval", cfg.checkpoint_interval);
    cfg.out_dir = kv.get_string("run.out_dir", cfg.out_dir);

    cfg.dpd.alpha = kv.get_real("dpd.alpha", cfg.dpd.alpha);
    cfg.dpd.distill_window = static_cast<int>(kv.get_int("dpd.window", cfg.dpd.distill_window));
    cfg.dpd.distill_batch = static_cast<int>(kv.get_int("dpd.batch", cfg.dpd.distill_batch));
    cfg.dpd.distill_lr = kv.get_real("dpd.lr", cfg.dpd.distill_lr);
    cfg.dpd.distill_updates_per_iter =
        static_cast<int>(kv.get_int("dpd.updates_per_iter", cfg.dpd.distill_updates_per_iter));
    cfg.dpd.weight_clip_min = kv.get_real("dpd.weight_clip_min", cfg.dpd.weight_clip_min);
    cfg.dpd.weight_clip_max = kv.get_real("dpd.weight_clip_max", cfg.dpd.weight_clip_max);
    cfg.dpd.xi_normalization = kv.get_bool("dpd.normalize_xi", cfg.dpd.xi_normalization);
    const std::string metric = kv.get_string("dpd.distance", "squared_error");
    if (metric == "squared_error")
        cfg.dpd.distance = DistanceMetric::squared_error;
    else if (metric == "total_variation")
        cfg.dpd.distance = DistanceMetric::total_variation;
    else
        throw std::invalid_argument("config: dpd.distance must be squared_error|total_variation");

    cfg.ddpg.actor_hidden = to_int_sizes(kv.get_int_list("ddpg.actor_hidden", {64, 64}));
    cfg.ddpg.critic_hidden = to_int_sizes(kv.get_int_list("ddpg.critic_hidden", {64, 64, 64}));
    cfg.ddpg.actor_lr = kv.get_real("ddpg.actor_lr", cfg.ddpg.actor_lr);
    cfg.ddpg.critic_lr = kv.get_real("ddpg.critic_lr", cfg.ddpg.critic_lr);
    cfg.ddpg.gamma = kv.get_real("ddpg.gamma", cfg.ddpg.gamma);
    cfg.ddpg.tau = kv.get_real("ddpg.tau", cfg.ddpg.tau);
    cfg.ddpg.buffer_capacity =
        static_cast<size_t>(kv.get_int("ddpg.buffer_capacity", cfg.ddpg.buffer_capacity));
    cfg.ddpg.batch_size = static_cast<int>(kv.get_int("ddpg.batch_size", cfg.ddpg.batch_size));
    cfg.ddpg.noise_std_frac = kv.get_real("ddpg.noise_std_frac", cfg.ddpg.noise_std_frac);
    cfg.ddpg.warmup_steps = static_cast<int>(kv.get_int("ddpg.warmup_steps", cfg.ddpg.warmup_steps));
    cfg.ddpg.update_every = static_cast<int>(kv.get_int("ddpg.update_every", cfg.ddpg.update_every));

    cfg.ppo.policy_hidden = to_int_sizes(kv.get_int_list("ppo.policy_hidden", {64, 64}));
    cfg.ppo.value_hidden = to_int_sizes(kv.get_int_list("ppo.value_hidden", {64, 64, 64}));
    cfg.ppo.policy_lr = kv.get_real("ppo.policy_lr", cfg.ppo.policy_lr);
    cfg.ppo.value_lr = kv.get_real("ppo.value_lr", cfg.ppo.value_lr);
    cfg.ppo.gamma = kv.get_real("ppo.gamma", cfg.ppo.gamma);
    cfg.ppo.gae_lambda = kv.get_real("ppo.gae_lambda", cfg.ppo.gae_lambda);
    cfg.ppo.clip = kv.get_real("ppo.clip", cfg.ppo.clip);
    cfg.ppo.epochs = static_cast<int>(kv.get_int("ppo.epochs", cfg.ppo.epochs));
    cfg.ppo.minibatch = static_cast<int>(kv.get_int("ppo.minibatch", cfg.ppo.minibatch));
    cfg.ppo.rollout_steps = static_cast<int>(kv.get_int("ppo.rollout_steps", cfg.ppo.rollout_steps));

    cfg.verify_instances = kv.get_int("verify.instances", cfg.verify_instances);
    cfg.verify_min_states = static_cast<int>(kv.get_int("verify.min_states", cfg.verify_min_states));
    cfg.verify_max_states = static_cast<int>(kv.get_int("verify.max_states", cfg.verify_max_states));
    cfg.verify_min_actions =
        static_cast<int>(kv.get_int("verify.min_actions", cfg.verify_min_actions));
    cfg.verify_max_actions =
        static_cast<int>(kv.get_int("verify.max_actions", cfg.verify_max_actions));
    cfg.verify_gamma = kv.get_real("verify.gamma", cfg.verify_gamma);
    cfg.verify_seed = static_cast<uint64_t>(kv.get_int("verify.seed", cfg.verify_seed));

    cfg.gradcheck_nets = kv.get_int("gradcheck.nets", cfg.gradcheck_nets);
    cfg.gradcheck_h = kv.get_real("gradcheck.h", cfg.gradcheck_h);
    cfg.gradcheck_tol = kv.get_real("gradcheck.tol", cfg.gradcheck_tol);
    cfg.gradcheck_seed = static_cast<uint64_t>(kv.get_int("gradcheck.seed", cfg.gradcheck_seed));

    cfg.diag_reference = kv.get_string("diagnostics.reference", cfg.diag_reference);
    cfg.diag_l1 = kv.get_string_list("diagnostics.l1");
    cfg.diag_l2 = kv.get_string_list("diagnostics.l2");
    cfg.diag_probes = kv.get_int("diagnostics.probes", cfg.diag_probes);
    cfg.diag_episodes = kv.get_int("diagnostics.episodes", cfg.diag_episodes);
    cfg.diag_seed = static_cast<uint64_t>(kv.get_int("diagnostics.seed", cfg.diag_seed));

    const auto stray = kv.unconsumed();
    if (!stray.empty()) {
        std::string msg = "config: unrecognized keys:";
        for (const auto& k : stray) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    if (steps_per_learner <= 0) errors.push_back("run.steps_per_learner must be > 0");
    if (seeds.empty()) errors.push_back("run.seeds must be nonempty");
    if (collect_steps <= 0) errors.push_back("run.collect_steps must be > 0");
    if (checkpoint_interval < 0) errors.push_back("run.checkpoint_interval must be >= 0");
    if (family != "off-policy" && family != "on-policy")
        errors.push_back("agent.family must be off-policy|on-policy");
    if (env_name != "pendulum" && env_name != "pointmass")
        errors.push_back("env.name must be pendulum|pointmass");
    if (verify_instances <= 0) errors.push_back("verify.instances must be > 0");
    if (verify_min_states < 1 || verify_max_states < verify_min_states)
        errors.push_back("verify state-count range is malformed");
    if (verify_min_actions < 1 || verify_max_actions < verify_min_actions)
        errors.push_back("verify action-count range is malformed");
    if (!(verify_gamma > 0 && verify_gamma < 1)) errors.push_back("verify.gamma must be in (0,1)");
    if (gradcheck_nets <= 0) errors.push_back("gradcheck.nets must be > 0");
    if (gradcheck_h <= 0) errors.push_back("gradcheck.h must be > 0");
    if (diag_probes <= 0) errors.push_back("diagnostics.probes must be > 0");
    if (mode == Mode::diagnostics) {
        if (diag_reference.empty()) errors.push_back("diagnostics.reference is required");
        if (diag_l1.empty() || diag_l1.size() != diag_l2.size())
            errors.push_back("diagnostics needs equal-length nonempty checkpoint lists");
    }
    try {
        dpd.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    try {
        ddpg.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    try {
        ppo.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
}

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, std::string>)
            out += v[i];
        else
            out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

std::string ExperimentConfig::echo() const {
    std::map<std::string, std::string> kv;
    kv["mode"] = mode_name(mode);
    kv["env.name"] = env_name;
    kv["agent.family"] = family;
    kv["run.steps_per_learner"] = std::to_string(steps_per_learner);
    kv["run.seeds"] = join(std::vector<long>(seeds.begin(), seeds.end()));
    kv["run.collect_steps"] = std::to_string(collect_steps);
    kv["run.checkpoint_interval"] = std::to_string(checkpoint_interval);
    kv["run.out_dir"] = out_dir;
    kv["dpd.alpha"] = fmt_real(dpd.alpha);
    kv["dpd.window"] = std::to_string(dpd.distill_window);
    kv["dpd.batch"] = std::to_string(dpd.distill_batch);
    kv["dpd.lr"] = fmt_real(dpd.distill_lr);
    kv["dpd.updates_per_iter"] = std::to_string(dpd.distill_updates_per_iter);
    kv["dpd.weight_clip_min"] = fmt_real(dpd.weight_clip_min);
    kv["dpd.weight_clip_max"] = fmt_real(dpd.weight_clip_max);
    kv["dpd.normalize_xi"] = dpd.xi_normalization ? "true" : "false";
    kv["dpd.distance"] =
        dpd.distance == DistanceMetric::squared_error ? "squared_error" : "total_variation";
    kv["ddpg.actor_hidden"] = join(std::vector<long>(ddpg.actor_hidden.begin(), ddpg.actor_hidden.end()));
    kv["ddpg.critic_hidden"] =
        join(std::vector<long>(ddpg.critic_hidden.begin(), ddpg.critic_hidden.end()));
    kv["ddpg.actor_lr"] = fmt_real(ddpg.actor_lr);
    kv["ddpg.critic_lr"] = fmt_real(ddpg.critic_lr);
    kv["ddpg.gamma"] = fmt_real(ddpg.gamma);
    kv["ddpg.tau"] = fmt_real(ddpg.tau);
    kv["ddpg.buffer_capacity"] = std::to_string(ddpg.buffer_capacity);
    kv["ddpg.batch_size"] = std::to_string(ddpg.batch_size);
    kv["ddpg.noise_std_frac"] = fmt_real(ddpg.noise_std_frac);
    kv["ddpg.warmup_steps"] = std::to_string(ddpg.warmup_steps);
    kv["ddpg.update_every"] = std::to_string(ddpg.update_every);
    kv["ppo.policy_hidden"] =
        join(std::vector<long>(ppo.policy_hidden.begin(), ppo.policy_hidden.end()));
    kv["ppo.value_hidden"] =
        join(std::vector<long>(ppo.value_hidden.begin(), ppo.value_hidden.end()));
    kv["ppo.policy_lr"] = fmt_real(ppo.policy_lr);
    kv["ppo.value_lr"] = fmt_real(ppo.value_lr);
    kv["ppo.gamma"] = fmt_real(ppo.gamma);
    kv["ppo.gae_lambda"] = fmt_real(ppo.gae_lambda);
    kv["ppo.clip"] = fmt_real(ppo.clip);
    kv["ppo.epochs"] = std::to_string(ppo.epochs);
    kv["ppo.minibatch"] = std::to_string(ppo.minibatch);
    kv["ppo.rollout_steps"] = std::to_string(ppo.rollout_steps);
    kv["verify.instances"] = std::to_string(verify_instances);
    kv["verify.min_states"] = std::to_string(verify_min_states);
    kv["verify.max_states"] = std::to_string(verify_max_states);
    kv["verify.min_actions"] = std::to_string(verify_min_actions);
    kv["verify.max_actions"] = std::to_string(verify_max_actions);
    kv["verify.gamma"] = fmt_real(verify_gamma);
    kv["verify.seed"] = std::to_string(verify_seed);
    kv["gradcheck.nets"] = std::to_string(gradcheck_nets);
    kv["gradcheck.h"] = fmt_real(gradcheck_h);
    kv["gradcheck.tol"] = fmt_real(gradcheck_tol);
    kv["gradcheck.seed"] = std::to_string(gradcheck_seed);
    kv["diagnostics.reference"] = diag_reference;
    kv["diagnostics.l1"] = join(diag_l1);
    kv["diagnostics.l2"] = join(diag_l2);
    kv["diagnostics.probes"] = std::to_string(diag_probes);
    kv["diagnostics.episodes"] = std::to_string(diag_episodes);
    kv["diagnostics.seed"] = std::to_string(diag_seed);

    std::string out = "# resolved configuration\n";
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

}  // namespace dpd
