#include "dpd/net.hpp"

#include <cmath>
#include <stdexcept>

namespace dpd {

Network::Network(std::vector<int> sizes, HiddenActivation hidden_act, OutputActivation output_act,
                 Eigen::VectorXd low, Eigen::VectorXd high)
    : layer_sizes(std::move(sizes)),
      hidden(hidden_act),
      output(output_act),
      out_low(std::move(low)),
      out_high(std::move(high)) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("Network: needs >= 2 layers");
    for (size_t i = 1; i < layer_sizes.size(); ++i)
        if (layer_sizes[i] <= 0 || layer_sizes[i - 1] < 0)
            throw std::invalid_argument("Network: bad layer size");
    if (output == OutputActivation::bounded) {
        if (out_low.size() != layer_sizes.back() || out_high.size() != layer_sizes.back())
            throw std::invalid_argument("Network: bounded output needs matching range vectors");
        if (!((out_low.array() < out_high.array()).all()))
            throw std::invalid_argument("Network: out_low must be below out_high");
    }
    for (size_t i = 1; i < layer_sizes.size(); ++i) {
        weights.emplace_back(Eigen::MatrixXd::Zero(layer_sizes[i], layer_sizes[i - 1]));
        biases.emplace_back(Eigen::VectorXd::Zero(layer_sizes[i]));
    }
}

Network Network::random_init(std::vector<int> sizes, HiddenActivation hidden,
                             OutputActivation output, Rng& rng, double final_layer_scale,
                             Eigen::VectorXd low, Eigen::VectorXd high) {
    Network net(std::move(sizes), hidden, output, std::move(low), std::move(high));
    for (int l = 0; l < net.n_layers(); ++l) {
        const int fan_in = static_cast<int>(net.weights[l].cols());
        const double bound = fan_in > 0 ? 1.0 / std::sqrt(fan_in) : 0.05;
        const double scale = l == net.n_layers() - 1 ? final_layer_scale : 1.0;
        for (long i = 0; i < net.weights[l].size(); ++i)
            net.weights[l].data()[i] = scale * rng.uniform(-bound, bound);
        for (long i = 0; i < net.biases[l].size(); ++i)
            net.biases[l][i] = scale * rng.uniform(-bound, bound);
    }
    return net;
}

long Network::parameter_count() const {
    long n = 0;
    for (int l = 0; l < n_layers(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

namespace {

inline void apply_hidden(HiddenActivation act, Eigen::MatrixXd& z) {
    if (act == HiddenActivation::relu)
        z = z.cwiseMax(0.0);
    else
        z = z.array().tanh();
}

}  // namespace

Eigen::MatrixXd Network::forward_batch(const Eigen::MatrixXd& inputs) const {
    if (inputs.rows() != input_dim())
        throw std::invalid_argument("Network::forward: input dimension mismatch");
    Eigen::MatrixXd h = inputs;
    for (int l = 0; l < n_layers(); ++l) {
        Eigen::MatrixXd z = (weights[l] * h).colwise() + biases[l];
        if (l + 1 < n_layers()) {
            apply_hidden(hidden, z);
        } else if (output == OutputActivation::bounded) {
            // low + (tanh(z) + 1)/2 * (high - low), columnwise
            Eigen::ArrayXXd t = z.array().tanh();
            z = (((t + 1.0) * 0.5).colwise() * (out_high - out_low).array()).colwise() +
                out_low.array();
        }
        h = std::move(z);
    }
    return h;
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& input) const {
    return forward_batch(input).col(0);
}

GradientSet Network::backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& upstream,
                              Eigen::MatrixXd* input_grad) const {
    if (inputs.rows() != input_dim())
        throw std::invalid_argument("Network::backward: input dimension mismatch");
    if (upstream.rows() != output_dim() || upstream.cols() != inputs.cols())
        throw std::invalid_argument("Network::backward: upstream shape mismatch");

    // forward pass keeping pre-activations
    std::vector<Eigen::MatrixXd> acts;  // post-activation per layer, acts[0] = input
    std::vector<Eigen::MatrixXd> zs;    // pre-activation per layer
    acts.reserve(n_layers() + 1);
    zs.reserve(n_layers());
    acts.push_back(inputs);
    for (int l = 0; l < n_layers(); ++l) {
        zs.emplace_back((weights[l] * acts.back()).colwise() + biases[l]);
        Eigen::MatrixXd a = zs.back();
        if (l + 1 < n_layers()) {
            apply_hidden(hidden, a);
        } else if (output == OutputActivation::bounded) {
            Eigen::ArrayXXd t = a.array().tanh();
            a = (((t + 1.0) * 0.5).colwise() * (out_high - out_low).array()).colwise() +
                out_low.array();
        }
        acts.push_back(std::move(a));
    }

    GradientSet grads = GradientSet::zeros_like(*this);
    Eigen::MatrixXd delta = upstream;  // dL/d(post-activation of current layer)
    for (int l = n_layers() - 1; l >= 0; --l) {
        // pull back through the activation to dL/dz
        if (l == n_layers() - 1) {
            if (output == OutputActivation::bounded) {
                Eigen::ArrayXXd t = zs[l].array().tanh();
                delta.array() *= ((1.0 - t.square()) * 0.5).colwise() *
                                 (out_high - out_low).array();
            }
        } else {
            if (hidden == HiddenActivation::relu) {
                delta.array() *= (zs[l].array() > 0.0).cast<double>();
            } else {
                delta.array() *= 1.0 - zs[l].array().tanh().square();
            }
        }
        grads.w[l] = delta * acts[l].transpose();
        grads.b[l] = delta.rowwise().sum();
        if (l > 0 || input_grad != nullptr) {
            Eigen::MatrixXd next_delta = weights[l].transpose() * delta;
            if (l == 0) {
                *input_grad = std::move(next_delta);
            } else {
                delta = std::move(next_delta);
            }
        }
    }
    return grads;
}

std::vector<double> Network::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (int l = 0; l < n_layers(); ++l) {
        for (long r = 0; r < weights[l].rows(); ++r)
            for (long c = 0; c < weights[l].cols(); ++c) out.push_back(weights[l](r, c));
        for (long i = 0; i < biases[l].size(); ++i) out.push_back(biases[l][i]);
    }
    return out;
}

void Network::unflatten(const std::vector<double>& values) {
    if (static_cast<long>(values.size()) != parameter_count())
        throw std::invalid_argument("Network::unflatten: size mismatch");
    size_t k = 0;
    for (int l = 0; l < n_layers(); ++l) {
        for (long r = 0; r < weights[l].rows(); ++r)
            for (long c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = values[k++];
        for (long i = 0; i < biases[l].size(); ++i) biases[l][i] = values[k++];
    }
}

bool Network::same_shape(const Network& other) const {
    return layer_sizes == other.layer_sizes;
}

GradientSet GradientSet::zeros_like(const Network& net) {
    GradientSet g;
    for (int l = 0; l < net.n_layers(); ++l) {
        g.w.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.b.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
    return g;
}

bool GradientSet::all_finite() const {
    for (const auto& m : w)
        if (!m.allFinite()) return false;
    for (const auto& v : b)
        if (!v.allFinite()) return false;
    return true;
}

double GradientSet::squared_norm() const {
    double s = 0.0;
    for (const auto& m : w) s += m.squaredNorm();
    for (const auto& v : b) s += v.squaredNorm();
    return s;
}

void GradientSet::scale(double factor) {
    for (auto& m : w) m *= factor;
    for (auto& v : b) v *= factor;
}

void GradientSet::accumulate(const GradientSet& other, double factor) {
    for (size_t l = 0; l < w.size(); ++l) {
        w[l] += factor * other.w[l];
        b[l] += factor * other.b[l];
    }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double beta1, double beta2,
                     double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    if (!(lr_ > 0.0)) throw std::invalid_argument("Optimizer: learning rate must be positive");
}

void Optimizer::ensure_state(const Network& net) {
    if (initialized_) return;
    m_ = GradientSet::zeros_like(net);
    v_ = GradientSet::zeros_like(net);
    initialized_ = true;
}

bool Optimizer::step(Network& net, const GradientSet& grads) {
    if (grads.w.size() != net.weights.size())
        throw std::invalid_argument("Optimizer::step: gradient/network shape mismatch");
    if (!grads.all_finite()) {
        ++skipped_;
        return false;
    }
    if (kind_ == OptimizerKind::sgd) {
        ++t_;
        for (int l = 0; l < net.n_layers(); ++l) {
            net.weights[l] -= lr_ * grads.w[l];
            net.biases[l] -= lr_ * grads.b[l];
        }
        return true;
    }
    ensure_state(net);
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (int l = 0; l < net.n_layers(); ++l) {
        m_.w[l] = beta1_ * m_.w[l] + (1.0 - beta1_) * grads.w[l];
        m_.b[l] = beta1_ * m_.b[l] + (1.0 - beta1_) * grads.b[l];
        v_.w[l] = beta2_ * v_.w[l] + (1.0 - beta2_) * grads.w[l].array().square().matrix();
        v_.b[l] = beta2_ * v_.b[l] + (1.0 - beta2_) * grads.b[l].array().square().matrix();
        net.weights[l].array() -=
            lr_ * (m_.w[l].array() / bc1) / ((v_.w[l].array() / bc2).sqrt() + eps_);
        net.biases[l].array() -=
            lr_ * (m_.b[l].array() / bc1) / ((v_.b[l].array() / bc2).sqrt() + eps_);
    }
    return true;
}

std::vector<double> Optimizer::serialize_state() const {
    std::vector<double> out;
    out.push_back(static_cast<double>(t_));
    out.push_back(static_cast<double>(skipped_));
    auto push_set = [&out](const GradientSet& g) {
        for (const auto& m : g.w)
            for (long i = 0; i < m.size(); ++i) out.push_back(m.data()[i]);
        for (const auto& v : g.b)
            for (long i = 0; i < v.size(); ++i) out.push_back(v.data()[i]);
    };
    if (initialized_) {
        push_set(m_);
        push_set(v_);
    }
    return out;
}

void Optimizer::restore_state(const std::vector<double>& state) {
    if (state.size() < 2) throw std::invalid_argument("Optimizer::restore_state: truncated");
    t_ = static_cast<long>(state[0]);
    skipped_ = static_cast<long>(state[1]);
    if (state.size() == 2) {
        initialized_ = false;
        return;
    }
    if (!initialized_)
        throw std::invalid_argument("Optimizer::restore_state: moment shapes unknown");
    size_t k = 2;
    auto pull_set = [&state, &k](GradientSet& g) {
        for (auto& m : g.w)
            for (long i = 0; i < m.size(); ++i) m.data()[i] = state.at(k++);
        for (auto& v : g.b)
            for (long i = 0; i < v.size(); ++i) v.data()[i] = state.at(k++);
    };
    pull_set(m_);
    pull_set(v_);
    if (k != state.size()) throw std::invalid_argument("Optimizer::restore_state: size mismatch");
}

namespace {

// addresses parameter `flat_index` inside the layer tensors, data() order
template <typename Net>
auto& param_at(Net& net, long flat_index) {
    for (int l = 0; l < net.n_layers(); ++l) {
        if (flat_index < net.weights[l].size()) return net.weights[l].data()[flat_index];
        flat_index -= net.weights[l].size();
        if (flat_index < net.biases[l].size()) return net.biases[l][flat_index];
        flat_index -= net.biases[l].size();
    }
    throw std::out_of_range("parameter index");
}

double grad_at(const GradientSet& g, long flat_index) {
    for (size_t l = 0; l < g.w.size(); ++l) {
        if (flat_index < g.w[l].size()) return g.w[l].data()[flat_index];
        flat_index -= g.w[l].size();
        if (flat_index < g.b[l].size()) return g.b[l][flat_index];
        flat_index -= g.b[l].size();
    }
    throw std::out_of_range("gradient index");
}

}  // namespace

double grad_check(const Network& net, const Eigen::MatrixXd& inputs, const LossSpec& loss,
                  double h, int n_probes, Rng& rng) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");

    const Eigen::MatrixXd outputs = net.forward_batch(inputs);
    const GradientSet analytic = net.backward(inputs, loss.gradient(outputs));

    Network probe = net;  // perturbed copy
    const long n_params = net.parameter_count();
    const long probes = std::min<long>(n_probes, n_params);

    double max_rel_err = 0.0;
    for (long i = 0; i < probes; ++i) {
        const long idx = n_params <= n_probes ? i : static_cast<long>(rng.integer(n_params));
        double& p = param_at(probe, idx);
        const double saved = p;
        p = saved + h;
        const double up = loss.value(probe.forward_batch(inputs));
        p = saved - h;
        const double down = loss.value(probe.forward_batch(inputs));
        p = saved;

        const double numeric = (up - down) / (2.0 * h);
        const double a = grad_at(analytic, idx);
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        max_rel_err = std::max(max_rel_err, rel);
    }
    return max_rel_err;
}

}  // namespace dpd
