#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "dpd/rng.hpp"

namespace dpd {

enum class HiddenActivation { relu, tanh };

// identity leaves the last affine output as is; bounded squashes it into
// [out_low, out_high] elementwise via tanh.
enum class OutputActivation { identity, bounded };

struct GradientSet;

// Fixed-topology MLP over doubles. Parameters are plain public tensors; the
// optimizer and the snapshot code address them directly. Batches are stored
// column-wise (one sample per column).
class Network {
public:
    Network(std::vector<int> layer_sizes, HiddenActivation hidden, OutputActivation output,
            Eigen::VectorXd out_low = {}, Eigen::VectorXd out_high = {});

    static Network random_init(std::vector<int> layer_sizes, HiddenActivation hidden,
                               OutputActivation output, Rng& rng,
                               double final_layer_scale = 1.0, Eigen::VectorXd out_low = {},
                               Eigen::VectorXd out_high = {});

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int n_layers() const { return static_cast<int>(weights.size()); }
    long parameter_count() const;

    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

    // Exact gradients of the scalar loss whose per-sample output gradient is
    // `upstream` (column b holds dL/dy_b). Batch scaling is the caller's:
    // passing the gradient of a batch-mean loss yields batch-mean parameter
    // gradients. When `input_grad` is non-null it receives dL/dx_b per column.
    GradientSet backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& upstream,
                         Eigen::MatrixXd* input_grad = nullptr) const;

    // flat row-major parameter vector, weights then bias per layer
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& values);

    bool same_shape(const Network& other) const;

    std::vector<int> layer_sizes;
    HiddenActivation hidden = HiddenActivation::relu;
    OutputActivation output = OutputActivation::identity;
    Eigen::VectorXd out_low, out_high;
    std::vector<Eigen::MatrixXd> weights;  // [layer](out, in)
    std::vector<Eigen::VectorXd> biases;   // [layer](out)
};

struct GradientSet {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;

    static GradientSet zeros_like(const Network& net);
    bool all_finite() const;
    double squared_norm() const;
    void scale(double factor);
    void accumulate(const GradientSet& other, double factor = 1.0);
};

enum class OptimizerKind { sgd, adam };

// Plain SGD or Adam with per-parameter moment state. step() skips the update
// and reports false when the incoming gradients are not finite.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, double beta1 = 0.9,
              double beta2 = 0.999, double epsilon = 1e-8);

    bool step(Network& net, const GradientSet& grads);

    double learning_rate() const { return lr_; }
    long steps_taken() const { return t_; }
    long skipped_updates() const { return skipped_; }

    std::vector<double> serialize_state() const;
    void restore_state(const std::vector<double>& state);

private:
    void ensure_state(const Network& net);

    OptimizerKind kind_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    long skipped_ = 0;
    GradientSet m_, v_;
    bool initialized_ = false;
};

// Loss over a batch of network outputs together with its analytic gradient,
// the fixture the finite-difference checker perturbs against.
struct LossSpec {
    std::function<double(const Eigen::MatrixXd& outputs)> value;
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& outputs)> gradient;
};

// Max relative error |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
// over a random subsample of parameters, using central differences with step h.
double grad_check(const Network& net, const Eigen::MatrixXd& inputs, const LossSpec& loss,
                  double h, int n_probes, Rng& rng);

}  // namespace dpd
