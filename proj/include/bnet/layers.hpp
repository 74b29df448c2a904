#pragma once

#include "bnet/tensor.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bnet::nn {

/// Backward flavor: Guided masks ReLU gradients by both the forward
/// activation sign and the incoming gradient sign (guided backpropagation).
enum class BackMode { Standard, Guided };

/// A layer is stateless across calls: forward is pure given the parameters,
/// and backward receives the (input, output) pair it needs, so instances are
/// safe to share across threads for reading.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x) const = 0;

    /// dy is dL/d(output); x and y are the tensors seen by forward.
    /// Parameter gradients are accumulated (+=) into pgrads, which is
    /// aligned with params(). Returns dL/d(input).
    virtual Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                            std::span<Tensor> pgrads, BackMode mode) const = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<const Tensor*> params() const { return {}; }
    virtual std::vector<std::string> param_names() const { return {}; }
    virtual std::string kind() const = 0;
};

/// Valid (no padding) 2-D cross-correlation over [C,H,W] inputs.
/// Weights are [out, in, k, k]; stride 1 or 2.
class Conv2d : public Layer {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride);

    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
    std::vector<const Tensor*> params() const override { return {&weights_, &bias_}; }
    std::vector<std::string> param_names() const override { return {"w", "b"}; }
    std::string kind() const override { return "conv"; }

    void init(Rng& rng);
    std::size_t in_channels() const { return in_ch_; }
    std::size_t out_channels() const { return out_ch_; }
    std::size_t kernel() const { return kernel_; }
    std::size_t stride() const { return stride_; }
    Tensor& weights() { return weights_; }
    Tensor& bias() { return bias_; }

private:
    std::size_t in_ch_, out_ch_, kernel_, stride_;
    Tensor weights_, bias_;
};

/// Transposed convolution, kernel 2x2 stride 2: every input pixel scatters
/// value*kernel into its own disjoint 2x2 output block, so spatial extents
/// exactly double. Weights are [out, in, 2, 2].
class Deconv2d : public Layer {
public:
    Deconv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel = 2,
             std::size_t stride = 2);

    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
    std::vector<const Tensor*> params() const override { return {&weights_, &bias_}; }
    std::vector<std::string> param_names() const override { return {"w", "b"}; }
    std::string kind() const override { return "deconv"; }

    void init(Rng& rng);
    Tensor& weights() { return weights_; }
    Tensor& bias() { return bias_; }

private:
    std::size_t in_ch_, out_ch_;
    Tensor weights_, bias_;
};

/// 2x2 average pooling with stride 1; gradient spreads 1/4 per contributor.
class AvgPool2d : public Layer {
public:
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::string kind() const override { return "avgpool"; }
};

/// Per-channel spatial mean: [C,H,W] -> [C].
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::string kind() const override { return "gap"; }
};

class Dense : public Layer {
public:
    Dense(std::size_t in_dim, std::size_t out_dim);

    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
    std::vector<const Tensor*> params() const override { return {&weights_, &bias_}; }
    std::vector<std::string> param_names() const override { return {"w", "b"}; }
    std::string kind() const override { return "dense"; }

    void init(Rng& rng);
    Tensor& weights() { return weights_; }
    Tensor& bias() { return bias_; }

private:
    std::size_t in_dim_, out_dim_;
    Tensor weights_, bias_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::string kind() const override { return "relu"; }
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::string kind() const override { return "sigmoid"; }
};

/// Numerically stable softmax (max subtraction); output sums to 1.
class Softmax : public Layer {
public:
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::string kind() const override { return "softmax"; }
};

/// Center crop of [C,H,W] to fixed target extents; backward zero-pads.
class CenterCrop : public Layer {
public:
    CenterCrop(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& dy, const Tensor& x, const Tensor& y,
                    std::span<Tensor> pgrads, BackMode mode) const override;
    std::string kind() const override { return "crop"; }

private:
    std::size_t rows_, cols_;
};

/// Per-parameter gradient accumulators, aligned with a parameter list.
struct Grads {
    std::vector<Tensor> g;

    static Grads like(const std::vector<Tensor*>& params);
    static Grads like(const std::vector<const Tensor*>& params);
    void zero();
    void add(const Grads& other);
    void scale(double s);
};

/// Ordered layer container. forward() with a trace records every
/// intermediate value (trace[i] is the input of layer i, trace.back() the
/// final output) so backward can run without per-layer mutable caches.
class Sequential {
public:
    Layer& add(std::unique_ptr<Layer> layer, const std::string& name);

    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }
    const std::string& layer_name(std::size_t i) const { return names_[i]; }

    Tensor forward(const Tensor& x) const;
    Tensor forward(const Tensor& x, std::vector<Tensor>& trace) const;

    /// Backward from dL/d(output) through all layers; returns dL/d(input).
    Tensor backward(const Tensor& dy, const std::vector<Tensor>& trace, Grads& grads,
                    BackMode mode = BackMode::Standard) const;

    /// Backward stopping at trace position `stop`: processes layers
    /// L-1 .. stop and returns dL/d(trace[stop]).
    Tensor backward_to(std::size_t stop, const Tensor& dy, const std::vector<Tensor>& trace,
                       Grads& grads, BackMode mode = BackMode::Standard) const;

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    /// "<layername>.<paramname>" in layer order; keys for checkpoints.
    std::vector<std::string> param_keys() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<std::string> names_;
};

// ---- Losses ------------------------------------------------------------

/// Sum of absolute deviations plus sum of squared deviations.
double reconstruction_loss(const Tensor& x, const Tensor& z);
/// dL/dz; the |.| subgradient at 0 is taken as 0.
Tensor reconstruction_loss_grad(const Tensor& x, const Tensor& z);

inline constexpr double kProbClamp = 1e-12;

/// Binary cross-entropy of a single probability against target in {0,1}.
double binary_cross_entropy(double target, double pred);
double binary_cross_entropy_grad(double target, double pred);

/// Multiclass cross-entropy of a probability vector against a class index.
double cross_entropy(std::size_t target, const Tensor& probs);
Tensor cross_entropy_grad(std::size_t target, const Tensor& probs);

// ---- Optimizer ----------------------------------------------------------

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t t = 0;
    std::vector<std::vector<double>> m, v;

    static AdamState like(const std::vector<Tensor*>& params);
};

/// One bias-corrected Adam update; grads must be finite and shape-aligned.
void adam_step(std::vector<Tensor*>& params, const Grads& grads, AdamState& state);

} // namespace bnet::nn
