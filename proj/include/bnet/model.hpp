#pragma once

#include "bnet/checkpoint.hpp"
#include "bnet/layers.hpp"
#include "bnet/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bnet::model {

struct BurnNetConfig {
    std::size_t in_channels = 1;
    std::size_t rows = 22; // depth
    std::size_t cols = 34; // lateral
    std::array<std::size_t, 4> encoder_channels = {16, 32, 64, 128};
    std::size_t bottleneck_channels = 64;
    std::array<std::size_t, 4> decoder_channels = {128, 64, 32, 16};
    std::size_t epochs = 2000;
    std::size_t batch = 32;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class TaskMode { Binary, Multiclass4 };

const char* task_name(TaskMode m);
TaskMode task_from_name(const std::string& s);

/// Spatial extents after the four conv+pool encoder blocks (each subtracts
/// one for the 2x2 stride-1 conv and one for the 2x2 stride-1 pool).
std::pair<std::size_t, std::size_t> encoder_spatial(std::size_t rows, std::size_t cols);

/// Source encoder-decoder: the encoder maps burned images to a feature
/// embedding, the decoder reconstructs unburned-looking images of exactly
/// the input extents (final stride-2 deconv overshoots, then center crop).
struct SourceModel {
    BurnNetConfig cfg;
    nn::Sequential encoder;
    nn::Sequential decoder;

    Tensor reconstruct(const Tensor& x) const;
    std::vector<Tensor*> params();
    std::size_t param_count() const;

    Checkpoint to_checkpoint() const;
    void load_params(const Checkpoint& ck);
};

SourceModel build_source(const BurnNetConfig& cfg);

/// Encoder + global average pooling + dense head; the network emits logits
/// (1 for binary, 4 for multiclass). Sigmoid/softmax live in predict/loss.
struct TargetClassifier {
    BurnNetConfig cfg;
    TaskMode mode = TaskMode::Binary;
    nn::Sequential net;
    std::size_t encoder_layers = 0; // layers [0, encoder_layers) form the encoder
    bool freeze_encoder = false;

    Tensor logits(const Tensor& x) const { return net.forward(x); }
    std::size_t head_width() const { return mode == TaskMode::Binary ? 1 : 4; }
    std::vector<Tensor*> params() { return net.params(); }
    std::size_t param_count() const;

    Checkpoint to_checkpoint() const;
    void load_params(const Checkpoint& ck);
};

/// Cold-start classifier with freshly initialized encoder and head.
TargetClassifier build_classifier(const BurnNetConfig& cfg, TaskMode mode);

/// Discards the decoder, copies all encoder weights (which stay trainable),
/// and attaches a freshly initialized head. The head draws from head_seed
/// when given (fold-level reseeding), else from the source config seed.
TargetClassifier transfer_to_classifier(const SourceModel& source, TaskMode mode,
                                        std::optional<std::uint64_t> head_seed = {});

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Unpaired reconstruction training: each epoch pairs every burned image
/// with an unburned target drawn uniformly under an epoch-derived stream,
/// then runs minibatch Adam on the l1+l2 reconstruction loss. Returns the
/// per-epoch mean loss trace.
std::vector<double> train_source(SourceModel& m, std::span<const Tensor> unburned,
                                 std::span<const Tensor> burned, std::size_t epochs,
                                 std::size_t batch, std::uint64_t seed,
                                 const EpochCallback& on_epoch = {});

/// Labeled sample for classifier training; label is 0/1 for binary
/// (1 = DP) and 0..3 for multiclass (SP, DP, LFT, DFT).
struct LabeledTensor {
    Tensor image;
    std::size_t label;
};

/// Minibatch Adam on cross-entropy. Horizontal-flip copies of the provided
/// (training) samples are added internally when augment_flips is set.
std::vector<double> train_classifier(TargetClassifier& clf,
                                     std::span<const LabeledTensor> train, std::size_t epochs,
                                     std::size_t batch, std::uint64_t seed,
                                     bool augment_flips = true,
                                     const EpochCallback& on_epoch = {});

struct Prediction {
    std::size_t label = 0;      // binary: 1 = DP, 0 = rest; multiclass: 0..3
    double confidence = 0.0;    // probability of the predicted label
    double score = 0.0;         // binary: sigmoid output (DP probability)
    std::vector<double> probs;  // multiclass: softmax vector
};

/// Binary: DP iff sigmoid >= 0.5 (tie resolves to DP), confidence
/// max(p, 1-p). Multiclass: argmax with lowest-index tie rule.
Prediction predict(const TargetClassifier& clf, const Tensor& image);

/// Mirror of the lateral (last) axis of a [C,H,W] tensor.
Tensor hflip_tensor(const Tensor& x);

} // namespace bnet::model
