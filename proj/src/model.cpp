#include "bnet/model.hpp"

#include "bnet/common.hpp"

#include <cmath>
#include <numeric>

namespace bnet::model {

void BurnNetConfig::validate() const {
    if (in_channels != 1) throw std::invalid_argument("config: input must be single-channel");
    if (rows < 10 || cols < 10)
        throw std::invalid_argument("config: input smaller than 10x10, encoder would underflow");
    if (batch == 0) throw std::invalid_argument("config: batch must be positive");
    for (std::size_t c : encoder_channels)
        if (c == 0) throw std::invalid_argument("config: encoder channels must be positive");
    for (std::size_t c : decoder_channels)
        if (c == 0) throw std::invalid_argument("config: decoder channels must be positive");
    if (bottleneck_channels == 0)
        throw std::invalid_argument("config: bottleneck channels must be positive");
}

const char* task_name(TaskMode m) { return m == TaskMode::Binary ? "binary" : "multiclass"; }

TaskMode task_from_name(const std::string& s) {
    if (s == "binary") return TaskMode::Binary;
    if (s == "multiclass") return TaskMode::Multiclass4;
    throw UsageError("unknown task '" + s + "' (expected binary|multiclass)");
}

std::pair<std::size_t, std::size_t> encoder_spatial(std::size_t rows, std::size_t cols) {
    return {rows - 8, cols - 8};
}

namespace {

void append_encoder(nn::Sequential& seq, const BurnNetConfig& cfg) {
    std::size_t ch = cfg.in_channels;
    for (std::size_t b = 0; b < 4; ++b) {
        const std::string tag = "enc" + std::to_string(b + 1);
        seq.add(std::make_unique<nn::Conv2d>(ch, cfg.encoder_channels[b], 2, 1), tag + ".conv");
        seq.add(std::make_unique<nn::ReLU>(), tag + ".relu");
        seq.add(std::make_unique<nn::AvgPool2d>(), tag + ".pool");
        ch = cfg.encoder_channels[b];
    }
    seq.add(std::make_unique<nn::Conv2d>(ch, cfg.bottleneck_channels, 1, 1), "bottleneck.conv");
    seq.add(std::make_unique<nn::ReLU>(), "bottleneck.relu");
}

void append_decoder(nn::Sequential& seq, const BurnNetConfig& cfg) {
    std::size_t ch = cfg.bottleneck_channels;
    for (std::size_t b = 0; b < 4; ++b) {
        const std::string tag = "dec" + std::to_string(b + 1);
        // Stride-2 deconv doubles, stride-2 conv halves: spatial preserving.
        seq.add(std::make_unique<nn::Deconv2d>(ch, cfg.decoder_channels[b]), tag + ".deconv");
        seq.add(std::make_unique<nn::ReLU>(), tag + ".derelu");
        seq.add(std::make_unique<nn::Conv2d>(cfg.decoder_channels[b], cfg.decoder_channels[b], 2,
                                             2),
                tag + ".conv");
        seq.add(std::make_unique<nn::ReLU>(), tag + ".relu");
        ch = cfg.decoder_channels[b];
    }
    seq.add(std::make_unique<nn::Deconv2d>(ch, ch), "dec5.deconv");
    seq.add(std::make_unique<nn::ReLU>(), "dec5.relu");
    seq.add(std::make_unique<nn::CenterCrop>(cfg.rows, cfg.cols), "out.crop");
    seq.add(std::make_unique<nn::Conv2d>(ch, cfg.in_channels, 1, 1), "out.conv");
    seq.add(std::make_unique<nn::Sigmoid>(), "out.sigmoid");
}

void init_sequential(nn::Sequential& seq, Rng& rng) {
    for (std::size_t i = 0; i < seq.layer_count(); ++i) {
        if (auto* c = dynamic_cast<nn::Conv2d*>(&seq.layer(i))) c->init(rng);
        else if (auto* d = dynamic_cast<nn::Deconv2d*>(&seq.layer(i))) d->init(rng);
        else if (auto* f = dynamic_cast<nn::Dense*>(&seq.layer(i))) f->init(rng);
    }
}

std::size_t count_params(const nn::Sequential& seq) {
    std::size_t n = 0;
    for (const Tensor* p : seq.params()) n += p->size();
    return n;
}

void checkpoint_sequential(Checkpoint& ck, const nn::Sequential& seq, const std::string& prefix) {
    const auto keys = seq.param_keys();
    const auto params = seq.params();
    for (std::size_t i = 0; i < keys.size(); ++i) ck.add(prefix + keys[i], *params[i]);
}

void restore_sequential(nn::Sequential& seq, const Checkpoint& ck, const std::string& prefix) {
    const auto keys = seq.param_keys();
    auto params = seq.params();
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const Tensor& stored = ck.get(prefix + keys[i]);
        if (!stored.same_shape(*params[i]))
            throw DataError("checkpoint tensor '" + prefix + keys[i] + "' has wrong shape");
        params[i]->values() = stored.values();
    }
}

} // namespace

Tensor SourceModel::reconstruct(const Tensor& x) const {
    return decoder.forward(encoder.forward(x));
}

std::vector<Tensor*> SourceModel::params() {
    auto p = encoder.params();
    for (Tensor* t : decoder.params()) p.push_back(t);
    return p;
}

std::size_t SourceModel::param_count() const {
    return count_params(encoder) + count_params(decoder);
}

Checkpoint SourceModel::to_checkpoint() const {
    Checkpoint ck;
    checkpoint_sequential(ck, encoder, "enc/");
    checkpoint_sequential(ck, decoder, "dec/");
    return ck;
}

void SourceModel::load_params(const Checkpoint& ck) {
    restore_sequential(encoder, ck, "enc/");
    restore_sequential(decoder, ck, "dec/");
}

SourceModel build_source(const BurnNetConfig& cfg) {
    cfg.validate();
    // The final stride-2 deconv must cover the input extents for the center
    // crop: 2*(n-8) >= n, i.e. n >= 16.
    if (cfg.rows < 16 || cfg.cols < 16)
        throw std::invalid_argument(
            "config: input smaller than 16x16, decoder crop cannot restore input extents");
    SourceModel m;
    m.cfg = cfg;
    append_encoder(m.encoder, cfg);
    append_decoder(m.decoder, cfg);
    Rng rng = Rng::derive(cfg.seed, 0x736f7572ull /* "sour" */, 0);
    init_sequential(m.encoder, rng);
    init_sequential(m.decoder, rng);
    return m;
}

std::size_t TargetClassifier::param_count() const { return count_params(net); }

Checkpoint TargetClassifier::to_checkpoint() const {
    Checkpoint ck;
    ck.meta["task"] = task_name(mode);
    checkpoint_sequential(ck, net, "clf/");
    return ck;
}

void TargetClassifier::load_params(const Checkpoint& ck) {
    restore_sequential(net, ck, "clf/");
}

namespace {

TargetClassifier make_classifier_shell(const BurnNetConfig& cfg, TaskMode mode) {
    cfg.validate();
    TargetClassifier clf;
    clf.cfg = cfg;
    clf.mode = mode;
    append_encoder(clf.net, cfg);
    clf.encoder_layers = clf.net.layer_count();
    clf.net.add(std::make_unique<nn::GlobalAvgPool>(), "head.gap");
    clf.net.add(std::make_unique<nn::Dense>(cfg.bottleneck_channels,
                                            mode == TaskMode::Binary ? 1 : 4),
                "head.dense");
    return clf;
}

} // namespace

TargetClassifier build_classifier(const BurnNetConfig& cfg, TaskMode mode) {
    TargetClassifier clf = make_classifier_shell(cfg, mode);
    Rng rng = Rng::derive(cfg.seed, 0x636c66ull /* "clf" */, static_cast<std::uint64_t>(mode));
    init_sequential(clf.net, rng);
    return clf;
}

TargetClassifier transfer_to_classifier(const SourceModel& source, TaskMode mode,
                                        std::optional<std::uint64_t> head_seed) {
    TargetClassifier clf = make_classifier_shell(source.cfg, mode);
    // Copy encoder weights; the decoder is dropped.
    const auto src = source.encoder.params();
    auto dst = clf.net.params();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->values() = src[i]->values();
    Rng rng = Rng::derive(head_seed.value_or(source.cfg.seed), 0x68656164ull /* "head" */,
                          static_cast<std::uint64_t>(mode));
    for (std::size_t i = clf.encoder_layers; i < clf.net.layer_count(); ++i)
        if (auto* d = dynamic_cast<nn::Dense*>(&clf.net.layer(i))) d->init(rng);
    return clf;
}

Tensor hflip_tensor(const Tensor& x) {
    if (x.rank() != 3) throw std::invalid_argument("hflip_tensor expects [C,H,W]");
    Tensor y(x.shape());
    const std::size_t c_n = x.extent(0), h = x.extent(1), w = x.extent(2);
    for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) y.at(c, i, j) = x.at(c, i, w - 1 - j);
    return y;
}

std::vector<double> train_source(SourceModel& m, std::span<const Tensor> unburned,
                                 std::span<const Tensor> burned, std::size_t epochs,
                                 std::size_t batch, std::uint64_t seed,
                                 const EpochCallback& on_epoch) {
    if (unburned.empty() || burned.empty())
        throw DataError("train_source: both image sets must be non-empty");
    if (batch == 0) throw std::invalid_argument("train_source: batch must be positive");

    // Adam is elementwise, so the encoder and decoder can carry separate
    // optimizer states and gradient buffers.
    auto enc_params = m.encoder.params();
    auto dec_params = m.decoder.params();
    nn::AdamState enc_adam = nn::AdamState::like(enc_params);
    nn::AdamState dec_adam = nn::AdamState::like(dec_params);
    nn::Grads enc_grads = nn::Grads::like(enc_params);
    nn::Grads dec_grads = nn::Grads::like(dec_params);

    std::vector<double> trace;
    trace.reserve(epochs);
    std::vector<Tensor> enc_trace, dec_trace;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng erng = Rng::derive(seed, 0x65706f63ull /* "epoc" */, epoch);
        std::vector<std::size_t> order(burned.size());
        std::iota(order.begin(), order.end(), 0);
        erng.shuffle(order);
        std::vector<std::size_t> target(burned.size());
        for (std::size_t i = 0; i < burned.size(); ++i)
            target[i] = static_cast<std::size_t>(erng.below(unburned.size()));

        double epoch_loss = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
            const std::size_t bn = std::min(batch, order.size() - b0);
            enc_grads.zero();
            dec_grads.zero();
            for (std::size_t s = 0; s < bn; ++s) {
                const Tensor& x_burn = burned[order[b0 + s]];
                const Tensor& x_target = unburned[target[b0 + s]];
                const Tensor& code = m.encoder.forward(x_burn, enc_trace);
                const Tensor& recon = m.decoder.forward(code, dec_trace);
                epoch_loss += nn::reconstruction_loss(x_target, recon);
                Tensor dz = nn::reconstruction_loss_grad(x_target, recon);
                Tensor dcode = m.decoder.backward(dz, dec_trace, dec_grads);
                m.encoder.backward(dcode, enc_trace, enc_grads);
            }
            const double inv = 1.0 / static_cast<double>(bn);
            enc_grads.scale(inv);
            dec_grads.scale(inv);
            nn::adam_step(enc_params, enc_grads, enc_adam);
            nn::adam_step(dec_params, dec_grads, dec_adam);
        }
        const double mean_loss = epoch_loss / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss))
            throw NumericalError("train_source: non-finite loss at epoch " +
                                 std::to_string(epoch));
        trace.push_back(mean_loss);
        if (on_epoch) on_epoch(epoch, mean_loss);
    }
    return trace;
}

std::vector<double> train_classifier(TargetClassifier& clf,
                                     std::span<const LabeledTensor> train, std::size_t epochs,
                                     std::size_t batch, std::uint64_t seed, bool augment_flips,
                                     const EpochCallback& on_epoch) {
    if (train.empty()) throw DataError("train_classifier: empty training set");
    if (batch == 0) throw std::invalid_argument("train_classifier: batch must be positive");
    const std::size_t width = clf.head_width();
    for (const auto& s : train)
        if (s.label >= (clf.mode == TaskMode::Binary ? 2u : 4u))
            throw DataError("train_classifier: label out of range for task");
    if (clf.mode == TaskMode::Binary) {
        bool has0 = false, has1 = false;
        for (const auto& s : train) (s.label ? has1 : has0) = true;
        if (!has0 || !has1)
            throw DataError("train_classifier: binary task needs both classes present");
    }

    std::vector<LabeledTensor> samples(train.begin(), train.end());
    if (augment_flips) {
        samples.reserve(train.size() * 2);
        for (const auto& s : train) samples.push_back({hflip_tensor(s.image), s.label});
    }

    auto params = clf.params();
    nn::AdamState adam = nn::AdamState::like(params);
    nn::Grads grads = nn::Grads::like(params);
    const nn::Softmax softmax;
    const nn::Sigmoid sigmoid;

    std::vector<double> trace;
    trace.reserve(epochs);
    std::vector<Tensor> net_trace;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng erng = Rng::derive(seed, 0x636570ull /* "cep" */, epoch);
        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        erng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
            const std::size_t bn = std::min(batch, order.size() - b0);
            grads.zero();
            for (std::size_t s = 0; s < bn; ++s) {
                const LabeledTensor& sample = samples[order[b0 + s]];
                const Tensor& logits = clf.net.forward(sample.image, net_trace);
                Tensor dlogits({width});
                if (clf.mode == TaskMode::Binary) {
                    const Tensor p = sigmoid.forward(logits);
                    const double y = static_cast<double>(sample.label);
                    epoch_loss += nn::binary_cross_entropy(y, p[0]);
                    Tensor dp({1});
                    dp[0] = nn::binary_cross_entropy_grad(y, p[0]);
                    dlogits = sigmoid.backward(dp, logits, p, {}, nn::BackMode::Standard);
                } else {
                    const Tensor p = softmax.forward(logits);
                    epoch_loss += nn::cross_entropy(sample.label, p);
                    Tensor dp = nn::cross_entropy_grad(sample.label, p);
                    dlogits = softmax.backward(dp, logits, p, {}, nn::BackMode::Standard);
                }
                if (clf.freeze_encoder) {
                    clf.net.backward_to(clf.encoder_layers, dlogits, net_trace, grads);
                } else {
                    clf.net.backward(dlogits, net_trace, grads);
                }
            }
            grads.scale(1.0 / static_cast<double>(bn));
            nn::adam_step(params, grads, adam);
        }
        const double mean_loss = epoch_loss / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss))
            throw NumericalError("train_classifier: non-finite loss at epoch " +
                                 std::to_string(epoch));
        trace.push_back(mean_loss);
        if (on_epoch) on_epoch(epoch, mean_loss);
    }
    return trace;
}

Prediction predict(const TargetClassifier& clf, const Tensor& image) {
    if (image.rank() != 3 || image.extent(0) != clf.cfg.in_channels ||
        image.extent(1) != clf.cfg.rows || image.extent(2) != clf.cfg.cols)
        throw std::invalid_argument("predict: image shape does not match classifier input");
    const Tensor logits = clf.logits(image);
    Prediction out;
    if (clf.mode == TaskMode::Binary) {
        const Tensor p = nn::Sigmoid{}.forward(logits);
        out.score = p[0];
        out.label = p[0] >= 0.5 ? 1 : 0;
        out.confidence = std::max(p[0], 1.0 - p[0]);
        out.probs = {1.0 - p[0], p[0]};
    } else {
        const Tensor p = nn::Softmax{}.forward(logits);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i] > p[arg]) arg = i;
        out.label = arg;
        out.confidence = p[arg];
        out.score = p[arg];
        out.probs = p.values();
    }
    return out;
}

} // namespace bnet::model
