#include "bnet/model.hpp"
#include "bnet/common.hpp"
#include "bnet/data.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace bnet;
using namespace bnet::model;
using oracles::random_tensor;

namespace {

BurnNetConfig small_cfg() {
    BurnNetConfig cfg;
    cfg.rows = 16;
    cfg.cols = 16;
    cfg.encoder_channels = {4, 6, 8, 10};
    cfg.bottleneck_channels = 6;
    cfg.decoder_channels = {10, 8, 6, 4};
    cfg.batch = 8;
    cfg.seed = 3;
    return cfg;
}

std::vector<Tensor> phantom_tensors(data::BurnClass cls, std::size_t n, std::uint64_t seed,
                                    std::size_t rows, std::size_t cols) {
    data::PhantomParams params;
    std::vector<Tensor> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(cls), i);
        out.push_back(data::generate_phantom(cls, params, rng, rows, cols).to_tensor());
    }
    return out;
}

} // namespace

TEST_CASE("built source model shapes") {
    BurnNetConfig cfg; // paper-scale 22x34
    SourceModel m = build_source(cfg);

    Rng rng(1);
    Tensor x = random_tensor({1, 22, 34}, rng, 0.0, 1.0);
    Tensor code = m.encoder.forward(x);
    CHECK(code.shape() == std::vector<std::size_t>{64, 14, 26});

    Tensor recon = m.decoder.forward(code);
    CHECK(recon.shape() == std::vector<std::size_t>{1, 22, 34});
    for (std::size_t i = 0; i < recon.size(); ++i) {
        CHECK(recon[i] > 0.0);
        CHECK(recon[i] < 1.0);
    }

    // deterministic parameter counts from the layer shapes
    CHECK(m.param_count() == 215921);
    TargetClassifier bin = transfer_to_classifier(m, TaskMode::Binary);
    CHECK(bin.param_count() == 51633);
    TargetClassifier multi = transfer_to_classifier(m, TaskMode::Multiclass4);
    CHECK(multi.param_count() == 51828);

    BurnNetConfig bad = cfg;
    bad.rows = 8;
    bad.cols = 8;
    CHECK_THROWS_AS(static_cast<void>(build_source(bad)), std::invalid_argument);
}

TEST_CASE("transfer copies encoder and sizes the head") {
    BurnNetConfig cfg = small_cfg();
    SourceModel src = build_source(cfg);
    Rng rng(4);
    Tensor x = random_tensor({1, 16, 16}, rng, 0.0, 1.0);
    Tensor before = src.encoder.forward(x);

    TargetClassifier bin = transfer_to_classifier(src, TaskMode::Binary);
    CHECK(bin.logits(x).size() == 1);
    TargetClassifier multi = transfer_to_classifier(src, TaskMode::Multiclass4);
    CHECK(multi.logits(x).size() == 4);

    // encoder forward identical before/after transfer
    std::vector<Tensor> trace;
    Tensor after = bin.net.forward(x, trace);
    const Tensor& enc_out = trace[bin.encoder_layers];
    REQUIRE(enc_out.shape() == before.shape());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(enc_out[i] == before[i]);
}

TEST_CASE("end-to-end classifier gradient check") {
    BurnNetConfig cfg = small_cfg();
    TargetClassifier clf = build_classifier(cfg, TaskMode::Binary);
    Rng rng(8);
    Tensor x0 = random_tensor({1, 16, 16}, rng, 0.0, 1.0);

    auto f = [&](const Tensor& x) {
        Tensor logit = clf.net.forward(x);
        const double p = 1.0 / (1.0 + std::exp(-logit[0]));
        return Tensor({1}, {nn::binary_cross_entropy(1.0, p)});
    };
    auto g = [&](const Tensor& x) {
        std::vector<Tensor> trace;
        Tensor logit = clf.net.forward(x, trace);
        const double p = 1.0 / (1.0 + std::exp(-logit[0]));
        Tensor dlogit({1}, {p - 1.0});
        nn::Grads grads = nn::Grads::like(clf.net.params());
        return clf.net.backward(dlogit, trace, grads);
    };
    CHECK(grad_check(f, g, x0, 1e-5) < 1e-4);
}

TEST_CASE("train_source degenerate autoencoder converges") {
    // Default-width model; mild speckle keeps the irreducible cross-
    // reconstruction floor well under the convergence target.
    BurnNetConfig cfg;
    cfg.rows = 16;
    cfg.cols = 16;
    cfg.batch = 8;
    cfg.seed = 3;
    data::PhantomParams params;
    params.speckle_contrast = {0.05, 0.3, 0.45, 0.6, 0.8};
    SourceModel m = build_source(cfg);
    std::vector<Tensor> phantoms;
    for (std::size_t i = 0; i < 60; ++i) {
        Rng rng = Rng::derive(10, 0, i);
        phantoms.push_back(
            data::generate_phantom(data::BurnClass::Unburned, params, rng, 16, 16).to_tensor());
    }
    auto trace = train_source(m, phantoms, phantoms, 200, cfg.batch, cfg.seed);
    REQUIRE(trace.size() == 200);
    CHECK(trace.back() < 0.10 * trace.front());

    // zero-epoch call: unchanged model, empty trace
    cfg = small_cfg();
    auto phantoms_small = phantom_tensors(data::BurnClass::Unburned, 8, 10, 16, 16);
    SourceModel m2 = build_source(cfg);
    SourceModel m3 = build_source(cfg);
    auto empty = train_source(m2, phantoms_small, phantoms_small, 0, cfg.batch, cfg.seed);
    CHECK(empty.empty());
    auto p2 = m2.params();
    auto p3 = m3.params();
    for (std::size_t i = 0; i < p2.size(); ++i) CHECK(p2[i]->values() == p3[i]->values());

    std::vector<Tensor> none;
    CHECK_THROWS_AS(static_cast<void>(train_source(m2, none, phantoms_small, 1, 8, 1)),
                    DataError);
}

TEST_CASE("train_source determinism") {
    BurnNetConfig cfg = small_cfg();
    auto unburned = phantom_tensors(data::BurnClass::Unburned, 8, 11, 16, 16);
    auto burned = phantom_tensors(data::BurnClass::DFT, 8, 12, 16, 16);

    SourceModel a = build_source(cfg);
    SourceModel b = build_source(cfg);
    auto ta = train_source(a, unburned, burned, 5, 4, 77);
    auto tb = train_source(b, unburned, burned, 5, 4, 77);
    CHECK(ta == tb); // bitwise identical traces
    auto pa = a.params();
    auto pb = b.params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->values() == pb[i]->values());
}

TEST_CASE("classifier training separates an easy synthetic pair") {
    BurnNetConfig cfg = small_cfg();
    cfg.batch = 8;
    TargetClassifier clf = build_classifier(cfg, TaskMode::Binary);

    // DP-like positives vs far-separated DFT-like negatives
    std::vector<LabeledTensor> train;
    for (const Tensor& t : phantom_tensors(data::BurnClass::SP, 12, 5, 16, 16))
        train.push_back({t, 0});
    for (const Tensor& t : phantom_tensors(data::BurnClass::DFT, 12, 6, 16, 16))
        train.push_back({t, 1});

    auto trace = train_classifier(clf, train, 120, cfg.batch, 9);
    REQUIRE(trace.size() == 120);
    for (double l : trace) CHECK(std::isfinite(l));

    std::size_t correct = 0;
    for (const auto& s : train)
        correct += predict(clf, s.image).label == s.label ? 1 : 0;
    CHECK(correct == train.size());

    // determinism: identical final weights across two runs
    TargetClassifier c1 = build_classifier(cfg, TaskMode::Binary);
    TargetClassifier c2 = build_classifier(cfg, TaskMode::Binary);
    auto t1 = train_classifier(c1, train, 3, cfg.batch, 21);
    auto t2 = train_classifier(c2, train, 3, cfg.batch, 21);
    CHECK(t1 == t2);
    auto q1 = c1.params();
    auto q2 = c2.params();
    for (std::size_t i = 0; i < q1.size(); ++i) CHECK(q1[i]->values() == q2[i]->values());

    // single-class binary set is rejected
    std::vector<LabeledTensor> mono(train.begin(), train.begin() + 12);
    TargetClassifier c3 = build_classifier(cfg, TaskMode::Binary);
    CHECK_THROWS_AS(static_cast<void>(train_classifier(c3, mono, 1, 4, 1)), DataError);
}

TEST_CASE("predict rules") {
    BurnNetConfig cfg = small_cfg();
    TargetClassifier clf = build_classifier(cfg, TaskMode::Binary);
    // force the head to produce a fixed logit by zeroing encoder output path
    Rng rng(14);
    Tensor x = random_tensor({1, 16, 16}, rng, 0.0, 1.0);

    auto& dense = dynamic_cast<nn::Dense&>(clf.net.layer(clf.net.layer_count() - 1));
    for (std::size_t i = 0; i < dense.weights().size(); ++i) dense.weights()[i] = 0.0;

    dense.bias()[0] = std::log(0.9 / 0.1); // sigmoid -> 0.9
    Prediction p = predict(clf, x);
    CHECK(p.label == 1);
    CHECK(p.confidence == doctest::Approx(0.9));

    dense.bias()[0] = std::log(0.2 / 0.8); // sigmoid -> 0.2
    p = predict(clf, x);
    CHECK(p.label == 0);
    CHECK(p.confidence == doctest::Approx(0.8));

    dense.bias()[0] = 0.0; // exactly 0.5 resolves to DP
    p = predict(clf, x);
    CHECK(p.label == 1);

    TargetClassifier multi = build_classifier(cfg, TaskMode::Multiclass4);
    auto& mdense = dynamic_cast<nn::Dense&>(multi.net.layer(multi.net.layer_count() - 1));
    for (std::size_t i = 0; i < mdense.weights().size(); ++i) mdense.weights()[i] = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mdense.bias()[i] = 0.0;
    Prediction mp = predict(multi, x);
    CHECK(mp.label == 0); // four-way tie resolves to the lowest index (SP)
    CHECK(mp.confidence == doctest::Approx(0.25));

    CHECK_THROWS_AS(static_cast<void>(predict(clf, Tensor({1, 4, 4}))),
                    std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit exact") {
    namespace fs = std::filesystem;
    BurnNetConfig cfg = small_cfg();
    SourceModel m = build_source(cfg);
    auto unburned = phantom_tensors(data::BurnClass::Unburned, 6, 21, 16, 16);
    auto burned = phantom_tensors(data::BurnClass::DFT, 6, 22, 16, 16);
    train_source(m, unburned, burned, 2, 4, 5);

    const fs::path path = fs::temp_directory_path() / "bnet_model_test.ckpt";
    Checkpoint ck = m.to_checkpoint();
    ck.meta["note"] = "test";
    ck.save(path.string());
    Checkpoint back = Checkpoint::load(path.string());
    CHECK(back.meta.at("note") == "test");

    SourceModel m2 = build_source(cfg);
    m2.load_params(back);
    auto pa = m.params();
    auto pb = m2.params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->values() == pb[i]->values());

    // byte-identical on re-save
    const fs::path path2 = fs::temp_directory_path() / "bnet_model_test2.ckpt";
    m2.to_checkpoint().save(path2.string());
    Checkpoint ck2 = m.to_checkpoint();
    ck2.save(path.string());
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("frozen encoder leaves encoder weights untouched") {
    BurnNetConfig cfg = small_cfg();
    TargetClassifier clf = build_classifier(cfg, TaskMode::Binary);
    std::vector<double> enc_before;
    auto params = clf.params();
    for (std::size_t i = 0; i + 2 < params.size(); ++i)
        enc_before.insert(enc_before.end(), params[i]->values().begin(),
                          params[i]->values().end());

    std::vector<LabeledTensor> train;
    for (const Tensor& t : phantom_tensors(data::BurnClass::SP, 4, 5, 16, 16))
        train.push_back({t, 0});
    for (const Tensor& t : phantom_tensors(data::BurnClass::DFT, 4, 6, 16, 16))
        train.push_back({t, 1});
    clf.freeze_encoder = true;
    train_classifier(clf, train, 3, 4, 1);

    std::vector<double> enc_after;
    for (std::size_t i = 0; i + 2 < params.size(); ++i)
        enc_after.insert(enc_after.end(), params[i]->values().begin(),
                         params[i]->values().end());
    CHECK(enc_before == enc_after);
}
