#include "bnet/runners.hpp"

#include "bnet/common.hpp"
#include "bnet/saliency.hpp"
#include "bnet/svg.hpp"
#include "bnet/texture.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace bnet::cli {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc | std::ios::binary);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw DataError("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

} // namespace

std::string RunConfig::canonical_text() const {
    // Protocol fingerprint only: paths stay out so a relocated run keeps
    // its identity and resume can recognise finished stages.
    std::ostringstream os;
    os << "batch = " << batch << "\n"
       << "cols = " << cols << "\n"
       << "downsample_factor = " << downsample_factor << "\n"
       << "epochs = " << epochs << "\n"
       << "folds = " << folds << "\n"
       << "freeze_encoder = " << (freeze_encoder ? 1 : 0) << "\n"
       << "per_class = " << per_class << "\n"
       << "phantom.attenuation = " << num(phantom.attenuation) << "\n"
       << "phantom.correlation_px = " << num(phantom.correlation_px) << "\n"
       << "phantom.entry_brightness = " << num(phantom.entry_brightness) << "\n";
    for (int i = 0; i < 5; ++i)
        os << "phantom.contrast." << data::class_name(data::kAllClasses[i]) << " = "
           << num(phantom.speckle_contrast[i]) << "\n";
    for (int i = 0; i < 5; ++i)
        os << "phantom.extent." << data::class_name(data::kAllClasses[i]) << " = "
           << num(phantom.depth_extent[i]) << "\n";
    os << "pretrain = " << (pretrain ? 1 : 0) << "\n"
       << "rows = " << rows << "\n"
       << "seed = " << seed << "\n"
       << "source_epochs = " << source_epochs << "\n"
       << "task = " << task << "\n";
    return os.str();
}

std::string RunConfig::hash_hex() const { return to_hex(fnv1a64(canonical_text())); }

namespace {

std::string artifact_comment(const RunConfig& cfg) {
    return std::string("config=") + cfg.hash_hex() + " seed=" + std::to_string(cfg.seed) +
           " version=" + kVersion;
}

void echo_config(const RunConfig& cfg, const std::string& command) {
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / ("config_" + command + ".txt"),
               "# " + artifact_comment(cfg) + "\ncommand = " + command + "\n" +
                   cfg.canonical_text());
}

struct Prepared {
    data::LabeledDataset full;       // as loaded (original resolution)
    data::LabeledDataset burn_full;  // burn classes only, dataset order
    data::LabeledDataset burn_small; // downsampled burn classes
    std::vector<Tensor> unburned_small;
    std::vector<Tensor> dft_small;
};

std::size_t task_label(data::BurnClass c, model::TaskMode mode) {
    if (mode == model::TaskMode::Binary) return c == data::BurnClass::DP ? 1 : 0;
    return static_cast<std::size_t>(static_cast<int>(c) - 1); // SP..DFT -> 0..3
}

const char* binary_class_name(std::size_t label) { return label == 1 ? "DP" : "Rest"; }

const char* multi_class_name(std::size_t label) {
    return data::class_name(static_cast<data::BurnClass>(label + 1));
}

Prepared prepare(const RunConfig& cfg) {
    if (cfg.data_dir.empty()) throw UsageError("no dataset directory given (--data)");
    Prepared p;
    p.full = data::load_image_dir(cfg.data_dir);
    if (p.full.items.empty()) throw DataError("dataset '" + cfg.data_dir + "' is empty");
    p.burn_full.name = p.full.name + "/burns";
    p.burn_small.name = p.burn_full.name + "/small";
    for (const auto& [img, c] : p.full.items) {
        const data::UltrasoundImage small = data::downsample(img, cfg.downsample_factor);
        if (c == data::BurnClass::Unburned) {
            p.unburned_small.push_back(small.to_tensor());
        } else {
            p.burn_full.items.emplace_back(img, c);
            p.burn_small.items.emplace_back(small, c);
            if (c == data::BurnClass::DFT) p.dft_small.push_back(small.to_tensor());
        }
    }
    return p;
}

model::BurnNetConfig net_config(const RunConfig& cfg, const Prepared& p) {
    model::BurnNetConfig nc;
    nc.rows = p.burn_small.items.front().first.rows;
    nc.cols = p.burn_small.items.front().first.cols;
    nc.epochs = cfg.epochs;
    nc.batch = cfg.batch;
    nc.seed = cfg.seed;
    return nc;
}

void write_trace_csv(const fs::path& path, const std::vector<double>& trace,
                     const RunConfig& cfg) {
    std::ostringstream os;
    os << "# " << artifact_comment(cfg) << "\nepoch,loss\n";
    for (std::size_t e = 0; e < trace.size(); ++e) os << e << "," << num(trace[e]) << "\n";
    write_text(path, os.str());
}

std::string fold_ckpt_name(std::size_t f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fold%02zu.ckpt", f);
    return buf;
}

std::string indices_csv(const std::vector<std::size_t>& idx) {
    std::ostringstream os;
    for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? ";" : "") << idx[i];
    return os.str();
}

bool checkpoint_matches(const fs::path& path, const RunConfig& cfg) {
    if (!fs::exists(path)) return false;
    try {
        Checkpoint ck = Checkpoint::load(path.string());
        return ck.meta.count("config") && ck.meta.at("config") == cfg.hash_hex();
    } catch (const DataError&) {
        return false;
    }
}

model::EpochCallback progress(const RunConfig& cfg, const std::string& stage,
                              std::size_t total) {
    if (cfg.quiet) return {};
    return [stage, total](std::size_t epoch, double loss) {
        if (epoch % 25 == 0 || epoch + 1 == total)
            std::cerr << stage << " epoch " << epoch + 1 << "/" << total << " loss " << loss
                      << "\n";
    };
}

} // namespace

void cmd_generate(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("generate needs an output directory (--out)");
    if (cfg.per_class == 0) throw UsageError("generate needs a positive --per-class");
    cfg.phantom.validate();
    echo_config(cfg, "generate");

    data::LabeledDataset ds;
    ds.name = "synthetic";
    for (data::BurnClass c : data::kAllClasses)
        for (std::size_t i = 0; i < cfg.per_class; ++i) {
            Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(c), i);
            data::UltrasoundImage img =
                data::generate_phantom(c, cfg.phantom, rng, cfg.rows, cfg.cols);
            img.provenance.seed = cfg.seed;
            ds.items.emplace_back(std::move(img), c);
        }
    data::save_dataset(ds, (fs::path(cfg.out_dir) / "dataset").string(),
                       artifact_comment(cfg));
    if (!cfg.quiet)
        std::cerr << "generated " << ds.size() << " phantoms under " << cfg.out_dir
                  << "/dataset\n";
}

void cmd_train(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("train needs an output directory (--out)");
    echo_config(cfg, "train");
    Prepared p = prepare(cfg);
    const model::TaskMode mode = model::task_from_name(cfg.task);
    model::BurnNetConfig nc = net_config(cfg, p);

    std::optional<model::SourceModel> source;
    const fs::path source_path = fs::path(cfg.out_dir) / "source.ckpt";
    if (cfg.pretrain) {
        source = model::build_source(nc);
        if (p.unburned_small.empty() || p.dft_small.empty())
            throw DataError("source pre-training needs Unburned and DFT images");
        if (cfg.resume && checkpoint_matches(source_path, cfg)) {
            source->load_params(Checkpoint::load(source_path.string()));
            if (!cfg.quiet) std::cerr << "source checkpoint reused\n";
        } else {
            auto trace = model::train_source(*source, p.unburned_small, p.dft_small,
                                             cfg.source_epochs, cfg.batch,
                                             Rng::derive(cfg.seed, 0x737263ull, 0).next_u64(),
                                             progress(cfg, "source", cfg.source_epochs));
            Checkpoint ck = source->to_checkpoint();
            ck.meta["config"] = cfg.hash_hex();
            ck.meta["seed"] = std::to_string(cfg.seed);
            ck.meta["version"] = kVersion;
            ck.save(source_path.string());
            write_trace_csv(fs::path(cfg.out_dir) / "source_trace.csv", trace, cfg);
        }
    }

    const auto folds = data::kfold_split(p.burn_small, cfg.folds, cfg.seed);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const fs::path ckpt_path = fs::path(cfg.out_dir) / fold_ckpt_name(f);
        if (cfg.resume && checkpoint_matches(ckpt_path, cfg)) {
            if (!cfg.quiet) std::cerr << "fold " << f << " checkpoint reused\n";
            continue;
        }
        const std::uint64_t fold_seed = Rng::derive(cfg.seed, 0x666f6c64ull, f).next_u64();
        model::TargetClassifier clf =
            cfg.pretrain ? model::transfer_to_classifier(*source, mode, fold_seed)
                         : [&] {
                               model::BurnNetConfig cold = nc;
                               cold.seed = fold_seed;
                               return model::build_classifier(cold, mode);
                           }();
        clf.freeze_encoder = cfg.freeze_encoder;

        std::vector<model::LabeledTensor> train;
        train.reserve(folds[f].train.size());
        for (std::size_t idx : folds[f].train)
            train.push_back({p.burn_small.items[idx].first.to_tensor(),
                             task_label(p.burn_small.items[idx].second, mode)});
        const std::string stage = "fold " + std::to_string(f);
        auto trace = model::train_classifier(clf, train, cfg.epochs, cfg.batch, fold_seed,
                                             true, progress(cfg, stage, cfg.epochs));

        Checkpoint ck = clf.to_checkpoint();
        ck.meta["config"] = cfg.hash_hex();
        ck.meta["seed"] = std::to_string(cfg.seed);
        ck.meta["version"] = kVersion;
        ck.meta["fold"] = std::to_string(f);
        ck.meta["test_indices"] = indices_csv(folds[f].test);
        ck.save(ckpt_path.string());
        char tname[40];
        std::snprintf(tname, sizeof tname, "fold%02zu_trace.csv", f);
        write_trace_csv(fs::path(cfg.out_dir) / tname, trace, cfg);
    }
}

namespace {

struct PooledPredictions {
    // one row per out-of-fold sample, dataset order within folds
    std::vector<std::size_t> index;
    std::vector<std::size_t> truth; // task labels
    std::vector<model::Prediction> pred;
};

PooledPredictions pool_predictions(const RunConfig& cfg, const Prepared& p,
                                   model::TaskMode mode) {
    const std::string run = cfg.run_dir.empty() ? cfg.out_dir : cfg.run_dir;
    const auto folds = data::kfold_split(p.burn_small, cfg.folds, cfg.seed);
    model::BurnNetConfig nc = net_config(cfg, p);

    PooledPredictions out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const fs::path ckpt_path = fs::path(run) / fold_ckpt_name(f);
        if (!fs::exists(ckpt_path))
            throw DataError("missing checkpoint '" + ckpt_path.string() +
                            "' (run train first)");
        Checkpoint ck = Checkpoint::load(ckpt_path.string());
        if (ck.meta.count("test_indices") &&
            ck.meta.at("test_indices") != indices_csv(folds[f].test))
            throw DataError("fold " + std::to_string(f) +
                            " checkpoint was trained on different folds (seed mismatch?)");
        model::TargetClassifier clf = model::build_classifier(nc, mode);
        clf.load_params(ck);
        for (std::size_t idx : folds[f].test) {
            out.index.push_back(idx);
            out.truth.push_back(task_label(p.burn_small.items[idx].second, mode));
            out.pred.push_back(model::predict(clf, p.burn_small.items[idx].first.to_tensor()));
        }
    }
    return out;
}

void write_predictions_csv(const fs::path& path, const RunConfig& cfg,
                           const PooledPredictions& pool, model::TaskMode mode) {
    std::ostringstream os;
    os << "# " << artifact_comment(cfg) << "\n";
    if (mode == model::TaskMode::Binary) {
        os << "index,true,pred,confidence,score\n";
        for (std::size_t i = 0; i < pool.index.size(); ++i)
            os << pool.index[i] << "," << binary_class_name(pool.truth[i]) << ","
               << binary_class_name(pool.pred[i].label) << "," << num(pool.pred[i].confidence)
               << "," << num(pool.pred[i].score) << "\n";
    } else {
        os << "index,true,pred,confidence,p_sp,p_dp,p_lft,p_dft\n";
        for (std::size_t i = 0; i < pool.index.size(); ++i) {
            os << pool.index[i] << "," << multi_class_name(pool.truth[i]) << ","
               << multi_class_name(pool.pred[i].label) << ","
               << num(pool.pred[i].confidence);
            for (double v : pool.pred[i].probs) os << "," << num(v);
            os << "\n";
        }
    }
    write_text(path, os.str());
}

json binary_metrics_json(const metrics::BinaryConfusion& cm, const metrics::BinaryMetrics& m,
                         double roc_auc, double pr_auc) {
    return json{{"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}}},
                {"metrics",
                 {{"accuracy", m.accuracy},
                  {"sensitivity", m.sensitivity},
                  {"specificity", m.specificity},
                  {"f_score", m.f_score},
                  {"f1_score", m.f1_score},
                  {"mcc", m.mcc}}},
                {"roc_auc", roc_auc},
                {"pr_auc", pr_auc}};
}

void write_curve_csv(const fs::path& path, const RunConfig& cfg, const metrics::Curve& curve,
                     const char* xname, const char* yname) {
    std::ostringstream os;
    os << "# " << artifact_comment(cfg) << "\nthreshold," << xname << "," << yname << "\n";
    for (const auto& pt : curve.points)
        os << num(pt.threshold) << "," << num(pt.x) << "," << num(pt.y) << "\n";
    write_text(path, os.str());
}

} // namespace

void cmd_evaluate(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("evaluate needs an output directory (--out)");
    echo_config(cfg, "evaluate");
    Prepared p = prepare(cfg);
    const model::TaskMode mode = model::task_from_name(cfg.task);
    PooledPredictions pool = pool_predictions(cfg, p, mode);
    write_predictions_csv(fs::path(cfg.out_dir) / "predictions.csv", cfg, pool, mode);

    json summary{{"version", kVersion},
                 {"config_hash", cfg.hash_hex()},
                 {"seed", cfg.seed},
                 {"task", cfg.task},
                 {"samples", pool.index.size()}};
    if (mode == model::TaskMode::Binary) {
        metrics::BinaryConfusion cm;
        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t i = 0; i < pool.index.size(); ++i) {
            const bool truth_dp = pool.truth[i] == 1, pred_dp = pool.pred[i].label == 1;
            cm.tp += truth_dp && pred_dp;
            cm.fp += !truth_dp && pred_dp;
            cm.fn += truth_dp && !pred_dp;
            cm.tn += !truth_dp && !pred_dp;
            scores.push_back(pool.pred[i].score);
            labels.push_back(truth_dp ? 1 : 0);
        }
        const metrics::BinaryMetrics m = metrics::classification_metrics(cm);
        const metrics::Curve roc = metrics::roc_curve(scores, labels);
        const metrics::Curve pr = metrics::pr_curve(scores, labels);
        summary["binary"] = binary_metrics_json(cm, m, roc.auc, pr.auc);
        write_curve_csv(fs::path(cfg.out_dir) / "roc.csv", cfg, roc, "fpr", "tpr");
        write_curve_csv(fs::path(cfg.out_dir) / "pr.csv", cfg, pr, "recall", "precision");
    } else {
        metrics::MulticlassConfusion cm(4);
        for (std::size_t i = 0; i < pool.index.size(); ++i)
            cm.at(pool.truth[i], pool.pred[i].label)++;
        summary["multiclass"] = {{"accuracy", metrics::multiclass_accuracy(cm)}};
        std::ostringstream os;
        os << "# " << artifact_comment(cfg) << "\ntrue\\pred,SP,DP,LFT,DFT\n";
        for (std::size_t t = 0; t < 4; ++t) {
            os << multi_class_name(t);
            for (std::size_t q = 0; q < 4; ++q) os << "," << cm.at(t, q);
            os << "\n";
        }
        write_text(fs::path(cfg.out_dir) / "confusion.csv", os.str());
    }
    write_json(fs::path(cfg.out_dir) / "metrics.json", summary);
}

void cmd_baseline(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("baseline needs an output directory (--out)");
    echo_config(cfg, "baseline");
    Prepared p = prepare(cfg);

    // Engineered features come from the original-resolution images.
    std::vector<std::vector<double>> feats;
    std::vector<std::string> feat_labels;
    std::vector<int> labels;
    feats.reserve(p.burn_full.size());
    for (const auto& [img, c] : p.burn_full.items) {
        const texture::FeatureVector f = texture::haralick_features(texture::compute_glcm(img));
        feats.emplace_back(f.begin(), f.end());
        feat_labels.push_back(data::class_name(c));
        labels.push_back(c == data::BurnClass::DP ? 1 : 0);
    }
    texture::write_features_csv((fs::path(cfg.out_dir) / "features.csv").string(), feats,
                                feat_labels, artifact_comment(cfg));

    const auto folds = data::kfold_split(p.burn_full, cfg.folds, cfg.seed);
    metrics::BinaryConfusion lda_cm, svm_cm;
    std::vector<double> lda_scores, svm_scores;
    std::vector<int> pooled_labels;
    std::vector<std::size_t> pooled_index;
    for (const auto& fold : folds) {
        std::vector<std::vector<double>> xtr;
        std::vector<int> ytr;
        for (std::size_t idx : fold.train) {
            xtr.push_back(feats[idx]);
            ytr.push_back(labels[idx]);
        }
        // Features span many decades (cluster prominence vs ASM); the RBF
        // kernel needs them standardized with the training fold's stats.
        const std::size_t dims = texture::kFeatureCount;
        std::vector<double> mean(dims, 0.0), scale(dims, 1.0);
        for (const auto& row : xtr)
            for (std::size_t j = 0; j < dims; ++j) mean[j] += row[j];
        for (std::size_t j = 0; j < dims; ++j) mean[j] /= static_cast<double>(xtr.size());
        std::vector<double> var(dims, 0.0);
        for (const auto& row : xtr)
            for (std::size_t j = 0; j < dims; ++j)
                var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
        for (std::size_t j = 0; j < dims; ++j)
            scale[j] =
                var[j] > 0.0 ? std::sqrt(var[j] / static_cast<double>(xtr.size())) : 1.0;
        auto transform = [&](const std::vector<double>& row) {
            std::vector<double> out(dims);
            for (std::size_t j = 0; j < dims; ++j) out[j] = (row[j] - mean[j]) / scale[j];
            return out;
        };
        for (auto& row : xtr) row = transform(row);

        const texture::LdaModel lda = texture::lda_fit(xtr, ytr);
        const texture::SvmModel svm = texture::svm_rbf_fit(xtr, ytr);
        for (std::size_t idx : fold.test) {
            const std::vector<double> x = transform(feats[idx]);
            const double ls = texture::lda_score(lda, x);
            const double ss = texture::svm_score(svm, x);
            const bool truth = labels[idx] == 1;
            (truth ? (ls >= 0 ? lda_cm.tp : lda_cm.fn) : (ls >= 0 ? lda_cm.fp : lda_cm.tn))++;
            (truth ? (ss >= 0 ? svm_cm.tp : svm_cm.fn) : (ss >= 0 ? svm_cm.fp : svm_cm.tn))++;
            lda_scores.push_back(ls);
            svm_scores.push_back(ss);
            pooled_labels.push_back(labels[idx]);
            pooled_index.push_back(idx);
        }
    }

    json summary{{"version", kVersion},
                 {"config_hash", cfg.hash_hex()},
                 {"seed", cfg.seed},
                 {"task", "binary"},
                 {"samples", pooled_labels.size()}};
    const metrics::Curve lda_roc = metrics::roc_curve(lda_scores, pooled_labels);
    const metrics::Curve svm_roc = metrics::roc_curve(svm_scores, pooled_labels);
    summary["lda"] = binary_metrics_json(lda_cm, metrics::classification_metrics(lda_cm),
                                         lda_roc.auc,
                                         metrics::pr_curve(lda_scores, pooled_labels).auc);
    summary["svm"] = binary_metrics_json(svm_cm, metrics::classification_metrics(svm_cm),
                                         svm_roc.auc,
                                         metrics::pr_curve(svm_scores, pooled_labels).auc);
    write_json(fs::path(cfg.out_dir) / "baseline_metrics.json", summary);
    write_curve_csv(fs::path(cfg.out_dir) / "baseline_roc_lda.csv", cfg, lda_roc, "fpr", "tpr");
    write_curve_csv(fs::path(cfg.out_dir) / "baseline_roc_svm.csv", cfg, svm_roc, "fpr", "tpr");

    std::ostringstream os;
    os << "# " << artifact_comment(cfg) << "\nindex,true,lda_score,svm_score\n";
    for (std::size_t i = 0; i < pooled_index.size(); ++i)
        os << pooled_index[i] << "," << binary_class_name(pooled_labels[i]) << ","
           << num(lda_scores[i]) << "," << num(svm_scores[i]) << "\n";
    write_text(fs::path(cfg.out_dir) / "baseline_predictions.csv", os.str());
}

namespace {

struct PredictionRow {
    std::string truth;
    std::string pred;
    double confidence = 0.0;
};

std::vector<PredictionRow> read_predictions(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open '" + path.string() + "' (run evaluate first)");
    std::vector<PredictionRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string idx, truth, pred, conf;
        std::getline(ls, idx, ',');
        std::getline(ls, truth, ',');
        std::getline(ls, pred, ',');
        std::getline(ls, conf, ',');
        rows.push_back({truth, pred, std::stod(conf)});
    }
    return rows;
}

} // namespace

void cmd_trust(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("trust needs an output directory (--out)");
    const std::string run = cfg.run_dir.empty() ? cfg.out_dir : cfg.run_dir;
    echo_config(cfg, "trust");

    const auto rows = read_predictions(fs::path(run) / "predictions.csv");
    if (rows.empty()) throw DataError("no prediction records found under '" + run + "'");

    metrics::TrustConfig tc;
    std::map<std::string, std::vector<double>> per_class;
    for (const auto& r : rows) {
        metrics::TrustRecord rec;
        rec.confidence = r.confidence;
        rec.correct = r.truth == r.pred;
        per_class[r.truth].push_back(metrics::qa_trust(rec, tc));
    }

    const auto spectrum = metrics::trust_spectrum(per_class);
    json summary{{"version", kVersion},
                 {"config_hash", cfg.hash_hex()},
                 {"seed", cfg.seed},
                 {"alpha", tc.alpha},
                 {"beta", tc.beta},
                 {"gamma", tc.gamma},
                 {"spectrum", json::object()},
                 {"net_trust_score", metrics::net_trust_score(spectrum)}};
    for (const auto& [cls, t] : spectrum) summary["spectrum"][cls] = t;
    write_json(fs::path(cfg.out_dir) / "trust.json", summary);

    std::ostringstream os;
    os << "# " << artifact_comment(cfg) << "\nclass,x,rho\n";
    for (const auto& [cls, qs] : per_class)
        for (const auto& s : metrics::trust_density(qs, tc))
            os << cls << "," << num(s.x) << "," << num(s.rho) << "\n";
    write_text(fs::path(cfg.out_dir) / "trust_density.csv", os.str());
}

void cmd_explain(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("explain needs an output directory (--out)");
    echo_config(cfg, "explain");
    Prepared p = prepare(cfg);
    const model::TaskMode mode = model::task_from_name(cfg.task);
    const std::string run = cfg.run_dir.empty() ? cfg.out_dir : cfg.run_dir;
    const auto folds = data::kfold_split(p.burn_small, cfg.folds, cfg.seed);
    model::BurnNetConfig nc = net_config(cfg, p);

    // Guided Grad-CAM++ of every out-of-fold sample, grouped by true class.
    std::map<std::string, std::vector<saliency::Heatmap>> by_class;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const fs::path ckpt_path = fs::path(run) / fold_ckpt_name(f);
        if (!fs::exists(ckpt_path))
            throw DataError("missing checkpoint '" + ckpt_path.string() +
                            "' (run train first)");
        model::TargetClassifier clf = model::build_classifier(nc, mode);
        clf.load_params(Checkpoint::load(ckpt_path.string()));
        for (std::size_t idx : folds[f].test) {
            const auto& [img, cls] = p.burn_small.items[idx];
            const std::size_t target = task_label(cls, mode);
            saliency::Heatmap map = saliency::guided_gradcam_pp(
                clf, img.to_tensor(), target);
            const std::string key = mode == model::TaskMode::Binary
                                        ? data::class_name(cls)
                                        : multi_class_name(target);
            by_class[key].push_back(std::move(map));
        }
    }
    if (by_class.empty()) throw DataError("no samples to explain");

    std::ostringstream prof;
    prof << "# " << artifact_comment(cfg) << "\nclass,row,mean,std\n";
    json summary{{"version", kVersion},
                 {"config_hash", cfg.hash_hex()},
                 {"seed", cfg.seed},
                 {"classes", json::object()}};
    for (const auto& [cls, maps] : by_class) {
        const saliency::Heatmap avg = saliency::class_average_heatmap(maps);
        std::string lower = cls;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
        saliency::write_heatmap_pgm(
            (fs::path(cfg.out_dir) / ("heatmap_" + lower + ".pgm")).string(), avg,
            artifact_comment(cfg));
        saliency::write_heatmap_csv(
            (fs::path(cfg.out_dir) / ("heatmap_" + lower + ".csv")).string(), avg,
            artifact_comment(cfg));
        const auto profile = saliency::depth_profile(avg);
        double integrated = 0.0;
        for (std::size_t r = 0; r < profile.size(); ++r) {
            prof << cls << "," << r << "," << num(profile[r].mean) << ","
                 << num(profile[r].stddev) << "\n";
            integrated += profile[r].mean;
        }
        summary["classes"][cls] = {{"samples", maps.size()},
                                   {"integrated_profile_mean", integrated}};
    }
    write_text(fs::path(cfg.out_dir) / "depth_profiles.csv", prof.str());
    write_json(fs::path(cfg.out_dir) / "explain.json", summary);
}

namespace {

std::vector<std::array<double, 3>> read_csv3(const fs::path& path) {
    std::ifstream is(path);
    std::vector<std::array<double, 3>> rows;
    if (!is) return rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::array<double, 3> r{};
        std::string cell;
        for (int i = 0; i < 3 && std::getline(ls, cell, ','); ++i) {
            try {
                r[i] = std::stod(cell);
            } catch (const std::exception&) {
                r[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace

void cmd_report(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw UsageError("report needs an output directory (--out)");
    const std::string run = cfg.run_dir.empty() ? cfg.out_dir : cfg.run_dir;
    echo_config(cfg, "report");
    bool wrote_any = false;

    if (fs::exists(fs::path(run) / "roc.csv")) {
        svg::Series s{"model", {}};
        for (const auto& r : read_csv3(fs::path(run) / "roc.csv")) s.points.push_back({r[1], r[2]});
        std::vector<svg::Series> series{s};
        if (fs::exists(fs::path(run) / "baseline_roc_lda.csv")) {
            svg::Series b{"glcm+lda", {}};
            for (const auto& r : read_csv3(fs::path(run) / "baseline_roc_lda.csv"))
                b.points.push_back({r[1], r[2]});
            series.push_back(b);
        }
        svg::write_line_plot((fs::path(cfg.out_dir) / "roc.svg").string(),
                             "Receiver operating characteristic", "false positive rate",
                             "true positive rate", series, artifact_comment(cfg));
        wrote_any = true;
    }
    if (fs::exists(fs::path(run) / "pr.csv")) {
        svg::Series s{"model", {}};
        for (const auto& r : read_csv3(fs::path(run) / "pr.csv")) s.points.push_back({r[1], r[2]});
        svg::write_line_plot((fs::path(cfg.out_dir) / "pr.svg").string(), "Precision-recall",
                             "recall", "precision", {s}, artifact_comment(cfg));
        wrote_any = true;
    }
    {
        std::vector<svg::Series> traces;
        if (fs::exists(fs::path(run) / "source_trace.csv")) {
            svg::Series s{"source", {}};
            for (const auto& r : read_csv3(fs::path(run) / "source_trace.csv"))
                s.points.push_back({r[0], r[1]});
            traces.push_back(s);
        }
        for (std::size_t f = 0; f < cfg.folds; ++f) {
            char tname[40];
            std::snprintf(tname, sizeof tname, "fold%02zu_trace.csv", f);
            if (!fs::exists(fs::path(run) / tname)) continue;
            if (f % std::max<std::size_t>(1, cfg.folds / 4) != 0) continue; // keep it legible
            svg::Series s{std::string("fold ") + std::to_string(f), {}};
            for (const auto& r : read_csv3(fs::path(run) / tname))
                s.points.push_back({r[0], r[1]});
            traces.push_back(s);
        }
        if (!traces.empty()) {
            svg::write_line_plot((fs::path(cfg.out_dir) / "loss.svg").string(),
                                 "Training loss", "epoch", "loss", traces,
                                 artifact_comment(cfg));
            wrote_any = true;
        }
    }
    if (fs::exists(fs::path(run) / "trust_density.csv")) {
        std::ifstream is(fs::path(run) / "trust_density.csv");
        std::map<std::string, svg::Series> per_class;
        std::string line;
        bool header_seen = false;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header_seen) {
                header_seen = true;
                continue;
            }
            std::istringstream ls(line);
            std::string cls, xs, rs;
            std::getline(ls, cls, ',');
            std::getline(ls, xs, ',');
            std::getline(ls, rs, ',');
            per_class[cls].label = cls;
            per_class[cls].points.push_back({std::stod(xs), std::stod(rs)});
        }
        std::vector<svg::Series> series;
        for (auto& [cls, s] : per_class) series.push_back(std::move(s));
        if (!series.empty()) {
            svg::write_line_plot((fs::path(cfg.out_dir) / "trust_density.svg").string(),
                                 "Trust density", "question-answer trust", "density", series,
                                 artifact_comment(cfg));
            wrote_any = true;
        }
    }
    if (fs::exists(fs::path(run) / "depth_profiles.csv")) {
        std::ifstream is(fs::path(run) / "depth_profiles.csv");
        std::map<std::string, svg::Series> per_class;
        std::string line;
        bool header_seen = false;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header_seen) {
                header_seen = true;
                continue;
            }
            std::istringstream ls(line);
            std::string cls, row, mean;
            std::getline(ls, cls, ',');
            std::getline(ls, row, ',');
            std::getline(ls, mean, ',');
            per_class[cls].label = cls;
            per_class[cls].points.push_back({std::stod(row), std::stod(mean)});
        }
        std::vector<svg::Series> series;
        for (auto& [cls, s] : per_class) series.push_back(std::move(s));
        if (!series.empty()) {
            svg::write_line_plot((fs::path(cfg.out_dir) / "depth_profiles.svg").string(),
                                 "Heatmap depth profiles", "depth row", "mean intensity",
                                 series, artifact_comment(cfg));
            wrote_any = true;
        }
    }
    if (!wrote_any)
        std::cerr << "warning: nothing to report under '" << run << "'\n";
}

EvaluationSummary read_evaluation_summary(const std::string& run_dir) {
    std::ifstream is(fs::path(run_dir) / "metrics.json");
    if (!is) throw DataError("cannot open metrics.json under '" + run_dir + "'");
    json j;
    is >> j;
    EvaluationSummary s;
    if (j.contains("binary")) {
        const auto& b = j["binary"];
        s.binary_cm = {b["confusion"]["tp"].get<std::uint64_t>(),
                       b["confusion"]["fp"].get<std::uint64_t>(),
                       b["confusion"]["fn"].get<std::uint64_t>(),
                       b["confusion"]["tn"].get<std::uint64_t>()};
        s.binary = metrics::classification_metrics(s.binary_cm);
        s.roc_auc = b["roc_auc"].get<double>();
        s.pr_auc = b["pr_auc"].get<double>();
    }
    if (j.contains("multiclass"))
        s.multiclass_accuracy = j["multiclass"]["accuracy"].get<double>();
    return s;
}

} // namespace bnet::cli
