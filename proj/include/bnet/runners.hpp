#pragma once

#include "bnet/data.hpp"
#include "bnet/metrics.hpp"
#include "bnet/model.hpp"

#include <cstdint>
#include <string>

namespace bnet::cli {

/// Effective settings for one command invocation. The canonical text form
/// is echoed into the output directory and hashed into every artifact.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string data_dir;    // dataset root (class-per-directory PGM tree)
    std::string out_dir;     // where this command writes
    std::string run_dir;     // a previous train/evaluate output to consume
    std::string task = "binary";

    // generate
    std::size_t per_class = 80;
    std::size_t rows = 213;
    std::size_t cols = 338;
    data::PhantomParams phantom;

    // preprocessing
    std::size_t downsample_factor = 10;

    // training protocol
    bool pretrain = true;
    bool freeze_encoder = false;
    std::size_t source_epochs = 2000;
    std::size_t epochs = 2000;
    std::size_t batch = 32;
    std::size_t folds = 20;
    bool resume = true;
    bool quiet = false;

    // explanation
    std::size_t gradcam_pos = static_cast<std::size_t>(-1);

    std::string canonical_text() const;
    std::string hash_hex() const;
};

void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_baseline(const RunConfig& cfg);
void cmd_trust(const RunConfig& cfg);
void cmd_explain(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

/// Pooled out-of-fold evaluation artifacts, reused by the acceptance suite.
struct EvaluationSummary {
    metrics::BinaryConfusion binary_cm;
    metrics::BinaryMetrics binary;
    double roc_auc = 0.0;
    double pr_auc = 0.0;
    double multiclass_accuracy = 0.0;
};

EvaluationSummary read_evaluation_summary(const std::string& run_dir);

} // namespace bnet::cli
