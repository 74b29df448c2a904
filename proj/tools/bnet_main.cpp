#include "bnet/common.hpp"
#include "bnet/runners.hpp"

#include <CLI11.hpp>

#include <iostream>

using bnet::cli::RunConfig;

namespace {

void add_common(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--seed", cfg.seed, "master seed recorded in every artifact");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_flag("--quiet", cfg.quiet, "suppress progress output");
    cmd->set_config("--config", "", "key=value config file; flags override file values");
}

void add_data(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--data", cfg.data_dir, "dataset directory (class-per-dir PGM tree)");
    cmd->add_option("--downsample", cfg.downsample_factor, "block-mean downsampling factor");
}

void add_protocol(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--task", cfg.task, "binary|multiclass");
    cmd->add_option("--epochs", cfg.epochs, "classifier training epochs");
    cmd->add_option("--source-epochs", cfg.source_epochs, "reconstruction pre-training epochs");
    cmd->add_option("--batch", cfg.batch, "minibatch size");
    cmd->add_option("--folds", cfg.folds, "cross-validation folds");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"burn-depth classification from B-mode ultrasound speckle texture"};
    app.require_subcommand(1);

    RunConfig cfg;
    cfg.out_dir = "out";

    auto* generate = app.add_subcommand("generate", "write a synthetic phantom dataset");
    add_common(generate, cfg);
    generate->add_option("--per-class", cfg.per_class, "phantoms per class");
    generate->add_option("--rows", cfg.rows, "phantom rows (depth)");
    generate->add_option("--cols", cfg.cols, "phantom columns (lateral)");
    generate->add_option("--correlation", cfg.phantom.correlation_px,
                         "speckle correlation length in pixels");
    generate->add_option("--attenuation", cfg.phantom.attenuation,
                         "depth attenuation coefficient");
    generate->add_option("--entry-brightness", cfg.phantom.entry_brightness,
                         "entry band brightness");

    auto* train = app.add_subcommand("train", "two-stage training with k-fold classifiers");
    add_common(train, cfg);
    add_data(train, cfg);
    add_protocol(train, cfg);
    bool no_pretrain = false, no_resume = false;
    train->add_flag("--no-pretrain", no_pretrain, "skip reconstruction pre-training");
    train->add_flag("--freeze-encoder", cfg.freeze_encoder,
                    "train only the head after transfer");
    train->add_flag("--no-resume", no_resume, "retrain even when checkpoints match");

    auto* evaluate = app.add_subcommand("evaluate", "pooled out-of-fold metrics and curves");
    add_common(evaluate, cfg);
    add_data(evaluate, cfg);
    add_protocol(evaluate, cfg);
    evaluate->add_option("--run", cfg.run_dir, "training output directory (default: --out)");

    auto* baseline = app.add_subcommand("baseline", "texture-feature LDA/SVM on the same folds");
    add_common(baseline, cfg);
    add_data(baseline, cfg);
    baseline->add_option("--folds", cfg.folds, "cross-validation folds");

    auto* trust = app.add_subcommand("trust", "trust density, spectrum and net trust score");
    add_common(trust, cfg);
    trust->add_option("--run", cfg.run_dir, "evaluation output directory (default: --out)");

    auto* explain = app.add_subcommand("explain", "guided Grad-CAM++ class maps and profiles");
    add_common(explain, cfg);
    add_data(explain, cfg);
    add_protocol(explain, cfg);
    explain->add_option("--run", cfg.run_dir, "training output directory (default: --out)");
    explain->add_option("--gradcam-layer", cfg.gradcam_pos,
                        "trace position of the explained activation");

    auto* report = app.add_subcommand("report", "render SVG plots from run artifacts");
    add_common(report, cfg);
    report->add_option("--run", cfg.run_dir, "artifact directory (default: --out)");
    report->add_option("--folds", cfg.folds, "fold count for trace plots");

    try {
        app.parse(argc, argv);
        cfg.pretrain = !no_pretrain;
        cfg.resume = !no_resume;
        if (generate->parsed()) bnet::cli::cmd_generate(cfg);
        if (train->parsed()) bnet::cli::cmd_train(cfg);
        if (evaluate->parsed()) bnet::cli::cmd_evaluate(cfg);
        if (baseline->parsed()) bnet::cli::cmd_baseline(cfg);
        if (trust->parsed()) bnet::cli::cmd_trust(cfg);
        if (explain->parsed()) bnet::cli::cmd_explain(cfg);
        if (report->parsed()) bnet::cli::cmd_report(cfg);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const bnet::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const bnet::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const bnet::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
