// gfsl — generative few-shot transfer learning pipeline.
//
// Subcommands: synth, pretrain, finetune, evaluate, experiment, gradcheck.
// Exit codes: 0 success, 1 usage error, 2 data/config error,
// 3 training divergence or failed numeric self-check, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gfsl/checkpoint.hpp"
#include "gfsl/config.hpp"
#include "gfsl/dataset.hpp"
#include "gfsl/error.hpp"
#include "gfsl/experiment.hpp"
#include "gfsl/gradcheck.hpp"
#include "gfsl/model.hpp"
#include "gfsl/sampler.hpp"
#include "gfsl/synthetic.hpp"
#include "gfsl/train.hpp"

namespace fs = std::filesystem;
using namespace gfsl;

namespace {

struct Options {
    std::string config_path;
    std::string data_dir;
    std::string encoder_path;
    std::string model_path;
    std::string out_path;
    std::string shots = "20";
    std::uint64_t seed = 1;
    bool seed_given = false;
    int n_per_class = 250;
    int size = 64;
    double threshold = 0.5;
    bool sweep = false;
    bool balanced_test = false;
    int repeats = 10;
};

RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        return RunConfig{};
    }
    return RunConfig::from_file(path);
}

// Architecture comes from the checkpoint when it is self-describing,
// otherwise from the config.
ModelArch resolve_arch(const ParameterSet& checkpoint, const RunConfig& config) {
    if (checkpoint.contains("meta.arch")) {
        return extract_arch(checkpoint);
    }
    return config.model;
}

int cmd_synth(const Options& opt) {
    generate_synthetic_dataset(opt.n_per_class, opt.size, opt.seed, opt.out_path);
    std::cout << "wrote " << 2 * opt.n_per_class << " images (" << opt.size << "x" << opt.size
              << ") under " << opt.out_path << "\n";
    return 0;
}

int cmd_pretrain(const Options& opt) {
    RunConfig config = load_config(opt.config_path);
    if (!opt.data_dir.empty()) config.source_data = opt.data_dir;
    if (opt.seed_given) config.pretrain.seed = opt.seed;
    if (config.source_data.empty()) {
        throw ParseError("pretrain: no data directory (use --data or source_data in the config)");
    }

    const LabeledDataset dataset = load_dataset(config.source_data, config.model.image_size);
    std::cout << "pretraining on " << dataset.items.size() << " images for "
              << config.pretrain.epochs << " epochs\n";
    PretrainResult result = pretrain_autoencoder(dataset, config.pretrain, config.model);

    save_checkpoint(result.model.params, opt.out_path);
    write_train_log_csv(result.log, opt.out_path + ".train_log.csv");
    config.echo_to(opt.out_path + ".resolved.json");
    std::cout << "final train MSE " << result.log.records.back().train_loss << ", checkpoint "
              << opt.out_path << "\n";
    return 0;
}

int cmd_finetune(const Options& opt) {
    RunConfig config = load_config(opt.config_path);
    if (!opt.data_dir.empty()) config.target_data = opt.data_dir;
    if (config.target_data.empty()) {
        throw ParseError("finetune: no data directory (use --data or target_data in the config)");
    }
    ShotSpec shot = opt.shots.empty() ? config.shot : parse_shot_spec(opt.shots);
    if (opt.seed_given) config.finetune.seed = opt.seed;
    shot.seed = config.finetune.seed;
    config.shot = shot;

    const ParameterSet encoder = load_checkpoint(opt.encoder_path);
    const ModelArch arch = resolve_arch(encoder, config);
    config.model = arch;

    const LabeledDataset dataset = load_dataset(config.target_data, arch.image_size);
    const LabeledDataset subset = select_few_shot(dataset, shot);

    ClassifierModel model = build_classifier_from_encoder(encoder, arch, config.finetune.seed);
    TrainConfig finetune = config.finetune;
    finetune.weighted_sampling = finetune.weighted_sampling || shot.mode == ShotMode::all_balanced;
    std::cout << "fine-tuning head on " << subset.items.size() << " items ("
              << subset.count(0) << "/" << subset.count(1) << " per class)\n";
    const TrainLog log = finetune_classifier(model, subset, finetune);

    save_checkpoint(model.params, opt.out_path);
    write_train_log_csv(log, opt.out_path + ".train_log.csv");
    config.echo_to(opt.out_path + ".resolved.json");
    std::cout << "trained " << log.records.size() << " epochs, final loss "
              << log.records.back().val_loss << ", checkpoint " << opt.out_path << "\n";
    return 0;
}

int cmd_evaluate(const Options& opt) {
    RunConfig config = load_config(opt.config_path);
    if (!opt.data_dir.empty()) config.target_data = opt.data_dir;
    if (config.target_data.empty()) {
        throw ParseError("evaluate: no data directory (use --data or target_data in the config)");
    }
    config.eval_threshold = opt.threshold;
    config.eval_sweep = config.eval_sweep || opt.sweep;
    config.eval_balanced_test = config.eval_balanced_test || opt.balanced_test;

    const ParameterSet checkpoint = load_checkpoint(opt.model_path);
    const ClassifierModel model = restore_classifier(checkpoint);
    const LabeledDataset test = load_dataset(config.target_data, model.arch.image_size);

    const EvaluationReport report = evaluate_model(
        model, test, config.eval_threshold, config.eval_sweep, config.eval_balanced_test,
        opt.seed, config.eval_confidence, config.finetune.batch_size);

    write_evaluation_json(report, opt.out_path);
    const fs::path csv = fs::path(opt.out_path).replace_extension(".csv");
    write_evaluation_csv(report, csv);
    config.echo_to(opt.out_path + ".resolved.json");

    const MetricSet& m = report.at_threshold;
    std::printf("threshold %.2f: sensitivity %.4f specificity %.4f f1 %.4f accuracy %.4f mcc %.4f\n",
                m.threshold, m.sensitivity, m.specificity, m.f1, m.accuracy, m.mcc);
    std::printf("sensitivity %d/%lld CI [%.4f, %.4f], specificity %d/%lld CI [%.4f, %.4f]\n",
                static_cast<int>(report.cm.tp), report.positives, report.sensitivity_ci.low,
                report.sensitivity_ci.high, static_cast<int>(report.cm.tn), report.negatives,
                report.specificity_ci.low, report.specificity_ci.high);
    std::cout << "report " << opt.out_path << "\n";
    return 0;
}

int cmd_experiment(const Options& opt) {
    RunConfig config = load_config(opt.config_path);
    if (!opt.data_dir.empty()) config.target_data = opt.data_dir;
    if (config.target_data.empty()) {
        throw ParseError("experiment: no data directory (use --data or target_data in the config)");
    }
    ShotSpec shot = opt.shots.empty() ? config.shot : parse_shot_spec(opt.shots);
    if (opt.seed_given) config.finetune.seed = opt.seed;
    shot.seed = config.finetune.seed;
    config.shot = shot;
    config.eval_repeats = opt.repeats;

    const ParameterSet encoder = load_checkpoint(opt.encoder_path);
    const ModelArch arch = resolve_arch(encoder, config);
    config.model = arch;
    const LabeledDataset train = load_dataset(config.target_data, arch.image_size);

    // Test split: sibling "test" directory when the target points at "train",
    // otherwise the same directory.
    fs::path test_dir = config.target_data;
    if (test_dir.filename() == "train" && fs::is_directory(test_dir.parent_path() / "test")) {
        test_dir = test_dir.parent_path() / "test";
    }
    const LabeledDataset test = load_dataset(test_dir, arch.image_size);

    ExperimentConfig experiment;
    experiment.finetune = config.finetune;
    experiment.arch = arch;
    experiment.threshold = config.eval_threshold;
    experiment.balanced_test = config.eval_balanced_test;
    experiment.confidence = config.eval_confidence;

    std::cout << "running " << config.eval_repeats << " repeats, test split " << test_dir << "\n";
    const ExperimentReport report =
        run_repeated_experiment(encoder, train, test, shot, config.eval_repeats, experiment);

    fs::create_directories(opt.out_path);
    write_experiment_json(report, fs::path(opt.out_path) / "report.json");
    write_experiment_csv(report, fs::path(opt.out_path) / "report.csv");
    config.echo_to(fs::path(opt.out_path) / "resolved_config.json");

    std::cout << "sensitivity " << report.sensitivity.summary << "\n"
              << "specificity " << report.specificity.summary << "\n"
              << "f1 " << report.f1.summary << "\n"
              << "accuracy " << report.accuracy.summary << "\n"
              << "mcc " << report.mcc.summary << "\n";
    return 0;
}

int cmd_gradcheck(const Options& opt) {
    const auto entries = run_gradient_checks(opt.seed);
    bool all_passed = true;
    for (const auto& entry : entries) {
        std::printf("%-32s max rel err %.3e  (tol %.0e)  %s\n", entry.layer.c_str(),
                    entry.max_rel_error, entry.tolerance, entry.passed ? "ok" : "FAIL");
        all_passed = all_passed && entry.passed;
    }
    if (!all_passed) {
        std::cerr << "gradient check failed\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative few-shot transfer learning toolkit"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic PGM dataset");
    synth->add_option("--out", opt.out_path, "Output split directory")->required();
    synth->add_option("--n", opt.n_per_class, "Images per class");
    synth->add_option("--size", opt.size, "Square image side in pixels");
    synth->add_option("--seed", opt.seed, "Generator seed");

    CLI::App* pretrain = app.add_subcommand("pretrain", "Pretrain the autoencoder");
    pretrain->add_option("--config", opt.config_path, "JSON config file");
    pretrain->add_option("--data", opt.data_dir, "Training split directory");
    pretrain->add_option("--out", opt.out_path, "Checkpoint output path")->required();
    pretrain->add_option("--seed", opt.seed, "Training seed")->trigger_on_parse()
        ->each([&opt](const std::string&) { opt.seed_given = true; });

    CLI::App* finetune = app.add_subcommand("finetune", "Fine-tune the classifier head");
    finetune->add_option("--config", opt.config_path, "JSON config file");
    finetune->add_option("--encoder", opt.encoder_path, "Encoder checkpoint")->required();
    finetune->add_option("--data", opt.data_dir, "Training split directory");
    finetune->add_option("--shots", opt.shots, "all, all-balanced, or K per class");
    finetune->add_option("--seed", opt.seed, "Selection/training seed")->trigger_on_parse()
        ->each([&opt](const std::string&) { opt.seed_given = true; });
    finetune->add_option("--out", opt.out_path, "Checkpoint output path")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a classifier checkpoint");
    evaluate->add_option("--config", opt.config_path, "JSON config file");
    evaluate->add_option("--model", opt.model_path, "Classifier checkpoint")->required();
    evaluate->add_option("--data", opt.data_dir, "Test split directory");
    evaluate->add_option("--threshold", opt.threshold, "Decision threshold");
    evaluate->add_flag("--sweep", opt.sweep, "Also sweep thresholds 0..1");
    evaluate->add_flag("--balanced-test", opt.balanced_test,
                       "Subsample the majority test class to balance");
    evaluate->add_option("--seed", opt.seed, "Seed for the balanced subsample");
    evaluate->add_option("--out", opt.out_path, "Report JSON output path")->required();

    CLI::App* experiment = app.add_subcommand("experiment", "Repeated random-subset runs");
    experiment->add_option("--config", opt.config_path, "JSON config file");
    experiment->add_option("--encoder", opt.encoder_path, "Encoder checkpoint")->required();
    experiment->add_option("--data", opt.data_dir, "Training split directory");
    experiment->add_option("--shots", opt.shots, "all, all-balanced, or K per class");
    experiment->add_option("--repeats", opt.repeats, "Number of independent runs");
    experiment->add_option("--seed", opt.seed, "Base seed")->trigger_on_parse()
        ->each([&opt](const std::string&) { opt.seed_given = true; });
    experiment->add_option("--out", opt.out_path, "Report output directory")->required();

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference self-check");
    gradcheck->add_option("--seed", opt.seed, "Seed for the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(opt);
        if (pretrain->parsed()) return cmd_pretrain(opt);
        if (finetune->parsed()) return cmd_finetune(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt);
        if (experiment->parsed()) return cmd_experiment(opt);
        if (gradcheck->parsed()) return cmd_gradcheck(opt);
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        // Parse, data, shape, geometry and transfer problems are all content
        // errors in some input.
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
