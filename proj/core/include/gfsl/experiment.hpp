#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gfsl/dataset.hpp"
#include "gfsl/metrics.hpp"
#include "gfsl/model.hpp"
#include "gfsl/sampler.hpp"
#include "gfsl/train.hpp"

namespace gfsl {

// The label treated as positive for reporting: the strictly smaller class
// when counts differ (the minority is the disease analogue), class 1 on ties.
int positive_class(const LabeledDataset& dataset);

// Subsamples the majority test class without replacement (seeded) to match
// the minority count; already-balanced input comes back unchanged.
LabeledDataset balanced_test_view(const LabeledDataset& test_dataset, std::uint64_t seed);

// Positive-class probability per item, batched through the classifier.
// Scores are oriented so that 1.0 means "positive class" regardless of which
// label is positive.
struct ScoredDataset {
    std::vector<double> scores;
    std::vector<int> labels;  // 1 = positive class
    int positive_label = 1;
};

ScoredDataset score_dataset(const ClassifierModel& model, const LabeledDataset& dataset,
                            int batch_size);

// --- Single-model evaluation -------------------------------------------------

struct EvaluationReport {
    MetricSet at_threshold;
    ConfusionMatrix cm;
    WilsonInterval sensitivity_ci;
    WilsonInterval specificity_ci;
    std::vector<std::pair<double, MetricSet>> sweep;  // empty unless requested
    bool balanced_test = false;
    double confidence = 0.95;
    long long positives = 0;
    long long negatives = 0;
};

EvaluationReport evaluate_model(const ClassifierModel& model, const LabeledDataset& test,
                                double threshold, bool with_sweep, bool balanced,
                                std::uint64_t seed, double confidence, int batch_size);

void write_evaluation_json(const EvaluationReport& report, const std::filesystem::path& path);
void write_evaluation_csv(const EvaluationReport& report, const std::filesystem::path& path);

// --- Repeated-experiment protocol ---------------------------------------------

struct ExperimentConfig {
    TrainConfig finetune;  // finetune.seed is the base seed runs derive from
    ModelArch arch;
    double threshold = 0.5;
    bool balanced_test = false;
    double confidence = 0.95;
};

struct RunResult {
    int run = 0;
    std::uint64_t seed = 0;
    MetricSet metrics;
    ConfusionMatrix cm;
    WilsonInterval sensitivity_ci;
    WilsonInterval specificity_ci;
    int epochs_trained = 0;
};

struct MetricAggregate {
    double mean = 0.0;
    double std_dev = 0.0;       // sample standard deviation (n - 1)
    std::string summary;        // "87.00%±8.56%"
};

struct ExperimentReport {
    ShotSpec shot_spec;
    int repeats = 0;
    bool single_run = false;  // std reported as 0 from one run
    double threshold = 0.5;
    bool balanced_test = false;
    std::vector<RunResult> runs;
    MetricAggregate sensitivity, specificity, f1, accuracy, mcc;
};

// For run i: derive a run seed from (base seed, i), select the subset,
// build a fresh classifier from the same encoder checkpoint, fine-tune the
// head, and evaluate on the test split. Aggregates are mean and sample
// standard deviation per metric. Training failures are rethrown with the
// run index attached.
ExperimentReport run_repeated_experiment(const ParameterSet& encoder_checkpoint,
                                         const LabeledDataset& train_dataset,
                                         const LabeledDataset& test_dataset, const ShotSpec& shot,
                                         int repeats, const ExperimentConfig& config);

void write_experiment_json(const ExperimentReport& report, const std::filesystem::path& path);
void write_experiment_csv(const ExperimentReport& report, const std::filesystem::path& path);

// "90.00%±10.00%" from fractions in [0, 1].
std::string format_mean_std(double mean, double std_dev);

}  // namespace gfsl
