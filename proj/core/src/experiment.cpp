#include "gfsl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gfsl/error.hpp"

namespace gfsl {

using nlohmann::json;

int positive_class(const LabeledDataset& dataset) {
    if (dataset.class_counts.size() < 2) {
        return 1;
    }
    const int c0 = dataset.class_counts[0];
    const int c1 = dataset.class_counts[1];
    if (c0 < c1) return 0;
    return 1;
}

LabeledDataset balanced_test_view(const LabeledDataset& test_dataset, std::uint64_t seed) {
    if (test_dataset.class_counts.size() < 2) {
        return test_dataset;
    }
    const int minority_count = *std::min_element(test_dataset.class_counts.begin(),
                                                 test_dataset.class_counts.end());
    ShotSpec spec;
    spec.mode = ShotMode::k_shot;
    spec.k = minority_count;
    spec.seed = seed;
    return select_few_shot(test_dataset, spec);
}

ScoredDataset score_dataset(const ClassifierModel& model, const LabeledDataset& dataset,
                            int batch_size) {
    if (dataset.items.empty()) {
        throw DataError("score_dataset: empty dataset");
    }
    if (batch_size < 1) {
        throw DataError("score_dataset: batch_size must be >= 1");
    }
    ScoredDataset scored;
    scored.positive_label = positive_class(dataset);
    scored.scores.reserve(dataset.items.size());
    scored.labels.reserve(dataset.items.size());

    const int size = dataset.image_size;
    const std::size_t n = dataset.items.size();
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(begin + static_cast<std::size_t>(batch_size), n);
        Tensor batch({static_cast<int>(end - begin), 1, size, size});
        for (std::size_t k = begin; k < end; ++k) {
            const Tensor& image = dataset.items[k].image;
            std::copy(image.values().begin(), image.values().end(),
                      batch.data() + (k - begin) * image.size());
        }
        const Tensor probabilities = classifier_forward(model, batch);
        for (std::size_t k = begin; k < end; ++k) {
            const double p = static_cast<double>(probabilities[k - begin]);
            // The head scores class 1; reorient when class 0 is positive.
            scored.scores.push_back(scored.positive_label == 1 ? p : 1.0 - p);
            scored.labels.push_back(dataset.items[k].label == scored.positive_label ? 1 : 0);
        }
    }
    return scored;
}

EvaluationReport evaluate_model(const ClassifierModel& model, const LabeledDataset& test,
                                double threshold, bool with_sweep, bool balanced,
                                std::uint64_t seed, double confidence, int batch_size) {
    const LabeledDataset* view = &test;
    LabeledDataset balanced_view;
    if (balanced) {
        balanced_view = balanced_test_view(test, seed);
        view = &balanced_view;
    }
    const ScoredDataset scored = score_dataset(model, *view, batch_size);

    EvaluationReport report;
    report.balanced_test = balanced;
    report.confidence = confidence;
    report.cm = confusion(binarize(scored.scores, threshold), scored.labels);
    report.at_threshold = metrics(report.cm, threshold);
    report.positives = report.cm.tp + report.cm.fn;
    report.negatives = report.cm.tn + report.cm.fp;
    report.sensitivity_ci =
        report.positives > 0 ? wilson_interval(report.cm.tp, report.positives, confidence)
                             : WilsonInterval{0.0, 1.0};
    report.specificity_ci =
        report.negatives > 0 ? wilson_interval(report.cm.tn, report.negatives, confidence)
                             : WilsonInterval{0.0, 1.0};
    if (with_sweep) {
        report.sweep = threshold_sweep(scored.scores, scored.labels, default_threshold_grid());
    }
    return report;
}

namespace {

json metric_set_to_json(const MetricSet& m) {
    return json{{"sensitivity", m.sensitivity}, {"specificity", m.specificity},
                {"f1", m.f1},                   {"accuracy", m.accuracy},
                {"mcc", m.mcc},                 {"threshold", m.threshold},
                {"zero_denominator", m.zero_denominator}};
}

json confusion_to_json(const ConfusionMatrix& cm) {
    return json{{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

json interval_to_json(const WilsonInterval& ci) {
    return json{{"low", ci.low}, {"high", ci.high}};
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

const char* shot_mode_name(ShotMode mode) {
    switch (mode) {
        case ShotMode::all: return "all";
        case ShotMode::all_balanced: return "all_balanced";
        case ShotMode::k_shot: return "k_shot";
    }
    return "unknown";
}

MetricAggregate aggregate(const std::vector<double>& values, bool as_percent) {
    MetricAggregate agg;
    const std::size_t n = values.size();
    if (n == 0) return agg;
    agg.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - agg.mean) * (v - agg.mean);
        }
        agg.std_dev = std::sqrt(ss / static_cast<double>(n - 1));
    }
    if (as_percent) {
        agg.summary = format_mean_std(agg.mean, agg.std_dev);
    } else {
        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%.4f±%.4f", agg.mean, agg.std_dev);
        agg.summary = buffer;
    }
    return agg;
}

}  // namespace

std::string format_mean_std(double mean, double std_dev) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.2f%%±%.2f%%", mean * 100.0, std_dev * 100.0);
    return buffer;
}

ExperimentReport run_repeated_experiment(const ParameterSet& encoder_checkpoint,
                                         const LabeledDataset& train_dataset,
                                         const LabeledDataset& test_dataset, const ShotSpec& shot,
                                         int repeats, const ExperimentConfig& config) {
    if (repeats < 1) {
        throw DataError("run_repeated_experiment: repeats must be >= 1");
    }
    ExperimentReport report;
    report.shot_spec = shot;
    report.repeats = repeats;
    report.single_run = repeats == 1;
    report.threshold = config.threshold;
    report.balanced_test = config.balanced_test;

    for (int run = 0; run < repeats; ++run) {
        const std::uint64_t run_seed =
            Rng::derive(config.finetune.seed, 0x72756E00ull + static_cast<std::uint64_t>(run))
                .next_u64();
        try {
            ShotSpec run_shot = shot;
            run_shot.seed = run_seed;
            const LabeledDataset subset = select_few_shot(train_dataset, run_shot);

            ClassifierModel classifier =
                build_classifier_from_encoder(encoder_checkpoint, config.arch, run_seed);

            TrainConfig finetune = config.finetune;
            finetune.seed = run_seed;
            finetune.weighted_sampling =
                config.finetune.weighted_sampling || shot.mode == ShotMode::all_balanced;
            const TrainLog log = finetune_classifier(classifier, subset, finetune);

            const EvaluationReport eval =
                evaluate_model(classifier, test_dataset, config.threshold, false,
                               config.balanced_test, run_seed, config.confidence,
                               config.finetune.batch_size);

            RunResult result;
            result.run = run;
            result.seed = run_seed;
            result.metrics = eval.at_threshold;
            result.cm = eval.cm;
            result.sensitivity_ci = eval.sensitivity_ci;
            result.specificity_ci = eval.specificity_ci;
            result.epochs_trained = static_cast<int>(log.records.size());
            report.runs.push_back(result);
        } catch (const Error& e) {
            throw TrainingDivergedError("experiment run " + std::to_string(run) + " failed: " +
                                        e.what());
        }
    }

    const auto collect = [&](auto member) {
        std::vector<double> values;
        values.reserve(report.runs.size());
        for (const RunResult& r : report.runs) {
            values.push_back(r.metrics.*member);
        }
        return values;
    };
    report.sensitivity = aggregate(collect(&MetricSet::sensitivity), true);
    report.specificity = aggregate(collect(&MetricSet::specificity), true);
    report.f1 = aggregate(collect(&MetricSet::f1), true);
    report.accuracy = aggregate(collect(&MetricSet::accuracy), true);
    report.mcc = aggregate(collect(&MetricSet::mcc), false);
    return report;
}

void write_evaluation_json(const EvaluationReport& report, const std::filesystem::path& path) {
    json j{{"metrics", metric_set_to_json(report.at_threshold)},
           {"confusion", confusion_to_json(report.cm)},
           {"sensitivity_ci", interval_to_json(report.sensitivity_ci)},
           {"specificity_ci", interval_to_json(report.specificity_ci)},
           {"confidence", report.confidence},
           {"balanced_test", report.balanced_test},
           {"positives", report.positives},
           {"negatives", report.negatives}};
    if (!report.sweep.empty()) {
        json sweep = json::array();
        for (const auto& [threshold, m] : report.sweep) {
            sweep.push_back(metric_set_to_json(m));
        }
        j["sweep"] = std::move(sweep);
    }
    write_json_file(j, path);
}

void write_evaluation_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.precision(12);
    out << "threshold,sensitivity,specificity,f1,accuracy,mcc\n";
    const auto row = [&out](const MetricSet& m) {
        out << m.threshold << "," << m.sensitivity << "," << m.specificity << "," << m.f1 << ","
            << m.accuracy << "," << m.mcc << "\n";
    };
    if (report.sweep.empty()) {
        row(report.at_threshold);
    } else {
        for (const auto& [threshold, m] : report.sweep) {
            row(m);
        }
    }
}

void write_experiment_json(const ExperimentReport& report, const std::filesystem::path& path) {
    json runs = json::array();
    for (const RunResult& r : report.runs) {
        runs.push_back(json{{"run", r.run},
                            {"seed", r.seed},
                            {"metrics", metric_set_to_json(r.metrics)},
                            {"confusion", confusion_to_json(r.cm)},
                            {"sensitivity_ci", interval_to_json(r.sensitivity_ci)},
                            {"specificity_ci", interval_to_json(r.specificity_ci)},
                            {"epochs_trained", r.epochs_trained}});
    }
    const auto agg = [](const MetricAggregate& a) {
        return json{{"mean", a.mean}, {"std", a.std_dev}, {"summary", a.summary}};
    };
    json j{{"shot_spec",
            json{{"mode", shot_mode_name(report.shot_spec.mode)},
                 {"k", report.shot_spec.k},
                 {"seed", report.shot_spec.seed}}},
           {"repeats", report.repeats},
           {"single_run", report.single_run},
           {"threshold", report.threshold},
           {"balanced_test", report.balanced_test},
           {"runs", std::move(runs)},
           {"aggregates", json{{"sensitivity", agg(report.sensitivity)},
                               {"specificity", agg(report.specificity)},
                               {"f1", agg(report.f1)},
                               {"accuracy", agg(report.accuracy)},
                               {"mcc", agg(report.mcc)}}}};
    write_json_file(j, path);
}

void write_experiment_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.precision(12);
    out << "seed,threshold,sensitivity,specificity,f1,accuracy,mcc\n";
    for (const RunResult& r : report.runs) {
        out << r.seed << "," << r.metrics.threshold << "," << r.metrics.sensitivity << ","
            << r.metrics.specificity << "," << r.metrics.f1 << "," << r.metrics.accuracy << ","
            << r.metrics.mcc << "\n";
    }
}

}  // namespace gfsl
