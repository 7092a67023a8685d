#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gfsl/augment.hpp"
#include "gfsl/dataset.hpp"
#include "gfsl/model.hpp"
#include "gfsl/sampler.hpp"

namespace gfsl {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    float learning_rate = 1e-3f;
    std::uint64_t seed = 0;
    AugmentationConfig augmentation;   // applied to training batches only
    bool weighted_sampling = false;    // draw class-balanced batches
    // Stop when the epoch-end loss improves by less than this relative amount
    // over the trailing window. A window of 0 disables early stopping.
    float plateau_rel_improvement = 1e-4f;
    int plateau_window = 0;
    // Fraction of items held out for validation (pretraining only).
    float validation_fraction = 0.1f;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> records;
};

// CSV with header epoch,train_loss,val_loss,seconds.
void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path);

struct PretrainResult {
    AutoencoderModel model;
    TrainLog log;
};

// Reconstruction pretraining: labels are ignored, a seeded 10% split is held
// out for validation, batches are shuffled and augmented per epoch, and every
// parameter is updated with Adam against the MSE reconstruction loss.
// Throws TrainingDivergedError (naming epoch and batch) on a non-finite loss.
PretrainResult pretrain_autoencoder(const LabeledDataset& dataset, const TrainConfig& config,
                                    const ModelArch& arch);

// Head-only fine-tuning with BCE. The dataset must already be reduced to the
// requested shots; when config.weighted_sampling is set, batches are drawn by
// class-weighted sampling instead of epoch shuffling. Frozen parameters are
// never written; the log's val_loss column holds the epoch-end loss over the
// training set, which also drives the plateau check.
TrainLog finetune_classifier(ClassifierModel& model, const LabeledDataset& dataset,
                             const TrainConfig& config);

}  // namespace gfsl
