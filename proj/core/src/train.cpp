#include "gfsl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gfsl/adam.hpp"
#include "gfsl/error.hpp"
#include "gfsl/ops.hpp"

namespace gfsl {

void TrainConfig::validate() const {
    if (epochs < 1) throw DataError("train config: epochs must be >= 1");
    if (batch_size < 1) throw DataError("train config: batch_size must be >= 1");
    if (!(learning_rate > 0.0f)) throw DataError("train config: learning_rate must be > 0");
    if (validation_fraction < 0.0f || validation_fraction >= 1.0f) {
        throw DataError("train config: validation_fraction must be in [0, 1)");
    }
    if (plateau_window < 0) throw DataError("train config: plateau_window must be >= 0");
    augmentation.validate();
}

void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "epoch,train_loss,val_loss,seconds\n";
    out.precision(9);
    for (const EpochRecord& r : log.records) {
        out << r.epoch << "," << r.train_loss << "," << r.val_loss << "," << r.seconds << "\n";
    }
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Augmentation stream for one slot of one epoch. Tied to the slot, not the
// item, so repeated draws of the same item get independent transforms.
Rng slot_rng(std::uint64_t seed, int epoch, std::size_t slot) {
    return Rng::derive(seed, (static_cast<std::uint64_t>(epoch) + 1) * 0x100000000ull +
                                 static_cast<std::uint64_t>(slot));
}

Tensor assemble_batch(const LabeledDataset& dataset, const std::vector<int>& indices,
                      std::size_t begin, std::size_t end, const AugmentationConfig& augmentation,
                      std::uint64_t seed, int epoch) {
    const int size = dataset.image_size;
    Tensor batch({static_cast<int>(end - begin), 1, size, size});
    for (std::size_t k = begin; k < end; ++k) {
        const Tensor& image = dataset.items[static_cast<std::size_t>(indices[k])].image;
        Tensor prepared = image;
        if (augmentation.enabled) {
            Rng rng = slot_rng(seed, epoch, k);
            prepared = augment(image, augmentation, rng);
        }
        std::copy(prepared.values().begin(), prepared.values().end(),
                  batch.data() + (k - begin) * prepared.size());
    }
    return batch;
}

Tensor batch_labels(const LabeledDataset& dataset, const std::vector<int>& indices,
                    std::size_t begin, std::size_t end) {
    Tensor labels({static_cast<int>(end - begin)});
    for (std::size_t k = begin; k < end; ++k) {
        labels[k - begin] = static_cast<float>(dataset.items[static_cast<std::size_t>(indices[k])].label);
    }
    return labels;
}

[[noreturn]] void report_divergence(const char* phase, int epoch, std::size_t batch,
                                    const std::string& what) {
    throw TrainingDivergedError(std::string(phase) + " diverged at epoch " +
                                std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " +
                                what);
}

bool plateaued(const std::vector<double>& losses, int window, float rel_improvement) {
    if (window <= 0 || static_cast<int>(losses.size()) <= window) return false;
    const double before = losses[losses.size() - 1 - static_cast<std::size_t>(window)];
    const double now = losses.back();
    return (before - now) / std::max(std::abs(before), 1e-12) < rel_improvement;
}

}  // namespace

PretrainResult pretrain_autoencoder(const LabeledDataset& dataset, const TrainConfig& config,
                                    const ModelArch& arch) {
    config.validate();
    if (dataset.items.empty()) {
        throw DataError("pretrain_autoencoder: empty dataset");
    }
    if (dataset.image_size != arch.image_size) {
        throw DataError("pretrain_autoencoder: dataset images are " +
                        std::to_string(dataset.image_size) + "px but the model expects " +
                        std::to_string(arch.image_size));
    }

    // Labels are ignored: reconstruction treats the corpus as one concept.
    std::vector<int> indices(dataset.items.size());
    std::iota(indices.begin(), indices.end(), 0);
    Rng split_rng = Rng::derive(config.seed, 0x73706C6974ull);  // "split"
    split_rng.shuffle(indices);
    const std::size_t n_val =
        static_cast<std::size_t>(config.validation_fraction * static_cast<double>(indices.size()));
    std::vector<int> val_indices(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<int> train_indices(indices.begin() + static_cast<std::ptrdiff_t>(n_val),
                                   indices.end());
    if (train_indices.empty()) {
        throw DataError("pretrain_autoencoder: no training items left after validation split");
    }

    PretrainResult result{build_autoencoder(arch, config.seed), {}};
    AutoencoderModel& model = result.model;

    std::vector<AdamState> states;
    states.reserve(model.params.size());
    for (const Param& p : model.params.all()) {
        states.push_back(AdamState::for_param(p.value, config.learning_rate));
    }

    const AugmentationConfig no_augmentation{0.0f, 0.0f, 1.0f, false};
    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        Rng shuffle_rng = Rng::derive(config.seed, 0x65706F6368ull + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(train_indices);

        double loss_sum = 0.0;
        std::size_t item_count = 0;
        for (std::size_t begin = 0; begin < train_indices.size(); begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, train_indices.size());
            const std::size_t batch_index = begin / batch_size;
            try {
                const Tensor batch = assemble_batch(dataset, train_indices, begin, end,
                                                    config.augmentation, config.seed, epoch);
                AutoencoderTrace trace;
                autoencoder_forward(model, batch, &trace);
                const LossResult loss = mse_loss(trace.reconstruction, batch);
                if (!std::isfinite(loss.value)) {
                    report_divergence("pretraining", epoch, batch_index, "non-finite loss");
                }
                model.params.zero_grads();
                autoencoder_backward(model, trace, loss.grad);
                for (std::size_t i = 0; i < model.params.size(); ++i) {
                    Param& p = model.params.all()[i];
                    if (!p.frozen) {
                        adam_step(p.value, p.grad, states[i]);
                    }
                }
                loss_sum += loss.value * static_cast<double>(end - begin);
                item_count += end - begin;
            } catch (const NumericsError& e) {
                report_divergence("pretraining", epoch, batch_index, e.what());
            }
        }
        const double train_loss = loss_sum / static_cast<double>(item_count);

        double val_loss = train_loss;
        if (!val_indices.empty()) {
            double val_sum = 0.0;
            for (std::size_t begin = 0; begin < val_indices.size(); begin += batch_size) {
                const std::size_t end = std::min(begin + batch_size, val_indices.size());
                const Tensor batch =
                    assemble_batch(dataset, val_indices, begin, end, no_augmentation, 0, 0);
                const AutoencoderOutput out = autoencoder_forward(model, batch);
                val_sum += mse_loss(out.reconstruction, batch).value * static_cast<double>(end - begin);
            }
            val_loss = val_sum / static_cast<double>(val_indices.size());
        }

        result.log.records.push_back(
            EpochRecord{epoch, train_loss, val_loss, elapsed_seconds(epoch_start)});
    }
    return result;
}

TrainLog finetune_classifier(ClassifierModel& model, const LabeledDataset& dataset,
                             const TrainConfig& config) {
    config.validate();
    if (dataset.items.empty()) {
        throw DataError("finetune_classifier: empty dataset");
    }
    if (dataset.image_size != model.arch.image_size) {
        throw DataError("finetune_classifier: dataset images are " +
                        std::to_string(dataset.image_size) + "px but the model expects " +
                        std::to_string(model.arch.image_size));
    }

    std::vector<AdamState> states;
    states.reserve(model.params.size());
    for (const Param& p : model.params.all()) {
        states.push_back(AdamState::for_param(p.value, config.learning_rate));
    }

    SamplerWeights weights;
    if (config.weighted_sampling) {
        weights = compute_sampler_weights(dataset);
    }

    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
    const std::size_t n_items = dataset.items.size();
    const std::size_t batches_per_epoch = (n_items + batch_size - 1) / batch_size;
    const AugmentationConfig no_augmentation{0.0f, 0.0f, 1.0f, false};

    std::vector<int> order(n_items);
    std::iota(order.begin(), order.end(), 0);

    TrainLog log;
    std::vector<double> epoch_losses;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        Rng epoch_rng = Rng::derive(config.seed, 0x66696E65ull + static_cast<std::uint64_t>(epoch));

        std::vector<int> plan;
        if (config.weighted_sampling) {
            plan = weighted_sample(dataset, weights,
                                   static_cast<int>(batches_per_epoch * batch_size), epoch_rng);
        } else {
            epoch_rng.shuffle(order);
            plan = order;
        }

        double loss_sum = 0.0;
        std::size_t item_count = 0;
        for (std::size_t begin = 0; begin < plan.size(); begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, plan.size());
            const std::size_t batch_index = begin / batch_size;
            try {
                const Tensor batch = assemble_batch(dataset, plan, begin, end, config.augmentation,
                                                    config.seed, epoch);
                const Tensor labels = batch_labels(dataset, plan, begin, end);
                ClassifierTrace trace;
                classifier_forward(model, batch, &trace);
                const LossResult loss = bce_loss(trace.probabilities, labels);
                if (!std::isfinite(loss.value)) {
                    report_divergence("fine-tuning", epoch, batch_index, "non-finite loss");
                }
                model.params.zero_grads();
                classifier_backward(model, trace, loss.grad);
                for (std::size_t i = 0; i < model.params.size(); ++i) {
                    Param& p = model.params.all()[i];
                    if (!p.frozen) {
                        adam_step(p.value, p.grad, states[i]);
                    }
                }
                loss_sum += loss.value * static_cast<double>(end - begin);
                item_count += end - begin;
            } catch (const NumericsError& e) {
                report_divergence("fine-tuning", epoch, batch_index, e.what());
            }
        }
        const double train_loss = loss_sum / static_cast<double>(item_count);

        // Epoch-end loss over the whole (tiny) training set, without
        // augmentation; this drives the plateau stop.
        double end_sum = 0.0;
        std::vector<int> eval_order(n_items);
        std::iota(eval_order.begin(), eval_order.end(), 0);
        for (std::size_t begin = 0; begin < n_items; begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, n_items);
            const Tensor batch =
                assemble_batch(dataset, eval_order, begin, end, no_augmentation, 0, 0);
            const Tensor labels = batch_labels(dataset, eval_order, begin, end);
            const Tensor probabilities = classifier_forward(model, batch);
            end_sum += bce_loss(probabilities, labels).value * static_cast<double>(end - begin);
        }
        const double epoch_end_loss = end_sum / static_cast<double>(n_items);

        log.records.push_back(
            EpochRecord{epoch, train_loss, epoch_end_loss, elapsed_seconds(epoch_start)});
        epoch_losses.push_back(epoch_end_loss);
        if (plateaued(epoch_losses, config.plateau_window, config.plateau_rel_improvement)) {
            break;
        }
    }
    return log;
}

}  // namespace gfsl
