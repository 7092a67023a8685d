#include "gfsl/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "gfsl/error.hpp"

namespace gfsl {

SamplerWeights compute_sampler_weights(const LabeledDataset& dataset) {
    if (dataset.class_counts.empty()) {
        throw DataError("compute_sampler_weights: dataset has no classes");
    }
    const int max_count = *std::max_element(dataset.class_counts.begin(), dataset.class_counts.end());
    if (max_count == 0) {
        throw DataError("compute_sampler_weights: dataset is empty");
    }
    SamplerWeights weights;
    weights.per_class.reserve(dataset.class_counts.size());
    for (int count : dataset.class_counts) {
        if (count == 0) {
            throw DataError("compute_sampler_weights: a class has zero items");
        }
        weights.per_class.push_back(static_cast<double>(max_count) / static_cast<double>(count));
    }
    return weights;
}

std::vector<int> weighted_sample(const LabeledDataset& dataset, const SamplerWeights& weights,
                                 int batch_size, Rng& rng) {
    if (dataset.items.empty()) {
        throw DataError("weighted_sample: empty dataset");
    }
    if (batch_size < 1) {
        throw DataError("weighted_sample: batch_size must be >= 1");
    }
    if (weights.per_class.size() < dataset.class_counts.size()) {
        throw DataError("weighted_sample: weights cover fewer classes than the dataset");
    }

    // Cumulative per-item weights; items keep dataset order.
    std::vector<double> cumulative(dataset.items.size());
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        total += weights.per_class[static_cast<std::size_t>(dataset.items[i].label)];
        cumulative[i] = total;
    }

    std::vector<int> batch(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t idx = std::min(static_cast<std::size_t>(it - cumulative.begin()),
                                         dataset.items.size() - 1);
        batch[static_cast<std::size_t>(b)] = static_cast<int>(idx);
    }
    return batch;
}

LabeledDataset select_few_shot(const LabeledDataset& dataset, const ShotSpec& spec) {
    if (spec.mode != ShotMode::k_shot) {
        return dataset;
    }
    if (spec.k < 1) {
        throw DataError("select_few_shot: k must be >= 1");
    }

    // Canonical pre-sort by path makes the selection independent of the
    // caller's item ordering.
    std::vector<int> order(dataset.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ia = dataset.items[static_cast<std::size_t>(a)];
        const auto& ib = dataset.items[static_cast<std::size_t>(b)];
        return ia.path != ib.path ? ia.path < ib.path : a < b;
    });

    LabeledDataset out;
    out.class_names = dataset.class_names;
    out.image_size = dataset.image_size;
    for (int label = 0; label < static_cast<int>(dataset.class_counts.size()); ++label) {
        std::vector<int> members;
        for (int idx : order) {
            if (dataset.items[static_cast<std::size_t>(idx)].label == label) {
                members.push_back(idx);
            }
        }
        if (spec.k > static_cast<int>(members.size())) {
            const std::string name = label < static_cast<int>(dataset.class_names.size())
                                         ? dataset.class_names[static_cast<std::size_t>(label)]
                                         : std::to_string(label);
            throw DataError("select_few_shot: requested " + std::to_string(spec.k) +
                            " shots but class '" + name + "' has only " +
                            std::to_string(members.size()) + " items");
        }
        // Partial Fisher-Yates: the first k entries are a uniform sample
        // without replacement. One derived stream per class.
        Rng rng = Rng::derive(spec.seed, 0x73686F74ull + static_cast<std::uint64_t>(label));
        for (int i = 0; i < spec.k; ++i) {
            const int j = i + rng.uniform_int(static_cast<int>(members.size()) - i);
            std::swap(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)]);
        }
        members.resize(static_cast<std::size_t>(spec.k));
        // Canonical output order too, so the result does not leak the
        // caller's ordering.
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            return dataset.items[static_cast<std::size_t>(a)].path <
                   dataset.items[static_cast<std::size_t>(b)].path;
        });
        for (int idx : members) {
            out.items.push_back(dataset.items[static_cast<std::size_t>(idx)]);
        }
    }
    out.recount();
    return out;
}

}  // namespace gfsl
