#pragma once

#include <cstdint>
#include <vector>

#include "gfsl/dataset.hpp"
#include "gfsl/rng.hpp"

namespace gfsl {

// Per-class sampling weight: max_class_count / count(c). The majority class
// weight is exactly 1; an item's draw probability is proportional to its
// class weight, so the expected class mix is uniform.
struct SamplerWeights {
    std::vector<double> per_class;
};

SamplerWeights compute_sampler_weights(const LabeledDataset& dataset);

// Draws batch_size item indices with replacement, probability proportional
// to each item's class weight.
std::vector<int> weighted_sample(const LabeledDataset& dataset, const SamplerWeights& weights,
                                 int batch_size, Rng& rng);

enum class ShotMode { all, all_balanced, k_shot };

struct ShotSpec {
    ShotMode mode = ShotMode::all;
    int k = 0;  // used when mode == k_shot
    std::uint64_t seed = 0;
};

// k_shot: exactly k distinct items per class, chosen without replacement by
// the seeded generator after a canonical pre-sort by path. all /
// all_balanced: the full dataset (all_balanced additionally tells the
// trainer to draw class-balanced batches). Throws DataError naming the class
// when k exceeds a class count.
LabeledDataset select_few_shot(const LabeledDataset& dataset, const ShotSpec& spec);

}  // namespace gfsl
