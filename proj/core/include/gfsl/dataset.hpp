#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gfsl/tensor.hpp"

namespace gfsl {

struct DatasetItem {
    Tensor image;  // 1 x S x S after preprocessing
    int label = 0;
    std::string path;  // source file; empty for purely in-memory items
};

// Indexed collection of (grayscale image, class label) with per-class counts.
// Labels are assigned from class directory names sorted lexicographically.
struct LabeledDataset {
    std::vector<DatasetItem> items;
    std::vector<std::string> class_names;  // index == label
    std::vector<int> class_counts;
    int image_size = 0;

    int count(int label) const;
    int minority_class() const;

    // Rebuild class_counts from items (class_names must already be set).
    void recount();
};

// Bilinear resize to image_size x image_size; values stay in [0, 1].
// Endpoint-aligned sampling, so a same-size resize is the identity.
Tensor preprocess(const Tensor& image, int image_size);

// Loads every *.pgm under <split_dir>/<class_name>/, one or two class
// directories, items ordered by (label, path). Throws DataError when the
// layout is wrong or a class is empty.
LabeledDataset load_dataset(const std::filesystem::path& split_dir, int image_size);

}  // namespace gfsl
