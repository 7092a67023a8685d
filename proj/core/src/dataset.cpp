#include "gfsl/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "gfsl/error.hpp"
#include "gfsl/pgm.hpp"

namespace gfsl {

int LabeledDataset::count(int label) const {
    if (label < 0 || label >= static_cast<int>(class_counts.size())) return 0;
    return class_counts[static_cast<std::size_t>(label)];
}

int LabeledDataset::minority_class() const {
    if (class_counts.empty()) throw DataError("minority_class: empty dataset");
    int best = 0;
    for (int c = 1; c < static_cast<int>(class_counts.size()); ++c) {
        if (class_counts[static_cast<std::size_t>(c)] < class_counts[static_cast<std::size_t>(best)]) {
            best = c;
        }
    }
    return best;
}

void LabeledDataset::recount() {
    class_counts.assign(class_names.size(), 0);
    for (const auto& item : items) {
        if (item.label < 0 || item.label >= static_cast<int>(class_counts.size())) {
            throw DataError("dataset item has label " + std::to_string(item.label) +
                            " outside the declared classes");
        }
        ++class_counts[static_cast<std::size_t>(item.label)];
    }
}

Tensor preprocess(const Tensor& image, int image_size) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw ShapeError("preprocess: image must be 1xHxW, got " + image.shape_str());
    }
    if (image_size < 1) {
        throw DataError("preprocess: image_size must be positive");
    }
    const int in_h = image.dim(1), in_w = image.dim(2);
    if (in_h == image_size && in_w == image_size) {
        return image;
    }

    Tensor out({1, image_size, image_size});
    // Endpoint-aligned source coordinates; a 1-pixel target samples the center.
    const auto src_coord = [](int dst, int dst_size, int src_size) -> float {
        if (dst_size == 1) return static_cast<float>(src_size - 1) / 2.0f;
        return static_cast<float>(dst) * static_cast<float>(src_size - 1) /
               static_cast<float>(dst_size - 1);
    };
    for (int y = 0; y < image_size; ++y) {
        const float sy = src_coord(y, image_size, in_h);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, in_h - 1);
        const float fy = sy - static_cast<float>(y0);
        for (int x = 0; x < image_size; ++x) {
            const float sx = src_coord(x, image_size, in_w);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, in_w - 1);
            const float fx = sx - static_cast<float>(x0);
            const float v00 = image[static_cast<std::size_t>(y0) * in_w + x0];
            const float v01 = image[static_cast<std::size_t>(y0) * in_w + x1];
            const float v10 = image[static_cast<std::size_t>(y1) * in_w + x0];
            const float v11 = image[static_cast<std::size_t>(y1) * in_w + x1];
            const float top = v00 + (v01 - v00) * fx;
            const float bottom = v10 + (v11 - v10) * fx;
            out[static_cast<std::size_t>(y) * image_size + x] = top + (bottom - top) * fy;
        }
    }
    ensure_finite(out, "preprocess");
    return out;
}

LabeledDataset load_dataset(const std::filesystem::path& split_dir, int image_size) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(split_dir)) {
        throw DataError("dataset directory not found: " + split_dir.string());
    }

    std::vector<std::string> class_names;
    for (const auto& entry : fs::directory_iterator(split_dir)) {
        if (entry.is_directory()) {
            class_names.push_back(entry.path().filename().string());
        }
    }
    std::sort(class_names.begin(), class_names.end());
    if (class_names.empty() || class_names.size() > 2) {
        throw DataError("expected 1 or 2 class directories under " + split_dir.string() + ", found " +
                        std::to_string(class_names.size()));
    }

    LabeledDataset dataset;
    dataset.class_names = class_names;
    dataset.image_size = image_size;
    for (int label = 0; label < static_cast<int>(class_names.size()); ++label) {
        std::vector<fs::path> files;
        for (const auto& entry :
             fs::directory_iterator(split_dir / class_names[static_cast<std::size_t>(label)])) {
            if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw DataError("class directory has no .pgm files: " +
                            (split_dir / class_names[static_cast<std::size_t>(label)]).string());
        }
        for (const auto& file : files) {
            DatasetItem item;
            item.image = preprocess(load_pgm(file), image_size);
            item.label = label;
            item.path = file.string();
            dataset.items.push_back(std::move(item));
        }
    }
    dataset.recount();
    return dataset;
}

}  // namespace gfsl
