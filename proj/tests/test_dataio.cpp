#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gfsl/augment.hpp"
#include "gfsl/dataset.hpp"
#include "gfsl/error.hpp"
#include "gfsl/pgm.hpp"
#include "gfsl/rng.hpp"
#include "gfsl/sampler.hpp"
#include "gfsl/synthetic.hpp"

using namespace gfsl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("gfsl_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

LabeledDataset tiny_dataset(const std::vector<int>& labels, int image_size = 8) {
    LabeledDataset ds;
    ds.class_names = {"a", "b"};
    ds.image_size = image_size;
    int counter = 0;
    for (int label : labels) {
        DatasetItem item;
        item.image = Tensor({1, image_size, image_size});
        item.label = label;
        item.path = "item_" + std::to_string(counter++);
        ds.items.push_back(std::move(item));
    }
    ds.recount();
    return ds;
}

}  // namespace

TEST_CASE("load_pgm parses the documented header and payload") {
    const fs::path dir = temp_dir("pgm");
    write_bytes(dir / "a.pgm", std::string("P5 2 2 255\n") + '\x00' + '\x55' + '\xaa' + '\xff');
    const Tensor t = load_pgm(dir / "a.pgm");
    CHECK(t.shape() == std::vector<int>{1, 2, 2});
    CHECK(t[0] == 0.0f);
    CHECK(t[1] == doctest::Approx(85.0f / 255.0f));
    CHECK(t[2] == doctest::Approx(170.0f / 255.0f));
    CHECK(t[3] == 1.0f);
}

TEST_CASE("load_pgm accepts comments and single-pixel maximum") {
    const fs::path dir = temp_dir("pgm2");
    write_bytes(dir / "b.pgm", std::string("P5\n# a comment\n1 1\n# another\n255\n") + '\xff');
    const Tensor t = load_pgm(dir / "b.pgm");
    CHECK(t.size() == 1);
    CHECK(t[0] == 1.0f);
}

TEST_CASE("load_pgm rejects malformed files with named fields") {
    const fs::path dir = temp_dir("pgm3");

    write_bytes(dir / "ascii.pgm", "P2 1 1 255\n255");
    CHECK_THROWS_WITH_AS(load_pgm(dir / "ascii.pgm"), doctest::Contains("magic"), ParseError);

    write_bytes(dir / "trunc.pgm", std::string("P5 2 2 255\n") + '\x00');
    CHECK_THROWS_WITH_AS(load_pgm(dir / "trunc.pgm"), doctest::Contains("truncated"), ParseError);

    write_bytes(dir / "big.pgm", std::string("P5 1 1 65535\n") + '\x00' + '\x00');
    CHECK_THROWS_WITH_AS(load_pgm(dir / "big.pgm"), doctest::Contains("maxval"), ParseError);

    write_bytes(dir / "zero.pgm", std::string("P5 1 1 0\n") + '\x00');
    CHECK_THROWS_WITH_AS(load_pgm(dir / "zero.pgm"), doctest::Contains("maxval"), ParseError);

    CHECK_THROWS_AS(load_pgm(dir / "missing.pgm"), IoError);
}

TEST_CASE("pgm round-trip is bit-exact for quantized tensors") {
    const fs::path dir = temp_dir("pgm4");
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor t({1, 3 + trial, 5});
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = static_cast<float>(rng.uniform_int(256)) / 255.0f;
        }
        write_pgm(t, dir / "rt.pgm");
        const Tensor back = load_pgm(dir / "rt.pgm");
        CHECK(back == t);
    }
}

TEST_CASE("preprocess identity, constants, and the checkerboard average") {
    Rng rng(9);
    Tensor img({1, 6, 6});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(0.0f, 1.0f);
    CHECK(preprocess(img, 6) == img);

    const Tensor constant = Tensor::full({1, 5, 3}, 0.7f);
    const Tensor resized = preprocess(constant, 4);
    for (std::size_t i = 0; i < resized.size(); ++i) {
        CHECK(resized[i] == doctest::Approx(0.7f).epsilon(1e-6));
    }

    const Tensor checker({1, 2, 2}, {0, 1, 1, 0});
    const Tensor center = preprocess(checker, 1);
    CHECK(center.size() == 1);
    CHECK(center[0] == doctest::Approx(0.5f));
}

TEST_CASE("augment disabled is bit-identical") {
    Rng img_rng(1);
    Tensor img({1, 16, 16});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = img_rng.uniform(0.0f, 1.0f);
    AugmentationConfig config;
    config.enabled = false;
    Rng rng(2);
    CHECK(augment(img, config, rng) == img);
}

TEST_CASE("forced flip twice returns the original image") {
    Rng img_rng(3);
    Tensor img({1, 12, 12});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = img_rng.uniform(0.0f, 1.0f);
    AugmentationConfig config;
    config.rotation_max_degrees = 0.0f;
    config.horizontal_flip_probability = 1.0f;
    config.random_crop_fraction = 1.0f;
    Rng rng(4);
    const Tensor once = augment(img, config, rng);
    CHECK(once != img);
    const Tensor twice = augment(once, config, rng);
    CHECK(twice == img);
}

TEST_CASE("degenerate augmentation parameters are the identity") {
    Rng img_rng(6);
    Tensor img({1, 10, 10});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = img_rng.uniform(0.0f, 1.0f);
    AugmentationConfig config;
    config.rotation_max_degrees = 0.0f;
    config.horizontal_flip_probability = 0.0f;
    config.random_crop_fraction = 1.0f;
    Rng rng(7);
    const Tensor out = augment(img, config, rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == doctest::Approx(img[i]).epsilon(1e-6));
    }
}

TEST_CASE("augmentation preserves range and shape") {
    AugmentationConfig config;  // defaults: rotation 15, flip 0.5, crop 0.9
    Rng rng(8);
    Rng img_rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor img({1, 24, 24});
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = img_rng.uniform(0.0f, 1.0f);
        const Tensor out = augment(img, config, rng);
        REQUIRE(out.shape() == img.shape());
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] >= 0.0f);
            CHECK(out[i] <= 1.0f);
        }
    }
}

TEST_CASE("augmentation config invariants are enforced") {
    AugmentationConfig bad;
    bad.random_crop_fraction = 0.0f;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad.random_crop_fraction = 0.9f;
    bad.horizontal_flip_probability = 1.5f;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad.horizontal_flip_probability = 0.5f;
    bad.rotation_max_degrees = -1.0f;
    CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("sampler weights follow max_count / count") {
    // the paper-scale imbalance: 84 vs 2000
    LabeledDataset imbalanced = tiny_dataset(std::vector<int>(84, 1));
    for (int i = 0; i < 2000; ++i) {
        DatasetItem item;
        item.image = Tensor({1, 8, 8});
        item.label = 0;
        imbalanced.items.push_back(std::move(item));
    }
    imbalanced.recount();
    const SamplerWeights w = compute_sampler_weights(imbalanced);
    CHECK(w.per_class[0] == 1.0);
    CHECK(w.per_class[1] == doctest::Approx(2000.0 / 84.0));  // 23.8095...

    const SamplerWeights balanced =
        compute_sampler_weights(tiny_dataset({0, 0, 1, 1}));
    CHECK(balanced.per_class[0] == 1.0);
    CHECK(balanced.per_class[1] == 1.0);

    LabeledDataset ten_to_one = tiny_dataset({0});
    for (int i = 0; i < 9; ++i) ten_to_one.items.push_back(ten_to_one.items[0]);
    ten_to_one.items.push_back(DatasetItem{Tensor({1, 8, 8}), 1, "x"});
    ten_to_one.recount();
    const SamplerWeights tw = compute_sampler_weights(ten_to_one);
    CHECK(tw.per_class[0] == 1.0);
    CHECK(tw.per_class[1] == 10.0);
}

TEST_CASE("weighted sampling balances an 84:2000 split over 10k draws") {
    std::vector<int> labels(84, 1);
    labels.insert(labels.end(), 2000, 0);
    LabeledDataset ds = tiny_dataset(labels);
    const SamplerWeights w = compute_sampler_weights(ds);
    Rng rng(12345);
    const std::vector<int> draws = weighted_sample(ds, w, 10000, rng);
    int minority = 0;
    for (int idx : draws) minority += ds.items[(std::size_t)idx].label == 1 ? 1 : 0;
    const double fraction = minority / 10000.0;
    CHECK(fraction > 0.48);
    CHECK(fraction < 0.52);
}

TEST_CASE("weighted sampling from a single class returns only that class") {
    LabeledDataset ds = tiny_dataset({0, 0, 0});
    ds.class_names = {"only"};
    ds.recount();
    const SamplerWeights w = compute_sampler_weights(ds);
    Rng rng(2);
    for (int idx : weighted_sample(ds, w, 100, rng)) {
        CHECK(ds.items[(std::size_t)idx].label == 0);
    }
}

TEST_CASE("weighted sampling is deterministic under a fixed seed") {
    LabeledDataset ds = tiny_dataset({0, 0, 0, 1});
    const SamplerWeights w = compute_sampler_weights(ds);
    Rng a(77), b(77);
    CHECK(weighted_sample(ds, w, 64, a) == weighted_sample(ds, w, 64, b));
}

TEST_CASE("weighted sampling stays near uniform across random imbalance up to 100:1") {
    Rng meta(31);
    for (int trial = 0; trial < 8; ++trial) {
        const int minority = 5 + meta.uniform_int(40);
        const int ratio = 1 + meta.uniform_int(100);
        const int majority = minority * ratio;
        std::vector<int> labels(static_cast<std::size_t>(minority), 1);
        labels.insert(labels.end(), static_cast<std::size_t>(majority), 0);
        LabeledDataset ds = tiny_dataset(labels);
        const SamplerWeights w = compute_sampler_weights(ds);
        Rng rng(1000 + static_cast<std::uint64_t>(trial));
        const std::vector<int> draws = weighted_sample(ds, w, 10000, rng);
        long long count1 = 0;
        for (int idx : draws) count1 += ds.items[(std::size_t)idx].label;
        const double fraction = static_cast<double>(count1) / 10000.0;
        INFO("minority ", minority, " ratio ", ratio, " fraction ", fraction);
        CHECK(fraction > 0.48);
        CHECK(fraction < 0.52);
        // chi-square vs the uniform expectation, 1 dof: reject only below p ~ 0.01
        const double expected = 5000.0;
        const double chi2 = (count1 - expected) * (count1 - expected) / expected +
                            (10000.0 - count1 - expected) * (10000.0 - count1 - expected) / expected;
        CHECK(chi2 < 6.635);
    }
}

TEST_CASE("few-shot selection honors k, seeds, and class bounds") {
    std::vector<int> labels(84, 1);
    labels.insert(labels.end(), 2000, 0);
    LabeledDataset ds = tiny_dataset(labels);

    ShotSpec spec;
    spec.mode = ShotMode::k_shot;
    spec.k = 84;
    spec.seed = 42;
    const LabeledDataset subset = select_few_shot(ds, spec);
    CHECK(subset.count(0) == 84);
    CHECK(subset.count(1) == 84);  // all 84 minority items
    CHECK(subset.items.size() == 168);

    spec.k = 20;
    const LabeledDataset s1 = select_few_shot(ds, spec);
    const LabeledDataset s2 = select_few_shot(ds, spec);
    REQUIRE(s1.items.size() == s2.items.size());
    for (std::size_t i = 0; i < s1.items.size(); ++i) {
        CHECK(s1.items[i].path == s2.items[i].path);
    }

    spec.k = 100;
    CHECK_THROWS_WITH_AS(select_few_shot(ds, spec), doctest::Contains("'b'"), DataError);
}

TEST_CASE("few-shot selection returns distinct items and ignores input order") {
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(1);
    for (int i = 0; i < 50; ++i) labels.push_back(0);
    LabeledDataset ds = tiny_dataset(labels);

    ShotSpec spec;
    spec.mode = ShotMode::k_shot;
    spec.k = 10;
    spec.seed = 9;
    const LabeledDataset a = select_few_shot(ds, spec);
    CHECK(a.items.size() == 20);
    std::map<std::string, int> seen;
    for (const auto& item : a.items) seen[item.path]++;
    for (const auto& [path, count] : seen) CHECK(count == 1);

    // reversed input order, same seed -> same selection
    LabeledDataset reversed = ds;
    std::reverse(reversed.items.begin(), reversed.items.end());
    reversed.recount();
    const LabeledDataset b = select_few_shot(reversed, spec);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        CHECK(a.items[i].path == b.items[i].path);
    }
}

TEST_CASE("all and all_balanced modes return the full dataset") {
    LabeledDataset ds = tiny_dataset({0, 0, 0, 1, 1});
    ShotSpec spec;
    spec.mode = ShotMode::all;
    CHECK(select_few_shot(ds, spec).items.size() == 5);
    spec.mode = ShotMode::all_balanced;
    CHECK(select_few_shot(ds, spec).items.size() == 5);
}

TEST_CASE("synthetic generator is deterministic and correctly shaped") {
    const fs::path a = temp_dir("synth_a");
    const fs::path b = temp_dir("synth_b");
    generate_synthetic_dataset(6, 32, 77, a);
    generate_synthetic_dataset(6, 32, 77, b);

    int files = 0;
    for (const char* cls : kSyntheticClassNames) {
        for (const auto& entry : fs::directory_iterator(a / cls)) {
            ++files;
            const fs::path other = b / cls / entry.path().filename();
            REQUIRE(fs::exists(other));
            CHECK(read_bytes(entry.path()) == read_bytes(other));
        }
    }
    CHECK(files == 12);

    const LabeledDataset ds = load_dataset(a, 32);
    CHECK(ds.class_names == std::vector<std::string>{"normal", "opacity"});
    CHECK(ds.count(0) == 6);
    CHECK(ds.count(1) == 6);
    CHECK(ds.items.front().image.shape() == std::vector<int>{1, 32, 32});
}

TEST_CASE("synthetic opacity class is brighter on average") {
    double mean[2] = {0.0, 0.0};
    const int n = 100;
    for (int label = 0; label < 2; ++label) {
        for (int index = 0; index < n; ++index) {
            const Tensor img = synthetic_image(label, index, 32, 2024);
            double acc = 0.0;
            for (std::size_t i = 0; i < img.size(); ++i) acc += img[i];
            mean[label] += acc / static_cast<double>(img.size());
        }
    }
    CHECK(mean[1] / n > mean[0] / n);
}

TEST_CASE("load_dataset maps sorted class names to labels and rejects bad layouts") {
    const fs::path dir = temp_dir("layout");
    fs::create_directories(dir / "zebra");
    fs::create_directories(dir / "aardvark");
    write_pgm(Tensor::full({1, 4, 4}, 0.5f), dir / "zebra" / "z.pgm");
    write_pgm(Tensor::full({1, 4, 4}, 0.25f), dir / "aardvark" / "a.pgm");
    const LabeledDataset ds = load_dataset(dir, 4);
    CHECK(ds.class_names == std::vector<std::string>{"aardvark", "zebra"});
    CHECK(ds.items[0].label == 0);
    CHECK(ds.items[1].label == 1);

    CHECK_THROWS_AS(load_dataset(dir / "nope", 4), DataError);

    const fs::path empty = temp_dir("layout_empty");
    fs::create_directories(empty / "one");
    CHECK_THROWS_AS(load_dataset(empty, 4), DataError);
}
