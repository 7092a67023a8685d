#include "gfsl/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "gfsl/error.hpp"

namespace gfsl {

using nlohmann::json;

RunConfig::RunConfig() {
    pretrain.epochs = 20;
    pretrain.batch_size = 32;
    pretrain.learning_rate = 1e-3f;
    pretrain.seed = 1;
    pretrain.augmentation.enabled = true;
    pretrain.plateau_window = 0;

    // The head trains against a frozen, all-positive, high-mass latent; Adam
    // steps larger than ~3e-4 can kill every hidden ReLU in a few updates,
    // and the 1e-4/10-epoch plateau rule fires on transient shelves of the
    // stair-shaped descent. Hence the flat 150-epoch schedule.
    finetune.epochs = 150;
    finetune.batch_size = 32;
    finetune.learning_rate = 3e-4f;
    finetune.seed = 1;
    finetune.augmentation.enabled = false;
    finetune.plateau_window = 0;
    finetune.plateau_rel_improvement = 1e-4f;
    finetune.validation_fraction = 0.0f;

    shot.mode = ShotMode::k_shot;
    shot.k = 20;
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ParseError("config: unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ParseError("config: bad value for '" + std::string(key) + "': " + e.what());
        }
    }
}

void read_augmentation(const json& j, AugmentationConfig& out, const std::string& where) {
    reject_unknown_keys(j,
                        {"enabled", "rotation_max_degrees", "horizontal_flip_probability",
                         "random_crop_fraction"},
                        where);
    read(j, "enabled", out.enabled);
    read(j, "rotation_max_degrees", out.rotation_max_degrees);
    read(j, "horizontal_flip_probability", out.horizontal_flip_probability);
    read(j, "random_crop_fraction", out.random_crop_fraction);
    out.validate();
}

ShotMode parse_shot_mode(const std::string& text) {
    if (text == "all") return ShotMode::all;
    if (text == "all_balanced" || text == "all-balanced") return ShotMode::all_balanced;
    if (text == "k_shot") return ShotMode::k_shot;
    throw ParseError("config: shot mode must be all, all_balanced or k_shot, got '" + text + "'");
}

json augmentation_to_json(const AugmentationConfig& a) {
    return json{{"enabled", a.enabled},
                {"rotation_max_degrees", a.rotation_max_degrees},
                {"horizontal_flip_probability", a.horizontal_flip_probability},
                {"random_crop_fraction", a.random_crop_fraction}};
}

const char* shot_mode_text(ShotMode mode) {
    switch (mode) {
        case ShotMode::all: return "all";
        case ShotMode::all_balanced: return "all_balanced";
        case ShotMode::k_shot: return "k_shot";
    }
    return "all";
}

}  // namespace

ShotSpec parse_shot_spec(const std::string& text) {
    ShotSpec spec;
    if (text == "all") {
        spec.mode = ShotMode::all;
        return spec;
    }
    if (text == "all-balanced" || text == "all_balanced") {
        spec.mode = ShotMode::all_balanced;
        return spec;
    }
    int k = 0;
    for (char c : text) {
        if (c < '0' || c > '9') {
            throw ParseError("--shots must be all, all-balanced or a positive integer, got '" +
                             text + "'");
        }
        k = k * 10 + (c - '0');
        if (k > 1000000) {
            throw ParseError("--shots value out of range: '" + text + "'");
        }
    }
    if (k < 1) {
        throw ParseError("--shots must be >= 1, got '" + text + "'");
    }
    spec.mode = ShotMode::k_shot;
    spec.k = k;
    return spec;
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("config: top level must be a JSON object");
    }
    reject_unknown_keys(j, {"source_data", "target_data", "model", "pretrain", "finetune",
                            "evaluate"},
                        "top level");

    RunConfig config;
    read(j, "source_data", config.source_data);
    read(j, "target_data", config.target_data);

    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown_keys(m, {"image_size", "channels", "fc_width"}, "model");
        read(m, "image_size", config.model.image_size);
        if (m.contains("channels")) {
            const auto channels = m.at("channels").get<std::vector<int>>();
            if (channels.size() != 3) {
                throw ParseError("config: model.channels must have exactly 3 entries");
            }
            config.model.channels1 = channels[0];
            config.model.channels2 = channels[1];
            config.model.channels3 = channels[2];
        }
        read(m, "fc_width", config.model.fc_width);
        config.model.validate();
    }

    if (j.contains("pretrain")) {
        const json& p = j.at("pretrain");
        reject_unknown_keys(
            p, {"epochs", "batch_size", "learning_rate", "seed", "augmentation",
                "validation_fraction"},
            "pretrain");
        read(p, "epochs", config.pretrain.epochs);
        read(p, "batch_size", config.pretrain.batch_size);
        read(p, "learning_rate", config.pretrain.learning_rate);
        read(p, "seed", config.pretrain.seed);
        read(p, "validation_fraction", config.pretrain.validation_fraction);
        if (p.contains("augmentation")) {
            read_augmentation(p.at("augmentation"), config.pretrain.augmentation,
                              "pretrain.augmentation");
        }
        config.pretrain.validate();
    }

    if (j.contains("finetune")) {
        const json& f = j.at("finetune");
        reject_unknown_keys(f,
                            {"shot_mode", "k", "seed", "weighted_sampling", "epochs",
                             "learning_rate", "batch_size", "augmentation", "plateau_window",
                             "plateau_rel_improvement"},
                            "finetune");
        if (f.contains("shot_mode")) {
            config.shot.mode = parse_shot_mode(f.at("shot_mode").get<std::string>());
        }
        read(f, "k", config.shot.k);
        read(f, "seed", config.finetune.seed);
        config.shot.seed = config.finetune.seed;
        read(f, "weighted_sampling", config.finetune.weighted_sampling);
        read(f, "epochs", config.finetune.epochs);
        read(f, "learning_rate", config.finetune.learning_rate);
        read(f, "batch_size", config.finetune.batch_size);
        read(f, "plateau_window", config.finetune.plateau_window);
        read(f, "plateau_rel_improvement", config.finetune.plateau_rel_improvement);
        if (f.contains("augmentation")) {
            read_augmentation(f.at("augmentation"), config.finetune.augmentation,
                              "finetune.augmentation");
        }
        config.finetune.validate();
    }

    if (j.contains("evaluate")) {
        const json& e = j.at("evaluate");
        reject_unknown_keys(e, {"threshold", "sweep", "balanced_test", "repeats", "confidence"},
                            "evaluate");
        read(e, "threshold", config.eval_threshold);
        read(e, "sweep", config.eval_sweep);
        read(e, "balanced_test", config.eval_balanced_test);
        read(e, "repeats", config.eval_repeats);
        read(e, "confidence", config.eval_confidence);
        if (config.eval_threshold < 0.0 || config.eval_threshold > 1.0) {
            throw ParseError("config: evaluate.threshold must be in [0, 1]");
        }
        if (config.eval_repeats < 1) {
            throw ParseError("config: evaluate.repeats must be >= 1");
        }
    }
    return config;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string RunConfig::to_json_text() const {
    const json j{
        {"source_data", source_data},
        {"target_data", target_data},
        {"model",
         json{{"image_size", model.image_size},
              {"channels", json::array({model.channels1, model.channels2, model.channels3})},
              {"fc_width", model.fc_width}}},
        {"pretrain",
         json{{"epochs", pretrain.epochs},
              {"batch_size", pretrain.batch_size},
              {"learning_rate", pretrain.learning_rate},
              {"seed", pretrain.seed},
              {"validation_fraction", pretrain.validation_fraction},
              {"augmentation", augmentation_to_json(pretrain.augmentation)}}},
        {"finetune",
         json{{"shot_mode", shot_mode_text(shot.mode)},
              {"k", shot.k},
              {"seed", finetune.seed},
              {"weighted_sampling", finetune.weighted_sampling},
              {"epochs", finetune.epochs},
              {"learning_rate", finetune.learning_rate},
              {"batch_size", finetune.batch_size},
              {"plateau_window", finetune.plateau_window},
              {"plateau_rel_improvement", finetune.plateau_rel_improvement},
              {"augmentation", augmentation_to_json(finetune.augmentation)}}},
        {"evaluate",
         json{{"threshold", eval_threshold},
              {"sweep", eval_sweep},
              {"balanced_test", eval_balanced_test},
              {"repeats", eval_repeats},
              {"confidence", eval_confidence}}}};
    return j.dump(2) + "\n";
}

void RunConfig::echo_to(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write resolved config " + path.string());
    }
    out << to_json_text();
}

}  // namespace gfsl
