#include "skelpt/config_io.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace skelpt {

namespace {

using nlohmann::json;

/// Tracks which keys of a JSON object were consumed so leftovers can be
/// reported as unknown, with a dotted path for context.
class StrictObject {
public:
    StrictObject(const json& j, std::string context) : obj_(j), context_(std::move(context)) {
        if (!j.is_object()) {
            throw std::invalid_argument(context_ + ": expected a JSON object");
        }
    }

    bool has(const char* key) {
        consumed_.insert(key);
        return obj_.contains(key);
    }

    template <typename T>
    void read(const char* key, T& out) {
        if (!has(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(context_ + "." + key + ": " + e.what());
        }
    }

    const json& child(const char* key) {
        consumed_.insert(key);
        return obj_.at(key);
    }

    std::string path(const char* key) const { return context_ + "." + key; }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (!consumed_.contains(item.key())) {
                throw std::invalid_argument("unknown key \"" + context_ + "." + item.key() + "\"");
            }
        }
    }

private:
    const json& obj_;
    std::string context_;
    std::set<std::string> consumed_;
};

std::string to_string(FpsSeeding s) {
    return s == FpsSeeding::Geometry ? "geometry" : "run_seed";
}

FpsSeeding fps_seeding_from_string(const std::string& s, const std::string& context) {
    if (s == "geometry") return FpsSeeding::Geometry;
    if (s == "run_seed") return FpsSeeding::RunSeed;
    throw std::invalid_argument(context + ": expected \"geometry\" or \"run_seed\", got \"" + s +
                                "\"");
}

SetAbstractionSpec sa_spec_from_json(const json& j, const std::string& context) {
    SetAbstractionSpec spec;
    StrictObject o(j, context);
    o.read("npoint", spec.npoint);
    o.read("radius", spec.radius);
    o.read("max_neighbors", spec.max_neighbors);
    o.read("mlp", spec.mlp);
    o.finish();
    return spec;
}

void read_train_fields(StrictObject& o, TrainConfig& cfg) {
    if (o.has("encoder")) {
        cfg.encoder = encoder_config_from_json(o.child("encoder"), o.path("encoder"));
    }
    if (o.has("adam")) {
        cfg.adam = adam_config_from_json(o.child("adam"), o.path("adam"));
    }
    if (o.has("loss")) {
        cfg.loss = loss_weights_from_json(o.child("loss"), o.path("loss"));
    }
    o.read("epochs", cfg.epochs);
    o.read("batch_size", cfg.batch_size);
    o.read("input_points", cfg.input_points);
    o.read("seed", cfg.seed);
    o.read("checkpoint_every", cfg.checkpoint_every);
}

}  // namespace

json to_json(const AdamConfig& cfg) {
    return {{"lr", cfg.lr}, {"beta1", cfg.beta1}, {"beta2", cfg.beta2}, {"epsilon", cfg.epsilon}};
}

AdamConfig adam_config_from_json(const json& j, const std::string& context) {
    AdamConfig cfg;
    StrictObject o(j, context);
    o.read("lr", cfg.lr);
    o.read("beta1", cfg.beta1);
    o.read("beta2", cfg.beta2);
    o.read("epsilon", cfg.epsilon);
    o.finish();
    cfg.validate();
    return cfg;
}

json to_json(const LossWeights& w) {
    return {{"w_cd", w.w_cd},
            {"w_spread", w.w_spread},
            {"w_medial", w.w_medial},
            {"w_p2s", w.w_p2s},
            {"cd_start_epoch", w.cd_start_epoch},
            {"spread_start_epoch", w.spread_start_epoch},
            {"medial_start_epoch", w.medial_start_epoch},
            {"p2s_start_epoch", w.p2s_start_epoch}};
}

LossWeights loss_weights_from_json(const json& j, const std::string& context) {
    LossWeights w;
    StrictObject o(j, context);
    o.read("w_cd", w.w_cd);
    o.read("w_spread", w.w_spread);
    o.read("w_medial", w.w_medial);
    o.read("w_p2s", w.w_p2s);
    o.read("cd_start_epoch", w.cd_start_epoch);
    o.read("spread_start_epoch", w.spread_start_epoch);
    o.read("medial_start_epoch", w.medial_start_epoch);
    o.read("p2s_start_epoch", w.p2s_start_epoch);
    o.finish();
    w.validate();
    return w;
}

json to_json(const EncoderConfig& cfg) {
    json levels = json::array();
    for (const auto& level : cfg.levels) {
        levels.push_back({{"npoint", level.npoint},
                          {"radius", level.radius},
                          {"max_neighbors", level.max_neighbors},
                          {"mlp", level.mlp}});
    }
    return {{"levels", levels},
            {"fp_widths", cfg.fp_widths},
            {"head_widths", cfg.head_widths},
            {"m", cfg.m},
            {"stop_radius_grad", cfg.stop_radius_grad},
            {"fps_seeding", to_string(cfg.fps_seeding)}};
}

EncoderConfig encoder_config_from_json(const json& j, const std::string& context) {
    EncoderConfig cfg = EncoderConfig::defaults();
    StrictObject o(j, context);
    if (o.has("levels")) {
        const json& levels = o.child("levels");
        if (!levels.is_array()) {
            throw std::invalid_argument(o.path("levels") + ": expected an array");
        }
        cfg.levels.clear();
        for (size_t i = 0; i < levels.size(); ++i) {
            cfg.levels.push_back(
                sa_spec_from_json(levels[i], o.path("levels") + "[" + std::to_string(i) + "]"));
        }
    }
    o.read("fp_widths", cfg.fp_widths);
    o.read("head_widths", cfg.head_widths);
    o.read("m", cfg.m);
    o.read("stop_radius_grad", cfg.stop_radius_grad);
    if (o.has("fps_seeding")) {
        std::string s;
        o.read("fps_seeding", s);
        cfg.fps_seeding = fps_seeding_from_string(s, o.path("fps_seeding"));
    }
    o.finish();
    cfg.validate();
    return cfg;
}

json to_json(const TrainConfig& cfg) {
    return {{"encoder", to_json(cfg.encoder)},
            {"adam", to_json(cfg.adam)},
            {"loss", to_json(cfg.loss)},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"input_points", cfg.input_points},
            {"seed", cfg.seed},
            {"checkpoint_every", cfg.checkpoint_every}};
}

TrainConfig train_config_from_json(const json& j, const std::string& context) {
    TrainConfig cfg;
    StrictObject o(j, context);
    read_train_fields(o, cfg);
    o.finish();
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const { train.validate(); }

json to_json(const RunConfig& cfg) {
    json j = to_json(cfg.train);
    j["dataset_dir"] = cfg.dataset_dir;
    j["out_dir"] = cfg.out_dir;
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    StrictObject o(j, "config");
    read_train_fields(o, cfg.train);
    o.read("dataset_dir", cfg.dataset_dir);
    o.read("out_dir", cfg.out_dir);
    o.finish();
    cfg.validate();
    return cfg;
}

RunConfig read_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::invalid_argument("cannot open run config " + file.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

void write_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write run config " + file.string());
    }
    out << to_json(cfg).dump(2) << "\n";
}

}  // namespace skelpt
