#pragma once

// Experiment configuration: a JSON document with full-key validation
// (unknown keys are errors, so typos cannot silently fall back to
// defaults) and a resolver that materializes every default for the run
// directory. Profiles are either built-in names or inline layer lists.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecgcnn/beats.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/metrics.hpp"
#include "ecgcnn/network.hpp"
#include "ecgcnn/report.hpp"
#include "ecgcnn/trainer.hpp"

namespace ecgcnn {

struct ExperimentConfig {
    std::string dataset;          // ECGB path (signal-1d runs)
    std::string images;           // ECGI path (image-2d runs)
    Representation representation = Representation::signal_1d;
    std::string profile = "canonical-1d"; // built-in name; empty when inline
    std::optional<ordered_json> profile_inline;
    std::string activation = "swish";
    int channels = 1;
    int n_classes = 2;
    std::string init = "auto";
    FoldPlan fold_plan;
    TrainConfig train;
    std::vector<std::optional<double>> snr_list{std::nullopt, 35.0, 30.0, 25.0, 20.0};
    std::string transfer_archive; // optional ECGW path
    std::string positive_class = "abnormal";
    std::uint64_t seed = 1;
    std::string output_dir = "run";
    int jobs = 1;
    bool batch_size_set = false; // explicit batch choice beats the per-representation default

    /// Batch size defaults to 64 for 1-D runs and 32 for 2-D runs unless
    /// set explicitly.
    void apply_defaults() {
        if (!batch_size_set && representation == Representation::image_2d) train.batch_size = 32;
    }

    BeatLabel positive() const {
        if (positive_class == "abnormal") return BeatLabel::abnormal;
        if (positive_class == "normal") return BeatLabel::normal;
        throw ConfigError("positive_class must be 'normal' or 'abnormal'");
    }

    /// Materialize the profile (built-in or inline) with the configured
    /// activation, channels and class count.
    ArchitectureProfile make_profile() const;
};

namespace detail {

inline void require_keys(const ordered_json& j, const std::set<std::string>& known,
                         const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown key '" + (context.empty() ? key : context + "." + key) + "'");
}

template <typename T>
T get_or(const ordered_json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad value for key '" + key + "'");
    }
}

inline Extent extent_from(const ordered_json& j, const std::string& key, int dims, Extent fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number_unsigned() || v.is_number_integer()) {
        const std::size_t n = v.get<std::size_t>();
        return dims == 1 ? Extent{1, n} : Extent{n, n};
    }
    if (v.is_array() && v.size() == 2)
        return Extent{v.at(0).get<std::size_t>(), v.at(1).get<std::size_t>()};
    throw ConfigError("key '" + key + "' must be an integer or a [h, w] pair");
}

} // namespace detail

/// Parse an inline profile object:
///   { "dims": 1|2, "input_shape": [C, L] | [C, H, W], "n_classes": 2,
///     "layers": [ {"kind": "conv", "out_channels": n, "kernel": k,
///                  "stride": s, "pad": p}, {"kind": "pool", ...},
///                 {"kind": "act"}, {"kind": "dropout", "rate": r},
///                 {"kind": "flatten"}, {"kind": "fc", "width": n} ] }
/// Scalar kernel/stride/pad values apply to the length axis for 1-D
/// profiles and to both axes for 2-D ones.
inline ArchitectureProfile profile_from_json(const ordered_json& j, ActivationKind activation) {
    detail::require_keys(j, {"name", "dims", "input_shape", "n_classes", "layers"}, "profile");
    ArchitectureProfile p;
    p.name = detail::get_or<std::string>(j, "name", "custom");
    p.dims = detail::get_or<int>(j, "dims", 1);
    if (p.dims != 1 && p.dims != 2) throw ConfigError("profile.dims must be 1 or 2");
    if (!j.contains("input_shape") || !j.at("input_shape").is_array())
        throw ConfigError("profile.input_shape must be an array");
    for (const auto& d : j.at("input_shape")) p.input_shape.push_back(d.get<std::size_t>());
    p.n_classes = detail::get_or<int>(j, "n_classes", 2);
    p.activation = activation;

    if (!j.contains("layers") || !j.at("layers").is_array())
        throw ConfigError("profile.layers must be an array");
    std::size_t conv_count = 0, fc_count = 0, pool_count = 0, drop_count = 0, act_count = 0;
    for (const auto& lj : j.at("layers")) {
        const std::string kind = detail::get_or<std::string>(lj, "kind", "");
        LayerSpec layer;
        if (kind == "conv") {
            detail::require_keys(lj, {"kind", "name", "out_channels", "kernel", "stride", "pad"},
                                 "profile.layers[conv]");
            layer.kind = LayerKind::conv;
            layer.out_channels = detail::get_or<std::size_t>(lj, "out_channels", 0);
            if (layer.out_channels == 0) throw ConfigError("conv layer needs out_channels");
            layer.kernel = detail::extent_from(lj, "kernel", p.dims, Extent{1, 1});
            layer.stride = detail::extent_from(lj, "stride", p.dims, Extent{1, 1});
            layer.pad = detail::extent_from(lj, "pad", p.dims, Extent{0, 0});
            layer.name = detail::get_or<std::string>(lj, "name", "conv" + std::to_string(++conv_count));
        } else if (kind == "pool") {
            detail::require_keys(lj, {"kind", "name", "kernel", "stride"}, "profile.layers[pool]");
            layer.kind = LayerKind::pool;
            layer.kernel = detail::extent_from(lj, "kernel", p.dims, Extent{1, 2});
            layer.stride = detail::extent_from(lj, "stride", p.dims, layer.kernel);
            layer.name = detail::get_or<std::string>(lj, "name", "pool" + std::to_string(++pool_count));
        } else if (kind == "act") {
            detail::require_keys(lj, {"kind", "name"}, "profile.layers[act]");
            layer.kind = LayerKind::act;
            layer.name = detail::get_or<std::string>(lj, "name", "act" + std::to_string(++act_count));
        } else if (kind == "dropout") {
            detail::require_keys(lj, {"kind", "name", "rate"}, "profile.layers[dropout]");
            layer.kind = LayerKind::dropout;
            layer.rate = detail::get_or<double>(lj, "rate", 0.5);
            layer.name = detail::get_or<std::string>(lj, "name", "drop" + std::to_string(++drop_count));
        } else if (kind == "flatten") {
            detail::require_keys(lj, {"kind", "name"}, "profile.layers[flatten]");
            layer.kind = LayerKind::flatten;
            layer.name = "flatten";
        } else if (kind == "fc") {
            detail::require_keys(lj, {"kind", "name", "width"}, "profile.layers[fc]");
            layer.kind = LayerKind::fc;
            layer.width = detail::get_or<std::size_t>(lj, "width", 0);
            if (layer.width == 0) throw ConfigError("fc layer needs width");
            layer.name = detail::get_or<std::string>(lj, "name", "fc" + std::to_string(++fc_count));
        } else {
            throw ConfigError("unknown layer kind '" + kind + "'");
        }
        p.layers.push_back(std::move(layer));
    }
    return p;
}

inline ordered_json profile_to_json(const ArchitectureProfile& p) {
    ordered_json j;
    j["name"] = p.name;
    j["dims"] = p.dims;
    j["input_shape"] = p.input_shape;
    j["n_classes"] = p.n_classes;
    j["layers"] = ordered_json::array();
    for (const LayerSpec& layer : p.layers) {
        ordered_json lj;
        auto extent = [&](Extent e) {
            return p.dims == 1 ? ordered_json(e.w) : ordered_json{e.h, e.w};
        };
        switch (layer.kind) {
        case LayerKind::conv:
            lj["kind"] = "conv";
            lj["name"] = layer.name;
            lj["out_channels"] = layer.out_channels;
            lj["kernel"] = extent(layer.kernel);
            lj["stride"] = extent(layer.stride);
            lj["pad"] = extent(layer.pad);
            break;
        case LayerKind::pool:
            lj["kind"] = "pool";
            lj["name"] = layer.name;
            lj["kernel"] = extent(layer.kernel);
            lj["stride"] = extent(layer.stride);
            break;
        case LayerKind::act:
            lj["kind"] = "act";
            lj["name"] = layer.name;
            break;
        case LayerKind::dropout:
            lj["kind"] = "dropout";
            lj["name"] = layer.name;
            lj["rate"] = layer.rate;
            break;
        case LayerKind::flatten:
            lj["kind"] = "flatten";
            lj["name"] = layer.name;
            break;
        case LayerKind::fc:
            lj["kind"] = "fc";
            lj["name"] = layer.name;
            lj["width"] = layer.width;
            break;
        }
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

inline ArchitectureProfile ExperimentConfig::make_profile() const {
    const ActivationKind act = ActivationKind::parse(activation);
    ArchitectureProfile p = profile_inline
                                ? profile_from_json(*profile_inline, act)
                                : profile_by_name(profile, act, std::size_t(channels), n_classes);
    const int wanted_dims = representation == Representation::signal_1d ? 1 : 2;
    if (p.dims != wanted_dims)
        throw ConfigError("representation " + representation_name(representation) +
                          " does not match profile dimensionality " + std::to_string(p.dims));
    return p;
}

inline ExperimentConfig parse_experiment_config(const ordered_json& j) {
    detail::require_keys(j,
                         {"dataset", "images", "representation", "profile", "activation", "channels",
                          "n_classes", "init", "fold_plan", "train", "snr_list", "transfer_archive",
                          "positive_class", "seed", "output_dir", "jobs"},
                         "");
    ExperimentConfig c;
    c.dataset = detail::get_or<std::string>(j, "dataset", "");
    c.images = detail::get_or<std::string>(j, "images", "");
    c.representation =
        representation_parse(detail::get_or<std::string>(j, "representation", "signal-1d"));
    if (j.contains("profile")) {
        if (j.at("profile").is_string())
            c.profile = j.at("profile").get<std::string>();
        else
            c.profile_inline = j.at("profile");
    }
    c.activation = detail::get_or<std::string>(j, "activation", c.activation);
    c.channels = detail::get_or<int>(j, "channels", c.channels);
    c.n_classes = detail::get_or<int>(j, "n_classes", c.n_classes);
    c.init = detail::get_or<std::string>(j, "init", c.init);

    if (j.contains("fold_plan")) {
        const auto& f = j.at("fold_plan");
        detail::require_keys(f, {"n_folds", "train_size", "test_size", "stratified", "mode"},
                             "fold_plan");
        c.fold_plan.n_folds = detail::get_or<int>(f, "n_folds", c.fold_plan.n_folds);
        c.fold_plan.train_size = detail::get_or<std::size_t>(f, "train_size", c.fold_plan.train_size);
        c.fold_plan.test_size = detail::get_or<std::size_t>(f, "test_size", c.fold_plan.test_size);
        c.fold_plan.stratified = detail::get_or<bool>(f, "stratified", c.fold_plan.stratified);
        const std::string mode = detail::get_or<std::string>(f, "mode", "redraw");
        if (mode == "redraw") c.fold_plan.mode = FoldPlan::Mode::redraw;
        else if (mode == "kfold") c.fold_plan.mode = FoldPlan::Mode::kfold;
        else throw ConfigError("fold_plan.mode must be 'redraw' or 'kfold'");
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::require_keys(t,
                             {"base_lr", "gamma", "step_size", "momentum", "weight_decay",
                              "batch_size", "max_iterations", "eval_interval",
                              "finetune_lr_multiplier"},
                             "train");
        c.train.base_lr = detail::get_or<double>(t, "base_lr", c.train.base_lr);
        c.train.lr_policy.gamma = detail::get_or<double>(t, "gamma", c.train.lr_policy.gamma);
        c.train.lr_policy.step_size =
            detail::get_or<std::size_t>(t, "step_size", c.train.lr_policy.step_size);
        c.train.momentum = detail::get_or<double>(t, "momentum", c.train.momentum);
        c.train.weight_decay = detail::get_or<double>(t, "weight_decay", c.train.weight_decay);
        if (t.contains("batch_size")) {
            c.train.batch_size = detail::get_or<std::size_t>(t, "batch_size", c.train.batch_size);
            c.batch_size_set = true;
        }
        c.train.max_iterations =
            detail::get_or<std::size_t>(t, "max_iterations", c.train.max_iterations);
        c.train.eval_interval =
            detail::get_or<std::size_t>(t, "eval_interval", c.train.eval_interval);
        c.train.finetune_lr_multiplier =
            detail::get_or<double>(t, "finetune_lr_multiplier", c.train.finetune_lr_multiplier);
    }
    if (j.contains("snr_list")) {
        if (!j.at("snr_list").is_array()) throw ConfigError("snr_list must be an array");
        c.snr_list.clear();
        for (const auto& v : j.at("snr_list")) {
            if (v.is_null())
                c.snr_list.push_back(std::nullopt);
            else if (v.is_string() && v.get<std::string>() == "none")
                c.snr_list.push_back(std::nullopt);
            else
                c.snr_list.push_back(v.get<double>());
        }
        if (c.snr_list.empty()) throw ConfigError("snr_list must not be empty");
    }
    c.transfer_archive = detail::get_or<std::string>(j, "transfer_archive", "");
    c.positive_class = detail::get_or<std::string>(j, "positive_class", c.positive_class);
    c.positive(); // validate
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    c.output_dir = detail::get_or<std::string>(j, "output_dir", c.output_dir);
    c.jobs = detail::get_or<int>(j, "jobs", c.jobs);
    if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_experiment_config(j);
}

/// Every field materialized, defaults included; written into run
/// directories so results are reproducible from artifacts alone.
inline ordered_json resolved_config_json(const ExperimentConfig& c) {
    ordered_json j;
    j["dataset"] = c.dataset;
    j["images"] = c.images;
    j["representation"] = representation_name(c.representation);
    j["profile"] = c.profile_inline ? *c.profile_inline : ordered_json(c.profile);
    j["activation"] = c.activation;
    j["channels"] = c.channels;
    j["n_classes"] = c.n_classes;
    j["init"] = c.init;
    j["fold_plan"] = {{"n_folds", c.fold_plan.n_folds},
                      {"train_size", c.fold_plan.train_size},
                      {"test_size", c.fold_plan.test_size},
                      {"stratified", c.fold_plan.stratified},
                      {"mode", c.fold_plan.mode == FoldPlan::Mode::redraw ? "redraw" : "kfold"}};
    j["train"] = {{"base_lr", c.train.base_lr},
                  {"gamma", c.train.lr_policy.gamma},
                  {"step_size", c.train.lr_policy.step_size},
                  {"momentum", c.train.momentum},
                  {"weight_decay", c.train.weight_decay},
                  {"batch_size", c.train.batch_size},
                  {"max_iterations", c.train.max_iterations},
                  {"eval_interval", c.train.eval_interval},
                  {"finetune_lr_multiplier", c.train.finetune_lr_multiplier}};
    j["snr_list"] = ordered_json::array();
    for (const auto& s : c.snr_list)
        j["snr_list"].push_back(s ? ordered_json(*s) : ordered_json(nullptr));
    j["transfer_archive"] = c.transfer_archive;
    j["positive_class"] = c.positive_class;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["jobs"] = c.jobs;
    return j;
}

} // namespace ecgcnn
