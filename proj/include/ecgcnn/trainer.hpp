#pragma once

// SGD with momentum, weight decay and step learning-rate decay; the
// training loop with periodic test evaluation; ECGW weight archives;
// transfer initialization with output-layer re-initialization; and the
// cross-validated experiment driver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecgcnn/binio.hpp"
#include "ecgcnn/dataset.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/metrics.hpp"
#include "ecgcnn/network.hpp"
#include "ecgcnn/rng.hpp"

namespace ecgcnn {

struct LrPolicy {
    double gamma = 0.1;
    std::size_t step_size = 1000;
};

struct TrainConfig {
    double base_lr = 0.01;
    LrPolicy lr_policy;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t batch_size = 64;
    std::size_t max_iterations = 2000;
    std::uint64_t seed = 1;
    double finetune_lr_multiplier = 0.1;
    std::size_t eval_interval = 100;

    void validate() const {
        if (base_lr <= 0) throw ConfigError("base_lr must be positive");
        if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
        if (lr_policy.step_size < 1) throw ConfigError("lr step_size must be >= 1");
    }
};

/// Step decay: base_lr * gamma^floor(iteration / step_size).
inline double lr_at(const TrainConfig& config, std::size_t iteration) {
    return config.base_lr *
           std::pow(config.lr_policy.gamma, double(iteration / config.lr_policy.step_size));
}

template <typename T>
struct Velocity {
    struct Entry {
        Tensor<T> w, b;
    };
    std::vector<Entry> entries;

    static Velocity zeros_like(const Network<T>& net) {
        Velocity v;
        for (const auto& p : net.params)
            v.entries.push_back({Tensor<T>(p.weights.shape), Tensor<T>(p.bias.shape)});
        return v;
    }
};

/// One SGD update: v <- momentum*v - lr*(g + weight_decay*theta);
/// theta <- theta + v. Each parameter's learning rate carries its
/// lr_multiplier (used for fine-tuned layers).
template <typename T>
void sgd_step(Network<T>& net, const Gradients<T>& grads, const TrainConfig& config,
              std::size_t iteration, Velocity<T>& velocity) {
    if (grads.params.size() != net.params.size() || velocity.entries.size() != net.params.size())
        throw ShapeMismatch("gradient/velocity layout does not match the network");
    for (std::size_t pi = 0; pi < net.params.size(); ++pi)
        if (!grads.params[pi].dw.all_finite() || !grads.params[pi].db.all_finite())
            throw NonFiniteGradient("non-finite gradient for layer '" + net.params[pi].name +
                                    "' at iteration " + std::to_string(iteration));

    const double lr_base = lr_at(config, iteration);
    for (std::size_t pi = 0; pi < net.params.size(); ++pi) {
        auto& p = net.params[pi];
        const T lr = T(lr_base * p.lr_multiplier);
        const T mu = T(config.momentum);
        const T wd = T(config.weight_decay);
        auto update = [&](Tensor<T>& theta, Tensor<T>& v, const Tensor<T>& g) {
            for (std::size_t i = 0; i < theta.numel(); ++i) {
                v.data[i] = mu * v.data[i] - lr * (g.data[i] + wd * theta.data[i]);
                theta.data[i] += v.data[i];
            }
        };
        update(p.weights, velocity.entries[pi].w, grads.params[pi].dw);
        update(p.bias, velocity.entries[pi].b, grads.params[pi].db);
    }
}

struct HistoryPoint {
    std::size_t iteration = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
};

using TrainHistory = std::vector<HistoryPoint>;

/// Fraction of correct argmax predictions, as a percentage.
inline double accuracy_percent(const Network<float>& net, const DatasetView& data) {
    std::vector<BeatLabel> predictions = predict(net, data);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.count; ++i)
        if (int(predictions[i]) == data.label_of(i)) ++correct;
    return 100.0 * double(correct) / double(data.count);
}

/// Mini-batch SGD for max_iterations steps, reshuffling the training order
/// each epoch and evaluating test accuracy every eval_interval iterations
/// (plus a final point). Deterministic given the config seed.
inline TrainHistory train(Network<float>& net, const DatasetView& train_data,
                          const DatasetView& test_data, const TrainConfig& config) {
    config.validate();
    if (train_data.count == 0 || test_data.count == 0)
        throw InsufficientData("training and test sets must be nonempty");

    const std::size_t batch = std::min(config.batch_size, train_data.count);
    std::mt19937_64 shuffle_engine = make_engine(derive_seed(config.seed, "train-shuffle"));
    const std::uint64_t dropout_base = derive_seed(config.seed, "train-dropout");

    std::vector<std::size_t> order(train_data.count);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_engine);
    std::size_t cursor = 0;

    Velocity<float> velocity = Velocity<float>::zeros_like(net);
    TrainHistory history;
    std::vector<std::size_t> batch_indices(batch);

    for (std::size_t iteration = 0; iteration < config.max_iterations; ++iteration) {
        if (cursor + batch > order.size()) {
            std::shuffle(order.begin(), order.end(), shuffle_engine);
            cursor = 0;
        }
        std::copy(order.begin() + long(cursor), order.begin() + long(cursor + batch),
                  batch_indices.begin());
        cursor += batch;

        Tensor<float> inputs = assemble_batch(train_data, batch_indices);
        std::vector<int> labels = batch_labels(train_data, batch_indices);

        ForwardCache<float> cache;
        Tensor<float> logits =
            forward(net, inputs, Mode::train, derive_seed(dropout_base, iteration), &cache);
        SoftmaxResult<float> sm = softmax_xent(logits, labels);
        Gradients<float> grads = backward(net, cache, sm.dlogits);
        sgd_step(net, grads, config, iteration, velocity);

        const std::size_t done = iteration + 1;
        if (done % config.eval_interval == 0 || done == config.max_iterations) {
            HistoryPoint point;
            point.iteration = done;
            point.train_loss = sm.loss;
            point.test_accuracy = accuracy_percent(net, test_data);
            history.push_back(point);
        }
    }
    return history;
}

// --------------------------------------------------------------------------
// ECGW weight archives
//
//   magic "ECGW" | version u32 LE | tensor count u32 LE
//   per tensor: name length u32 LE | UTF-8 name | rank u32 LE
//               | dims u32 LE each | f32 LE data row-major
// --------------------------------------------------------------------------

inline constexpr std::uint32_t kEcgwVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor<float> values;
};

struct WeightArchive {
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const {
        for (const NamedTensor& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

inline void save_archive(const std::filesystem::path& path, const WeightArchive& archive) {
    ByteWriter w;
    w.text("ECGW");
    w.u32le(kEcgwVersion);
    w.u32le(std::uint32_t(archive.tensors.size()));
    for (const NamedTensor& t : archive.tensors) {
        w.u32le(std::uint32_t(t.name.size()));
        w.text(t.name);
        w.u32le(std::uint32_t(t.values.rank()));
        for (std::size_t d : t.values.shape) w.u32le(std::uint32_t(d));
        for (float v : t.values.data) w.f32le(v);
    }
    write_file_bytes(path, w.bytes());
}

inline WeightArchive load_archive(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader r(bytes);
    auto magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), "ECGW"))
        throw BadMagic(path.string() + " is not an ECGW weight archive");
    if (std::uint32_t v = r.u32le(); v != kEcgwVersion)
        throw VersionUnsupported("ECGW version " + std::to_string(v));
    const std::uint32_t count = r.u32le();
    WeightArchive archive;
    try {
        for (std::uint32_t ti = 0; ti < count; ++ti) {
            NamedTensor t;
            const std::uint32_t name_len = r.u32le();
            auto name_bytes = r.raw(name_len);
            t.name.assign(name_bytes.begin(), name_bytes.end());
            const std::uint32_t rank = r.u32le();
            std::vector<std::size_t> shape(rank);
            std::size_t numel = 1;
            for (std::uint32_t d = 0; d < rank; ++d) {
                shape[d] = r.u32le();
                numel *= shape[d];
            }
            if (numel > (std::size_t(1) << 31))
                throw CorruptTensor("tensor '" + t.name + "' declares an implausible size");
            t.values = Tensor<float>(std::move(shape));
            for (float& v : t.values.data) v = r.f32le();
            if (archive.find(t.name)) throw CorruptTensor("duplicate tensor name '" + t.name + "'");
            archive.tensors.push_back(std::move(t));
        }
    } catch (const TruncatedData& e) {
        throw CorruptTensor(std::string("archive payload truncated: ") + e.what());
    }
    return archive;
}

/// Snapshot every parameter tensor of a network as "<layer>.weight" /
/// "<layer>.bias" entries.
inline WeightArchive archive_from_network(const Network<float>& net) {
    WeightArchive archive;
    for (const auto& p : net.params) {
        archive.tensors.push_back({p.name + ".weight", p.weights});
        archive.tensors.push_back({p.name + ".bias", p.bias});
    }
    return archive;
}

/// Restore a complete network from an archive; every parameterized layer
/// must be present with matching shapes.
inline Network<float> network_from_archive(const ArchitectureProfile& profile,
                                           const WeightArchive& archive) {
    Network<float> net = build_network<float>(profile, InitScheme{}, 0);
    for (auto& p : net.params) {
        const NamedTensor* w = archive.find(p.name + ".weight");
        const NamedTensor* b = archive.find(p.name + ".bias");
        if (!w || !b) throw MissingLayer("archive lacks tensors for layer '" + p.name + "'");
        if (w->values.shape != p.weights.shape || b->values.shape != p.bias.shape)
            throw ShapeMismatch("archive tensor shape for layer '" + p.name + "' is " +
                                shape_str(w->values.shape) + ", network needs " +
                                shape_str(p.weights.shape));
        p.weights = w->values;
        p.bias = b->values;
    }
    return net;
}

/// Load every layer except the final FC from an archive and mark the
/// imported layers with the fine-tune learning-rate multiplier. The final
/// FC layer is re-initialized for n_classes outputs at full learning rate.
inline void apply_transfer(Network<float>& net, const WeightArchive& archive, int n_classes,
                           double finetune_lr_multiplier, std::uint64_t reinit_seed,
                           const InitScheme& init = {}) {
    if (net.params.empty()) throw MissingLayer("network has no parameterized layers");
    if (n_classes != net.profile.n_classes)
        throw ShapeMismatch("transfer target expects " + std::to_string(net.profile.n_classes) +
                            " classes, got " + std::to_string(n_classes));
    const std::size_t last = net.params.size() - 1;
    for (std::size_t pi = 0; pi < last; ++pi) {
        auto& p = net.params[pi];
        const NamedTensor* w = archive.find(p.name + ".weight");
        const NamedTensor* b = archive.find(p.name + ".bias");
        if (!w || !b) throw MissingLayer("archive lacks tensors for layer '" + p.name + "'");
        if (w->values.shape != p.weights.shape || b->values.shape != p.bias.shape)
            throw ShapeMismatch("archive tensor shape for layer '" + p.name + "' is " +
                                shape_str(w->values.shape) + ", network needs " +
                                shape_str(p.weights.shape));
        p.weights = w->values;
        p.bias = b->values;
        p.lr_multiplier = finetune_lr_multiplier;
    }
    // fresh output layer
    auto& out = net.params[last];
    const std::size_t fan_in = out.weights.shape[1];
    out.weights = Tensor<float>({std::size_t(n_classes), fan_in});
    out.bias = Tensor<float>({std::size_t(n_classes)});
    out.lr_multiplier = 1.0;
    std::mt19937_64 engine = make_engine(derive_seed(reinit_seed, "transfer-reinit:" + out.name));
    detail::init_param<float>(out, fan_in, std::size_t(n_classes), net.profile.activation, init, engine);
}

// --------------------------------------------------------------------------
// cross-validated experiments
// --------------------------------------------------------------------------

struct ExperimentResult {
    std::vector<MetricsReport> fold_reports;
    std::vector<TrainHistory> histories;
    std::vector<Network<float>> fold_nets;
    MetricsReport mean_report; // metric means over folds; matrix holds summed counts
};

struct ExperimentSetup {
    ArchitectureProfile profile;
    TrainConfig train_config;
    InitScheme init;
    std::uint64_t seed = 1;                        // drives per-fold init/train streams
    BeatLabel positive = BeatLabel::abnormal;
    const WeightArchive* transfer = nullptr;       // optional transfer initialization
    std::string model_name;
    int jobs = 1;                                  // folds trained concurrently
};

/// Train one model per fold and aggregate fold metrics. Per-fold seeds are
/// derived from the experiment seed, so folds are independent, may run
/// concurrently, and the whole run is reproducible either way.
inline ExperimentResult run_experiment(const DatasetView& pool, std::span<const FoldSplit> folds,
                                       const ExperimentSetup& setup) {
    if (folds.empty()) throw InsufficientData("no folds to run");

    struct FoldOutcome {
        Network<float> net;
        TrainHistory history;
        MetricsReport report;
    };
    auto run_fold = [&](std::size_t fold) {
        FoldOutcome out;
        out.net = build_network<float>(setup.profile, setup.init,
                                       derive_seed(setup.seed, "fold-init:" + std::to_string(fold)));
        if (setup.transfer)
            apply_transfer(out.net, *setup.transfer, setup.profile.n_classes,
                           setup.train_config.finetune_lr_multiplier,
                           derive_seed(setup.seed, "fold-transfer:" + std::to_string(fold)));

        TrainConfig fold_config = setup.train_config;
        fold_config.seed = derive_seed(setup.seed, "fold-train:" + std::to_string(fold));

        DatasetView train_view = subset(pool, folds[fold].train);
        DatasetView test_view = subset(pool, folds[fold].test);
        out.history = train(out.net, train_view, test_view, fold_config);
        out.report = evaluate_dataset(out.net, test_view, setup.positive);
        out.report.model = setup.model_name;
        out.report.fold = int(fold);
        return out;
    };

    std::vector<FoldOutcome> outcomes(folds.size());
    if (setup.jobs <= 1) {
        for (std::size_t fold = 0; fold < folds.size(); ++fold) outcomes[fold] = run_fold(fold);
    } else {
        // wave scheduling: up to `jobs` folds in flight
        for (std::size_t start = 0; start < folds.size(); start += std::size_t(setup.jobs)) {
            const std::size_t end = std::min(folds.size(), start + std::size_t(setup.jobs));
            std::vector<std::future<FoldOutcome>> wave;
            for (std::size_t fold = start; fold < end; ++fold)
                wave.push_back(std::async(std::launch::async, run_fold, fold));
            for (std::size_t fold = start; fold < end; ++fold)
                outcomes[fold] = wave[fold - start].get();
        }
    }

    ExperimentResult result;
    double sen_sum = 0, spe_sum = 0, acc_sum = 0;
    std::size_t sen_n = 0, spe_n = 0, acc_n = 0;
    for (FoldOutcome& out : outcomes) {
        if (out.report.sensitivity) { sen_sum += *out.report.sensitivity; ++sen_n; }
        if (out.report.specificity) { spe_sum += *out.report.specificity; ++spe_n; }
        if (out.report.accuracy) { acc_sum += *out.report.accuracy; ++acc_n; }
        result.mean_report.matrix.tp += out.report.matrix.tp;
        result.mean_report.matrix.tn += out.report.matrix.tn;
        result.mean_report.matrix.fp += out.report.matrix.fp;
        result.mean_report.matrix.fn += out.report.matrix.fn;
        result.histories.push_back(std::move(out.history));
        result.fold_reports.push_back(std::move(out.report));
        result.fold_nets.push_back(std::move(out.net));
    }
    result.mean_report.model = setup.model_name;
    if (sen_n) result.mean_report.sensitivity = sen_sum / double(sen_n);
    if (spe_n) result.mean_report.specificity = spe_sum / double(spe_n);
    if (acc_n) result.mean_report.accuracy = acc_sum / double(acc_n);
    return result;
}

} // namespace ecgcnn
