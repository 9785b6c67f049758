#pragma once

// Confusion-matrix accounting with sensitivity/specificity/accuracy, batch
// prediction, and the SNR robustness sweep. The abnormal class is the
// positive class by default (detecting disease is the positive event);
// the polarity is configurable.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgcnn/beats.hpp"
#include "ecgcnn/dataset.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/network.hpp"
#include "ecgcnn/raster.hpp"
#include "ecgcnn/rng.hpp"

namespace ecgcnn {

struct ConfusionMatrix {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

struct MetricsReport {
    std::optional<double> sensitivity; // percent; absent when the denominator is zero
    std::optional<double> specificity;
    std::optional<double> accuracy;
    ConfusionMatrix matrix;
    // condition metadata
    std::string model;
    std::optional<double> snr_db;
    int fold = -1;
};

/// Count the four-way contingency between predictions and truth.
inline ConfusionMatrix confusion(std::span<const BeatLabel> predictions, std::span<const BeatLabel> truth,
                                 BeatLabel positive = BeatLabel::abnormal) {
    if (predictions.size() != truth.size())
        throw LengthMismatch("prediction and truth lengths differ");
    if (predictions.empty()) throw EmptyInput("cannot evaluate zero predictions");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred_pos = predictions[i] == positive;
        const bool true_pos = truth[i] == positive;
        if (pred_pos && true_pos) ++m.tp;
        else if (!pred_pos && !true_pos) ++m.tn;
        else if (pred_pos) ++m.fp;
        else ++m.fn;
    }
    return m;
}

/// Sen = TP/(TP+FN), Spe = TN/(TN+FP), Acc = (TP+TN)/total, as percentages.
/// A zero denominator leaves that metric absent rather than failing the
/// whole report.
inline MetricsReport evaluate(const ConfusionMatrix& matrix) {
    MetricsReport r;
    r.matrix = matrix;
    if (matrix.tp + matrix.fn > 0)
        r.sensitivity = 100.0 * double(matrix.tp) / double(matrix.tp + matrix.fn);
    if (matrix.tn + matrix.fp > 0)
        r.specificity = 100.0 * double(matrix.tn) / double(matrix.tn + matrix.fp);
    if (matrix.total() > 0)
        r.accuracy = 100.0 * double(matrix.tp + matrix.tn) / double(matrix.total());
    return r;
}

/// Argmax predictions over a dataset, evaluated in eval mode in batches.
inline std::vector<BeatLabel> predict(const Network<float>& net, const DatasetView& data,
                                      std::size_t batch_size = 64) {
    std::vector<BeatLabel> out;
    out.reserve(data.count);
    std::vector<std::size_t> indices;
    for (std::size_t start = 0; start < data.count; start += batch_size) {
        const std::size_t n = std::min(batch_size, data.count - start);
        indices.resize(n);
        for (std::size_t i = 0; i < n; ++i) indices[i] = start + i;
        Tensor<float> logits = forward(net, assemble_batch(data, indices), Mode::eval);
        const std::size_t k = logits.shape[1];
        for (std::size_t i = 0; i < n; ++i) {
            const float* row = logits.ptr() + i * k;
            std::size_t best = 0;
            for (std::size_t j = 1; j < k; ++j)
                if (row[j] > row[best]) best = j;
            out.push_back(BeatLabel(best));
        }
    }
    return out;
}

inline std::vector<BeatLabel> truth_labels(const DatasetView& data) {
    std::vector<BeatLabel> out(data.count);
    for (std::size_t i = 0; i < data.count; ++i) out[i] = BeatLabel(data.label_of(i));
    return out;
}

inline MetricsReport evaluate_dataset(const Network<float>& net, const DatasetView& data,
                                      BeatLabel positive = BeatLabel::abnormal) {
    std::vector<BeatLabel> predictions = predict(net, data);
    std::vector<BeatLabel> truth = truth_labels(data);
    return evaluate(confusion(predictions, truth, positive));
}

enum class Representation { signal_1d, image_2d };

inline Representation representation_parse(const std::string& name) {
    if (name == "signal-1d") return Representation::signal_1d;
    if (name == "image-2d") return Representation::image_2d;
    throw ConfigError("unknown representation '" + name + "' (want signal-1d or image-2d)");
}

inline std::string representation_name(Representation r) {
    return r == Representation::signal_1d ? "signal-1d" : "image-2d";
}

struct SweepCondition {
    std::optional<double> snr_db; // absent = clean
};

/// Evaluate a trained model on the clean test beats and on noise-injected
/// copies at each requested SNR. Noise seeds derive from (seed, SNR,
/// beat index), so every condition is reproducible independently. For the
/// 2-D representation each condition is re-rasterized under the supplied
/// bounds.
inline std::vector<MetricsReport> robustness_sweep(const Network<float>& net,
                                                   std::span<const Beat> clean_test,
                                                   std::span<const SweepCondition> conditions,
                                                   const AxisBounds& bounds, Representation representation,
                                                   std::uint64_t seed, int channels = 1,
                                                   BeatLabel positive = BeatLabel::abnormal,
                                                   const std::string& model_name = "") {
    if (conditions.empty()) throw EmptyInput("sweep needs at least one condition");
    if (clean_test.empty()) throw EmptyInput("sweep needs a nonempty test set");

    std::vector<MetricsReport> reports;
    for (const SweepCondition& condition : conditions) {
        std::vector<Beat> working;
        std::span<const Beat> beats = clean_test;
        if (condition.snr_db) {
            const std::uint64_t condition_seed =
                derive_seed(seed, "sweep-snr:" + std::to_string(*condition.snr_db));
            working.reserve(clean_test.size());
            for (std::size_t i = 0; i < clean_test.size(); ++i)
                working.push_back(inject_noise(
                    clean_test[i], NoiseSpec{*condition.snr_db, derive_seed(condition_seed, i)}));
            beats = working;
        }

        MetricsReport report;
        if (representation == Representation::signal_1d) {
            report = evaluate_dataset(net, view_of_beats(beats), positive);
        } else {
            std::vector<BeatImage> images;
            images.reserve(beats.size());
            for (const Beat& b : beats) images.push_back(rasterize(b, bounds));
            report = evaluate_dataset(net, view_of_images(images, channels), positive);
        }
        report.model = model_name;
        report.snr_db = condition.snr_db;
        reports.push_back(std::move(report));
    }
    return reports;
}

/// Default sweep grid: clean plus 35/30/25/20 dB.
inline std::vector<SweepCondition> default_sweep_conditions() {
    return {{std::nullopt}, {35.0}, {30.0}, {25.0}, {20.0}};
}

/// Robustness spread of a sweep: max minus min accuracy across its rows,
/// in percentage points.
inline double accuracy_span(std::span<const MetricsReport> reports) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const MetricsReport& r : reports) {
        if (!r.accuracy) continue;
        lo = std::min(lo, *r.accuracy);
        hi = std::max(hi, *r.accuracy);
    }
    if (!(hi >= lo)) throw EmptyInput("no defined accuracies in sweep");
    return hi - lo;
}

} // namespace ecgcnn
