#pragma once

// Uniform sample access for training and evaluation: both beat (1-D) and
// image (2-D) datasets present as "fill sample i into a float buffer plus
// a label". Views hold references to the backing container, which must
// outlive them.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ecgcnn/beats.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/raster.hpp"
#include "ecgcnn/tensor.hpp"

namespace ecgcnn {

struct DatasetView {
    std::size_t count = 0;
    std::vector<std::size_t> sample_shape; // (C, L) or (C, H, W)
    std::function<void(std::size_t, float*)> fill;
    std::function<int(std::size_t)> label_of;

    std::size_t sample_numel() const {
        std::size_t n = 1;
        for (std::size_t d : sample_shape) n *= d;
        return n;
    }
};

inline DatasetView view_of_beats(std::span<const Beat> beats) {
    DatasetView view;
    view.count = beats.size();
    view.sample_shape = {1, kBeatLength};
    view.fill = [beats](std::size_t i, float* dst) {
        const Beat& b = beats[i];
        std::copy(b.samples.begin(), b.samples.end(), dst);
    };
    view.label_of = [beats](std::size_t i) { return int(beats[i].label); };
    return view;
}

inline DatasetView view_of_images(std::span<const BeatImage> images, int channels) {
    if (channels != 1 && channels != 3)
        throw UnsupportedChannelCount("image views support 1 or 3 channels");
    DatasetView view;
    view.count = images.size();
    view.sample_shape = {std::size_t(channels), kImageSize, kImageSize};
    view.fill = [images, channels](std::size_t i, float* dst) {
        const BeatImage& img = images[i];
        for (std::size_t p = 0; p < kImagePixels; ++p) dst[p] = float(img.pixels[p]) / 255.0f;
        for (int c = 1; c < channels; ++c)
            std::copy(dst, dst + kImagePixels, dst + std::size_t(c) * kImagePixels);
    };
    view.label_of = [images](std::size_t i) { return int(images[i].label); };
    return view;
}

/// Restrict a view to a subset of its samples.
inline DatasetView subset(const DatasetView& base, std::vector<std::size_t> indices) {
    DatasetView view;
    view.count = indices.size();
    view.sample_shape = base.sample_shape;
    auto shared = std::make_shared<std::vector<std::size_t>>(std::move(indices));
    view.fill = [base_fill = base.fill, shared](std::size_t i, float* dst) {
        base_fill((*shared)[i], dst);
    };
    view.label_of = [base_label = base.label_of, shared](std::size_t i) {
        return base_label((*shared)[i]);
    };
    return view;
}

/// Stack samples[indices] into an (N, ...sample_shape) batch tensor.
inline Tensor<float> assemble_batch(const DatasetView& view, std::span<const std::size_t> indices) {
    std::vector<std::size_t> shape;
    shape.push_back(indices.size());
    shape.insert(shape.end(), view.sample_shape.begin(), view.sample_shape.end());
    Tensor<float> batch(shape);
    const std::size_t per = view.sample_numel();
    for (std::size_t i = 0; i < indices.size(); ++i) view.fill(indices[i], batch.ptr() + i * per);
    return batch;
}

inline std::vector<int> batch_labels(const DatasetView& view, std::span<const std::size_t> indices) {
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = view.label_of(indices[i]);
    return labels;
}

} // namespace ecgcnn
