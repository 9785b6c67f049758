#pragma once

// Beat-to-image rendering: a beat becomes a 256x256 binary waveform image
// under dataset-wide fixed axis bounds, so every image shares one voltage
// scale. Consecutive sample points are joined with Bresenham lines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgcnn/beats.hpp"
#include "ecgcnn/binio.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/tensor.hpp"

namespace ecgcnn {

inline constexpr std::size_t kImageSize = 256;
inline constexpr std::size_t kImagePixels = kImageSize * kImageSize;
inline constexpr std::uint8_t kForeground = 255; // intensity 1.0
inline constexpr double kBoundsMargin = 0.05;    // 5% of range on each side

struct AxisBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// 256x256 single-channel waveform image. Pixels are 0 (background) or
/// 255 (waveform); intensity = pixel / 255.
struct BeatImage {
    std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(kImagePixels, 0);
    BeatLabel label = BeatLabel::normal;

    std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * kImageSize + col]; }
    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * kImageSize + col]; }
};

/// Fixed axis bounds for a dataset: global min/max with a 5% margin so the
/// waveform stays off the image border.
inline AxisBounds compute_bounds(std::span<const Beat> beats) {
    if (beats.empty()) throw EmptyDataset("cannot compute bounds of an empty dataset");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Beat& beat : beats)
        for (float v : beat.samples) {
            lo = std::min(lo, double(v));
            hi = std::max(hi, double(v));
        }
    if (!(hi > lo)) throw DegenerateRange("dataset voltage range is a single point");
    const double margin = (hi - lo) * kBoundsMargin;
    return AxisBounds{lo - margin, hi + margin};
}

namespace detail {

/// Half-away-from-zero rounding, pinned for cross-platform reproducibility.
inline long round_half_away(double v) {
    return std::lround(v);
}

inline void draw_line(BeatImage& image, long c0, long r0, long c1, long r1) {
    // standard 8-connected Bresenham
    const long dc = std::abs(c1 - c0), dr = -std::abs(r1 - r0);
    const long sc = c0 < c1 ? 1 : -1, sr = r0 < r1 ? 1 : -1;
    long err = dc + dr;
    long c = c0, r = r0;
    while (true) {
        image.at(std::size_t(r), std::size_t(c)) = kForeground;
        if (c == c1 && r == r1) break;
        const long e2 = 2 * err;
        if (e2 >= dr) {
            err += dr;
            c += sc;
        }
        if (e2 <= dc) {
            err += dc;
            r += sr;
        }
    }
}

} // namespace detail

/// Render one beat. Sample t maps to column round(t*255/819); value v maps
/// to row round((hi - clamp(v)) * 255 / (hi - lo)); values outside the
/// bounds clamp to the border rows.
inline BeatImage rasterize(const Beat& beat, const AxisBounds& bounds) {
    if (!(bounds.hi > bounds.lo)) throw DegenerateRange("axis bounds are degenerate");
    if (beat.samples.size() != kBeatLength)
        throw ShapeMismatch("beat has " + std::to_string(beat.samples.size()) + " samples, need 820");

    BeatImage image;
    image.label = beat.label;
    const double span = bounds.hi - bounds.lo;
    long prev_c = 0, prev_r = 0;
    for (std::size_t t = 0; t < kBeatLength; ++t) {
        const double v = std::clamp(double(beat.samples[t]), bounds.lo, bounds.hi);
        const long c = detail::round_half_away(double(t) * 255.0 / double(kBeatLength - 1));
        const long r = detail::round_half_away((bounds.hi - v) * 255.0 / span);
        if (t == 0)
            image.at(std::size_t(r), std::size_t(c)) = kForeground;
        else
            detail::draw_line(image, prev_c, prev_r, c, r);
        prev_c = c;
        prev_r = r;
    }
    return image;
}

/// Wrap an image as a (channels, 256, 256) float tensor with values in
/// {0, 1}; channels 3 replicates the grayscale plane.
inline Tensor<float> to_input_tensor(const BeatImage& image, int channels) {
    if (channels != 1 && channels != 3)
        throw UnsupportedChannelCount("image tensors support 1 or 3 channels, not " +
                                      std::to_string(channels));
    Tensor<float> out({std::size_t(channels), kImageSize, kImageSize});
    for (std::size_t i = 0; i < kImagePixels; ++i) out.data[i] = float(image.pixels[i]) / 255.0f;
    for (int c = 1; c < channels; ++c)
        std::copy(out.data.begin(), out.data.begin() + long(kImagePixels),
                  out.data.begin() + long(kImagePixels) * c);
    return out;
}

// ---------------------------------------------------------------------------
// ECGI image dataset container
//
//   magic "ECGI" | version u32 LE | count u32 LE
//   per image: label u8 | 65536 bytes row-major u8 pixels
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kEcgiVersion = 1;

inline void save_images(const std::filesystem::path& path, std::span<const BeatImage> images) {
    ByteWriter w;
    w.text("ECGI");
    w.u32le(kEcgiVersion);
    w.u32le(std::uint32_t(images.size()));
    for (const BeatImage& image : images) {
        w.u8(std::uint8_t(image.label));
        w.raw(std::span<const std::uint8_t>(image.pixels));
    }
    write_file_bytes(path, w.bytes());
}

inline std::vector<BeatImage> load_images(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader r(bytes);
    auto magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), "ECGI"))
        throw BadMagic(path.string() + " is not an ECGI image dataset");
    if (std::uint32_t v = r.u32le(); v != kEcgiVersion)
        throw VersionUnsupported("ECGI version " + std::to_string(v));
    const std::uint32_t count = r.u32le();
    std::vector<BeatImage> images(count);
    for (BeatImage& image : images) {
        const std::uint8_t label = r.u8();
        if (label > 1) throw CorruptTensor("image label out of range");
        image.label = BeatLabel(label);
        auto raw = r.raw(kImagePixels);
        std::copy(raw.begin(), raw.end(), image.pixels.begin());
    }
    return images;
}

/// 8-bit grayscale PGM export for human inspection. `invert` renders the
/// waveform black on white.
inline void write_pgm(const std::filesystem::path& path, const BeatImage& image, bool invert = false) {
    ByteWriter w;
    w.text("P5\n256 256\n255\n");
    for (std::uint8_t p : image.pixels) w.u8(invert ? std::uint8_t(255 - p) : p);
    write_file_bytes(path, w.bytes());
}

} // namespace ecgcnn
