#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "ecgcnn/raster.hpp"
#include "testutil.hpp"

using namespace ecgcnn;

namespace {

Beat beat_of(std::vector<float> prefix, float fill = 0.0f) {
    Beat b;
    b.samples = std::move(prefix);
    b.samples.resize(kBeatLength, fill);
    return b;
}

Beat constant_beat(float v) { return beat_of({}, v); }

std::size_t lit_count(const BeatImage& im) {
    std::size_t n = 0;
    for (auto p : im.pixels) n += p == kForeground;
    return n;
}

/// All lit pixels form one 8-connected component.
bool curve_is_connected(const BeatImage& im) {
    std::vector<char> seen(kImagePixels, 0);
    std::size_t total = lit_count(im), start = kImagePixels;
    for (std::size_t i = 0; i < kImagePixels; ++i)
        if (im.pixels[i] == kForeground) {
            start = i;
            break;
        }
    if (start == kImagePixels) return false;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    std::size_t visited = 0;
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        ++visited;
        const long r = long(i / kImageSize), c = long(i % kImageSize);
        for (long dr = -1; dr <= 1; ++dr)
            for (long dc = -1; dc <= 1; ++dc) {
                const long nr = r + dr, nc = c + dc;
                if (nr < 0 || nr >= long(kImageSize) || nc < 0 || nc >= long(kImageSize)) continue;
                const std::size_t ni = std::size_t(nr) * kImageSize + std::size_t(nc);
                if (!seen[ni] && im.pixels[ni] == kForeground) {
                    seen[ni] = 1;
                    queue.push_back(ni);
                }
            }
    }
    return visited == total;
}

bool every_column_lit(const BeatImage& im) {
    for (std::size_t c = 0; c < kImageSize; ++c) {
        bool lit = false;
        for (std::size_t r = 0; r < kImageSize && !lit; ++r) lit = im.at(r, c) == kForeground;
        if (!lit) return false;
    }
    return true;
}

Beat random_beat(std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> g(0.0, 0.8);
    Beat b;
    b.samples.resize(kBeatLength);
    for (auto& v : b.samples) v = float(g(engine));
    return b;
}

} // namespace

TEST(ComputeBounds, FivePercentMargin) {
    std::vector<Beat> beats{beat_of({-1.0f, 1.0f})};
    AxisBounds bounds = compute_bounds(beats);
    EXPECT_DOUBLE_EQ(bounds.lo, -1.1);
    EXPECT_DOUBLE_EQ(bounds.hi, 1.1);
}

TEST(ComputeBounds, EmptyAndDegenerateRejected) {
    EXPECT_THROW(compute_bounds(std::vector<Beat>{}), EmptyDataset);
    std::vector<Beat> constant{constant_beat(0.7f)};
    EXPECT_THROW(compute_bounds(constant), DegenerateRange);
}

TEST(ComputeBounds, OrderFree) {
    std::vector<Beat> a{random_beat(1), random_beat(2), random_beat(3)};
    std::vector<Beat> b{a[2], a[0], a[1]};
    AxisBounds ba = compute_bounds(a), bb = compute_bounds(b);
    EXPECT_DOUBLE_EQ(ba.lo, bb.lo);
    EXPECT_DOUBLE_EQ(ba.hi, bb.hi);
}

TEST(Rasterize, ConstantZeroBeatIsMidlineRow128) {
    BeatImage im = rasterize(constant_beat(0.0f), AxisBounds{-1.0, 1.0});
    for (std::size_t c = 0; c < kImageSize; ++c) EXPECT_EQ(im.at(128, c), kForeground);
    EXPECT_EQ(lit_count(im), kImageSize); // a single horizontal line
}

TEST(Rasterize, LinearRampIsConnectedDiagonal) {
    Beat ramp;
    ramp.samples.resize(kBeatLength);
    for (std::size_t t = 0; t < kBeatLength; ++t)
        ramp.samples[t] = -1.0f + 2.0f * float(t) / float(kBeatLength - 1);
    BeatImage im = rasterize(ramp, AxisBounds{-1.0, 1.0});
    EXPECT_EQ(im.at(255, 0), kForeground);  // lo maps to the bottom row
    EXPECT_EQ(im.at(0, 255), kForeground);  // hi maps to the top row
    EXPECT_TRUE(every_column_lit(im));
    EXPECT_TRUE(curve_is_connected(im));
}

TEST(Rasterize, SpikeFullyLightsItsColumn) {
    Beat spike = constant_beat(-1.0f);
    spike.samples[410] = 1.0f;
    BeatImage im = rasterize(spike, AxisBounds{-1.0, 1.0});
    // the return stroke from the peak is a vertical Bresenham segment
    const long col = std::lround(410.0 * 255.0 / 819.0);
    for (std::size_t r = 0; r < kImageSize; ++r) EXPECT_EQ(im.at(r, std::size_t(col)), kForeground);
}

TEST(Rasterize, ClampsOutOfBoundsToBorderRows) {
    Beat big = constant_beat(0.0f);
    for (std::size_t t = 0; t < kBeatLength; ++t) big.samples[t] = (t % 2) ? 50.0f : -50.0f;
    BeatImage im = rasterize(big, AxisBounds{-1.0, 1.0});
    bool top = false, bottom = false;
    for (std::size_t c = 0; c < kImageSize; ++c) {
        top = top || im.at(0, c) == kForeground;
        bottom = bottom || im.at(255, c) == kForeground;
    }
    EXPECT_TRUE(top);
    EXPECT_TRUE(bottom);
    EXPECT_TRUE(curve_is_connected(im));
}

TEST(Rasterize, DeterministicAndPure) {
    Beat b = random_beat(7);
    AxisBounds bounds{-3.0, 3.0};
    BeatImage a = rasterize(b, bounds);
    BeatImage c = rasterize(b, bounds);
    EXPECT_EQ(a.pixels, c.pixels);
}

TEST(Rasterize, FuzzColumnCoverageAndConnectivity) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Beat b = random_beat(seed);
        std::vector<Beat> single{b};
        BeatImage im = rasterize(b, compute_bounds(single));
        EXPECT_TRUE(every_column_lit(im)) << "seed " << seed;
        EXPECT_TRUE(curve_is_connected(im)) << "seed " << seed;
    }
}

TEST(Rasterize, RejectsBadInputs) {
    EXPECT_THROW(rasterize(constant_beat(0.0f), AxisBounds{1.0, 1.0}), DegenerateRange);
    Beat short_beat;
    short_beat.samples.assign(10, 0.0f);
    EXPECT_THROW(rasterize(short_beat, AxisBounds{-1.0, 1.0}), ShapeMismatch);
}

TEST(InputTensor, ChannelHandling) {
    BeatImage im = rasterize(random_beat(5), AxisBounds{-3.0, 3.0});
    Tensor<float> one = to_input_tensor(im, 1);
    EXPECT_EQ(one.shape, (std::vector<std::size_t>{1, 256, 256}));
    for (std::size_t i = 0; i < kImagePixels; ++i)
        ASSERT_FLOAT_EQ(one.data[i], im.pixels[i] == kForeground ? 1.0f : 0.0f);

    Tensor<float> three = to_input_tensor(im, 3);
    EXPECT_EQ(three.shape, (std::vector<std::size_t>{3, 256, 256}));
    for (std::size_t c = 1; c < 3; ++c)
        for (std::size_t i = 0; i < kImagePixels; ++i)
            ASSERT_EQ(three.data[c * kImagePixels + i], three.data[i]);

    EXPECT_THROW(to_input_tensor(im, 2), UnsupportedChannelCount);
}

TEST(EcgiContainer, RoundTripsImages) {
    testutil::TempDir dir;
    std::vector<BeatImage> images;
    for (std::uint64_t s = 0; s < 4; ++s) {
        BeatImage im = rasterize(random_beat(s), AxisBounds{-3.0, 3.0});
        im.label = s % 2 ? BeatLabel::abnormal : BeatLabel::normal;
        images.push_back(std::move(im));
    }
    save_images(dir.file("i.ecgi"), images);
    auto loaded = load_images(dir.file("i.ecgi"));
    ASSERT_EQ(loaded.size(), images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        EXPECT_EQ(loaded[i].pixels, images[i].pixels);
        EXPECT_EQ(loaded[i].label, images[i].label);
    }
    // identical bytes on re-save
    save_images(dir.file("i2.ecgi"), loaded);
    EXPECT_EQ(read_file_bytes(dir.file("i.ecgi")), read_file_bytes(dir.file("i2.ecgi")));
}

TEST(EcgiContainer, BadMagicThrows) {
    testutil::TempDir dir;
    testutil::write_text(dir.file("bad.ecgi"), "XXXX1234");
    EXPECT_THROW(load_images(dir.file("bad.ecgi")), BadMagic);
}

TEST(PgmExport, HeaderAndPolarity) {
    testutil::TempDir dir;
    BeatImage im = rasterize(constant_beat(0.0f), AxisBounds{-1.0, 1.0});
    write_pgm(dir.file("a.pgm"), im, false);
    write_pgm(dir.file("b.pgm"), im, true);
    auto a = read_file_bytes(dir.file("a.pgm"));
    auto b = read_file_bytes(dir.file("b.pgm"));
    const std::string header = "P5\n256 256\n255\n";
    ASSERT_GT(a.size(), header.size());
    EXPECT_EQ(std::string(a.begin(), a.begin() + long(header.size())), header);
    EXPECT_EQ(a.size(), header.size() + kImagePixels);
    for (std::size_t i = 0; i < kImagePixels; ++i)
        ASSERT_EQ(255 - a[header.size() + i], b[header.size() + i]);
}
