#pragma once

// Beat extraction and dataset preparation: fixed-length R-centered windows,
// binary labeling, calibrated Gaussian noise injection and reproducible
// train/test fold plans.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecgcnn/binio.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/rng.hpp"
#include "ecgcnn/wfdb.hpp"

namespace ecgcnn {

inline constexpr std::size_t kBeatLength = 820;
inline constexpr std::size_t kBeatHalfWindow = kBeatLength / 2; // window is [r-410, r+410)

enum class BeatLabel : std::uint8_t { normal = 0, abnormal = 1 };

enum class LabelClass { normal, abnormal, skip };

/// One R-centered window of exactly kBeatLength millivolt samples.
struct Beat {
    std::vector<float> samples;
    BeatLabel label = BeatLabel::normal;
    std::string record_name;
    std::size_t r_index = 0;
    std::optional<float> snr_db; // absent = clean
};

struct NoiseSpec {
    double snr_db = 20.0;
    std::uint64_t seed = 0;
};

struct FoldPlan {
    enum class Mode {
        redraw, // independently seeded stratified draws per fold
        kfold   // classic partitioned k-fold
    };
    int n_folds = 5;
    std::size_t train_size = 5000;
    std::size_t test_size = 1500;
    std::uint64_t seed = 0;
    bool stratified = true;
    Mode mode = Mode::redraw;
};

/// Per-fold index sets into the beat pool; train and test never overlap.
struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Binary label for a WFDB annotation symbol. 'N' is the one normal beat
/// symbol; every other beat symbol counts as abnormal; non-beat symbols
/// (rhythm changes, noise markers, ...) yield skip.
inline LabelClass map_label(char symbol) {
    switch (symbol) {
    case 'N':
        return LabelClass::normal;
    case 'L': case 'R': case 'V': case 'A': case 'F':
    case 'E': case '/': case 'f': case 'j': case 'a':
    case 'J': case 'S': case 'e': case 'Q': case '!':
        return LabelClass::abnormal;
    default:
        if (!wfdb::code_for_symbol(symbol))
            throw UnknownSymbol(std::string("undefined annotation symbol '") + symbol + "'");
        return LabelClass::skip;
    }
}

/// Cut one window [r-410, r+410) out of a channel, repeating the boundary
/// sample where the window leaves the record.
inline std::vector<float> cut_window(std::span<const float> channel, std::size_t r_index) {
    std::vector<float> out(kBeatLength);
    if (channel.empty()) throw EmptyInput("cannot segment an empty channel");
    const long long n = static_cast<long long>(channel.size());
    const long long start = static_cast<long long>(r_index) - static_cast<long long>(kBeatHalfWindow);
    for (std::size_t i = 0; i < kBeatLength; ++i) {
        long long idx = start + static_cast<long long>(i);
        idx = std::clamp(idx, 0ll, n - 1);
        out[i] = channel[static_cast<std::size_t>(idx)];
    }
    return out;
}

/// Turn annotated records into labeled beats. Skip-class annotations
/// produce no beat.
inline std::vector<Beat> segment_beats(const wfdb::Record& record,
                                       std::span<const wfdb::Annotation> annotations,
                                       int channel = 0) {
    if (channel < 0 || std::size_t(channel) >= record.signals.size())
        throw ChannelMissing("record has no channel " + std::to_string(channel));
    std::span<const float> samples(record.signals[std::size_t(channel)]);
    std::vector<Beat> beats;
    for (const wfdb::Annotation& ann : annotations) {
        LabelClass cls = map_label(ann.symbol);
        if (cls == LabelClass::skip) continue;
        Beat beat;
        beat.samples = cut_window(samples, ann.sample_index);
        beat.label = cls == LabelClass::normal ? BeatLabel::normal : BeatLabel::abnormal;
        beat.record_name = record.header.record_name;
        beat.r_index = ann.sample_index;
        beats.push_back(std::move(beat));
    }
    return beats;
}

/// Mean squared sample value.
inline double signal_power(std::span<const float> samples) {
    double acc = 0.0;
    for (float v : samples) acc += double(v) * double(v);
    return samples.empty() ? 0.0 : acc / double(samples.size());
}

/// Add white Gaussian noise at the requested SNR. Noise variance is
/// sigma^2 = P_signal / 10^(snr_db/10) with P_signal measured on this beat.
inline Beat inject_noise(const Beat& beat, const NoiseSpec& spec) {
    const double power = signal_power(beat.samples);
    if (power <= 0.0) throw ZeroPowerSignal("beat has zero power, SNR is undefined");
    const double sigma = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));

    std::mt19937_64 engine = make_engine(spec.seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    Beat out = beat;
    for (float& v : out.samples) v = float(double(v) + gauss(engine));
    out.snr_db = float(spec.snr_db);
    return out;
}

/// Realized SNR in dB: 10*log10(sum(clean^2) / sum((noisy-clean)^2)).
inline double measure_snr(const Beat& clean, const Beat& noisy) {
    if (clean.samples.size() != noisy.samples.size())
        throw LengthMismatch("beats differ in length");
    double signal = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        const double c = clean.samples[i];
        const double d = double(noisy.samples[i]) - c;
        signal += c * c;
        noise += d * d;
    }
    if (noise == 0.0) throw IdenticalSignals("no noise between the two beats");
    return 10.0 * std::log10(signal / noise);
}

namespace detail {

/// Largest-remainder apportionment of `total` slots over class counts, so
/// every class gets floor or ceil of its proportional share.
inline std::vector<std::size_t> apportion(std::span<const std::size_t> class_counts, std::size_t total) {
    const double pool = double(std::accumulate(class_counts.begin(), class_counts.end(), std::size_t(0)));
    std::vector<std::size_t> out(class_counts.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        const double share = double(total) * double(class_counts[c]) / pool;
        out[c] = std::size_t(share);
        assigned += out[c];
        remainders.emplace_back(share - double(out[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) out[remainders[i % remainders.size()].second] += 1;
    return out;
}

} // namespace detail

/// Produce the per-fold train/test index splits for a labeled pool.
///
/// redraw mode draws an independently seeded stratified train/test sample
/// per fold (train and test disjoint within the fold); kfold mode
/// partitions the pool once and rotates the held-out part, ignoring the
/// configured sizes.
inline std::vector<FoldSplit> split_by_label(std::span<const BeatLabel> labels, const FoldPlan& plan) {
    if (plan.n_folds < 1) throw InsufficientData("fold plan needs at least one fold");
    if (labels.empty()) throw InsufficientData("empty beat pool");
    const std::size_t n = labels.size();

    // class index pools (single pool when not stratified)
    std::vector<std::vector<std::size_t>> pools;
    if (plan.stratified) {
        pools.resize(2);
        for (std::size_t i = 0; i < n; ++i) pools[std::size_t(labels[i])].push_back(i);
        pools.erase(std::remove_if(pools.begin(), pools.end(), [](auto& p) { return p.empty(); }),
                    pools.end());
    } else {
        pools.resize(1);
        for (std::size_t i = 0; i < n; ++i) pools[0].push_back(i);
    }

    std::vector<FoldSplit> folds;
    if (plan.mode == FoldPlan::Mode::redraw) {
        if (plan.train_size + plan.test_size > n)
            throw InsufficientData("pool of " + std::to_string(n) + " beats cannot supply " +
                                   std::to_string(plan.train_size) + "+" + std::to_string(plan.test_size));
        std::vector<std::size_t> counts;
        for (const auto& p : pools) counts.push_back(p.size());
        const auto train_per_class = detail::apportion(counts, plan.train_size);
        const auto test_per_class = detail::apportion(counts, plan.test_size);
        for (std::size_t c = 0; c < pools.size(); ++c)
            if (train_per_class[c] + test_per_class[c] > pools[c].size())
                throw InsufficientData("class " + std::to_string(c) + " has too few beats for a stratified draw");

        for (int fold = 0; fold < plan.n_folds; ++fold) {
            FoldSplit split;
            std::mt19937_64 engine = make_engine(derive_seed(plan.seed, std::uint64_t(fold)));
            for (std::size_t c = 0; c < pools.size(); ++c) {
                std::vector<std::size_t> order = pools[c];
                std::shuffle(order.begin(), order.end(), engine);
                split.train.insert(split.train.end(), order.begin(),
                                   order.begin() + long(train_per_class[c]));
                split.test.insert(split.test.end(), order.begin() + long(train_per_class[c]),
                                  order.begin() + long(train_per_class[c] + test_per_class[c]));
            }
            folds.push_back(std::move(split));
        }
    } else {
        if (n < std::size_t(plan.n_folds)) throw InsufficientData("fewer beats than folds");
        // stratified round-robin assignment to folds after a seeded shuffle
        std::vector<int> fold_of(n, 0);
        std::mt19937_64 engine = make_engine(derive_seed(plan.seed, std::uint64_t(0x6b666f6c64))); // "kfold"
        for (auto& pool : pools) {
            std::vector<std::size_t> order = pool;
            std::shuffle(order.begin(), order.end(), engine);
            for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = int(i % std::size_t(plan.n_folds));
        }
        folds.resize(std::size_t(plan.n_folds));
        for (int fold = 0; fold < plan.n_folds; ++fold)
            for (std::size_t i = 0; i < n; ++i)
                (fold_of[i] == fold ? folds[std::size_t(fold)].test : folds[std::size_t(fold)].train).push_back(i);
    }
    return folds;
}

inline std::vector<FoldSplit> split_dataset(std::span<const Beat> beats, const FoldPlan& plan) {
    std::vector<BeatLabel> labels(beats.size());
    for (std::size_t i = 0; i < beats.size(); ++i) labels[i] = beats[i].label;
    return split_by_label(labels, plan);
}

// ---------------------------------------------------------------------------
// ECGB beat dataset container
//
//   magic "ECGB" | version u32 LE | count u32 LE
//   per beat: label u8 | r_index u64 LE | snr_db f32 LE (NaN = clean)
//             | 820 x f32 LE samples
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kEcgbVersion = 1;

inline void save_beats(const std::filesystem::path& path, std::span<const Beat> beats) {
    ByteWriter w;
    w.text("ECGB");
    w.u32le(kEcgbVersion);
    w.u32le(std::uint32_t(beats.size()));
    for (const Beat& beat : beats) {
        if (beat.samples.size() != kBeatLength)
            throw ShapeMismatch("beat has " + std::to_string(beat.samples.size()) + " samples, need 820");
        w.u8(std::uint8_t(beat.label));
        w.u64le(beat.r_index);
        w.f32le(beat.snr_db ? *beat.snr_db : std::numeric_limits<float>::quiet_NaN());
        for (float v : beat.samples) w.f32le(v);
    }
    write_file_bytes(path, w.bytes());
}

inline std::vector<Beat> load_beats(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    ByteReader r(bytes);
    auto magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), "ECGB"))
        throw BadMagic(path.string() + " is not an ECGB beat dataset");
    if (std::uint32_t v = r.u32le(); v != kEcgbVersion)
        throw VersionUnsupported("ECGB version " + std::to_string(v));
    const std::uint32_t count = r.u32le();
    std::vector<Beat> beats(count);
    for (Beat& beat : beats) {
        const std::uint8_t label = r.u8();
        if (label > 1) throw CorruptTensor("beat label out of range");
        beat.label = BeatLabel(label);
        beat.r_index = r.u64le();
        const float snr = r.f32le();
        if (!std::isnan(snr)) beat.snr_db = snr;
        beat.samples.resize(kBeatLength);
        for (float& v : beat.samples) v = r.f32le();
    }
    return beats;
}

} // namespace ecgcnn
