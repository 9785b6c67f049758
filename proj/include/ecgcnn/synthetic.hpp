#pragma once

// Procedural signal generators: synthetic ECG records (normal beats vs
// PVC-like abnormal beats built from Gaussian bump templates) for running
// the pipeline without database files, and waveform-vs-noise signals for
// the synthetic pretraining command.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ecgcnn/beats.hpp"
#include "ecgcnn/rng.hpp"
#include "ecgcnn/wfdb.hpp"

namespace ecgcnn {

struct SyntheticEcgOptions {
    std::size_t n_beats = 100;
    double abnormal_fraction = 0.4;
    double sampling_rate = 360.0;
    double rhythm_marker_fraction = 0.02; // non-beat '+' annotations sprinkled in
    std::uint64_t seed = 1;
    std::string record_name = "synth";
};

namespace detail {

inline double gauss_bump(double t, double center, double sigma, double amplitude) {
    const double z = (t - center) / sigma;
    return amplitude * std::exp(-0.5 * z * z);
}

struct BeatMorphology {
    bool abnormal = false;
    double amp_scale = 1.0;
    double width_scale = 1.0;
};

/// Template value at offset dt (seconds) from the R peak. Normal beats
/// carry a P wave and a narrow QRS; abnormal beats are PVC-like: no P,
/// wide tall QRS, inverted T.
inline double beat_template(double dt, const BeatMorphology& m) {
    const double a = m.amp_scale, w = m.width_scale;
    if (!m.abnormal) {
        return gauss_bump(dt, -0.19 * w, 0.025 * w, 0.15 * a) +
               gauss_bump(dt, -0.025 * w, 0.010 * w, -0.10 * a) +
               gauss_bump(dt, 0.0, 0.012 * w, 1.20 * a) +
               gauss_bump(dt, 0.028 * w, 0.012 * w, -0.25 * a) +
               gauss_bump(dt, 0.28 * w, 0.060 * w, 0.35 * a);
    }
    return gauss_bump(dt, 0.0, 0.045 * w, 1.55 * a) +
           gauss_bump(dt, 0.085 * w, 0.040 * w, -0.55 * a) +
           gauss_bump(dt, 0.33 * w, 0.080 * w, -0.40 * a);
}

} // namespace detail

/// Generate a single-channel record with annotated beats. Abnormal beats
/// rotate through the symbols V/L/R/A/F; occasional '+' rhythm markers
/// exercise the non-beat skip path downstream.
inline std::pair<wfdb::Record, std::vector<wfdb::Annotation>>
generate_synthetic_record(const SyntheticEcgOptions& options) {
    static constexpr char kAbnormalSymbols[] = {'V', 'L', 'R', 'A', 'F'};
    const double fs = options.sampling_rate;

    std::mt19937_64 engine = make_engine(derive_seed(options.seed, "synth-ecg"));
    std::normal_distribution<double> rr_jitter(0.80, 0.05);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    // R-peak times and per-beat morphology
    std::vector<double> r_times;
    std::vector<detail::BeatMorphology> morphologies;
    double t = 1.0;
    std::size_t abnormal_emitted = 0;
    for (std::size_t i = 0; i < options.n_beats; ++i) {
        r_times.push_back(t);
        detail::BeatMorphology m;
        // interleave classes deterministically against the target fraction
        const double target = options.abnormal_fraction * double(i + 1);
        m.abnormal = double(abnormal_emitted) + 0.5 < target;
        if (m.abnormal) ++abnormal_emitted;
        m.amp_scale = 0.85 + 0.3 * uniform(engine);
        m.width_scale = 0.90 + 0.2 * uniform(engine);
        morphologies.push_back(m);
        t += std::clamp(rr_jitter(engine), 0.6, 1.1);
    }

    const std::size_t n_samples = std::size_t((t + 1.5) * fs);
    std::vector<float> signal(n_samples, 0.0f);
    for (std::size_t b = 0; b < r_times.size(); ++b) {
        const long center = long(std::lround(r_times[b] * fs));
        const long lo = std::max(0l, center - long(0.45 * fs));
        const long hi = std::min(long(n_samples) - 1, center + long(0.55 * fs));
        for (long s = lo; s <= hi; ++s)
            signal[std::size_t(s)] +=
                float(detail::beat_template((double(s) - double(center)) / fs, morphologies[b]));
    }

    wfdb::Record record;
    record.header.record_name = options.record_name;
    record.header.n_signals = 1;
    record.header.sampling_rate = fs;
    record.header.n_samples = n_samples;
    record.header.signals.push_back(wfdb::SignalSpec{options.record_name + ".dat", 212, 200.0, 0.0});
    record.signals.push_back(std::move(signal));

    std::vector<wfdb::Annotation> annotations;
    std::size_t abnormal_index = 0;
    for (std::size_t b = 0; b < r_times.size(); ++b) {
        if (options.rhythm_marker_fraction > 0 && uniform(engine) < options.rhythm_marker_fraction) {
            const std::size_t marker = std::size_t(std::lround((r_times[b] - 0.35) * fs));
            annotations.push_back(
                {marker, '+', wfdb::code_for_symbol('+').value()});
        }
        wfdb::Annotation ann;
        ann.sample_index = std::size_t(std::lround(r_times[b] * fs));
        if (morphologies[b].abnormal) {
            ann.symbol = kAbnormalSymbols[abnormal_index++ % std::size(kAbnormalSymbols)];
        } else {
            ann.symbol = 'N';
        }
        ann.raw_code = wfdb::code_for_symbol(ann.symbol).value();
        annotations.push_back(ann);
    }
    return {std::move(record), std::move(annotations)};
}

// --------------------------------------------------------------------------
// waveform-vs-noise pretraining data
// --------------------------------------------------------------------------

struct PretrainOptions {
    std::size_t count = 600; // total signals, half per class
    std::uint64_t seed = 77;
};

/// Beat-length signals in two classes: smooth random multi-bump waveforms
/// (label normal) and white-noise scribbles (label abnormal). Rendered
/// through the usual rasterizer they make a curve-vs-texture pretraining
/// task whose low-level features carry over to ECG waveform images.
inline std::vector<Beat> generate_pretrain_beats(const PretrainOptions& options) {
    std::vector<Beat> beats;
    beats.reserve(options.count);
    for (std::size_t i = 0; i < options.count; ++i) {
        std::mt19937_64 engine = make_engine(derive_seed(options.seed, i));
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        Beat beat;
        beat.samples.resize(kBeatLength);
        beat.record_name = "pretrain";
        beat.r_index = i;
        const bool noise_class = (i % 2) == 1;
        if (noise_class) {
            std::normal_distribution<double> white(0.0, 0.35);
            for (float& v : beat.samples) v = float(white(engine));
            beat.label = BeatLabel::abnormal;
        } else {
            const int bumps = 3 + int(uniform(engine) * 6.0);
            std::vector<double> center(bumps), sigma(bumps), amp(bumps);
            for (int b = 0; b < bumps; ++b) {
                center[b] = uniform(engine) * double(kBeatLength);
                sigma[b] = (0.02 + 0.08 * uniform(engine)) * double(kBeatLength);
                amp[b] = (uniform(engine) * 2.0 - 1.0) * 1.2;
            }
            for (std::size_t s = 0; s < kBeatLength; ++s) {
                double v = 0.0;
                for (int b = 0; b < bumps; ++b)
                    v += detail::gauss_bump(double(s), center[b], sigma[b], amp[b]);
                beat.samples[s] = float(v);
            }
            beat.label = BeatLabel::normal;
        }
        beats.push_back(std::move(beat));
    }
    return beats;
}

} // namespace ecgcnn
