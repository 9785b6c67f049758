#pragma once

// Readers for MIT-BIH style WFDB records: .hea text headers, format-212
// packed signals and MIT-format binary annotations, plus a CSV fallback so
// the pipeline runs without database files.
//
// Format 212 packs two 12-bit two's-complement samples into 3 bytes:
//   sample A = byte0 | ((byte1 & 0x0F) << 8)
//   sample B = byte2 | ((byte1 & 0xF0) << 4)
// Annotations are 2-byte little-endian words: code = word >> 10,
// time increment = word & 0x3FF; a zero word terminates the stream.
// Pseudo-codes 59 (SKIP, 4-byte interval follows, high word first),
// 60 (NUM), 61 (SUB), 62 (CHN) and 63 (AUX, counted payload padded to
// even length) carry attributes we do not model and are consumed.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecgcnn/binio.hpp"
#include "ecgcnn/errors.hpp"

namespace ecgcnn::wfdb {

struct SignalSpec {
    std::string file;
    int format_code = 212;
    double gain = 200.0;      // adu per mV
    double baseline = 1024.0; // adu of 0 mV
};

struct RecordHeader {
    std::string record_name;
    int n_signals = 0;
    double sampling_rate = 360.0;
    std::size_t n_samples = 0; // per signal; 0 = unknown, infer from data
    std::vector<SignalSpec> signals;
};

/// Calibrated record: per-channel samples in millivolts.
struct Record {
    RecordHeader header;
    std::vector<std::vector<float>> signals;
};

struct Annotation {
    std::size_t sample_index = 0;
    char symbol = 'N';
    int raw_code = 0;
};

/// Symbol for a MIT annotation code, or nullopt when the code is undefined.
inline std::optional<char> symbol_for_code(int code) {
    static constexpr const char* table =
        // index 0..41; '\0' marks undefined entries (0, 15, 17)
        "\0NLRaVFJASEj/Q~\0|\0sT*D\"=pB^t+u?![]en@xf()r";
    if (code < 1 || code > 41) return std::nullopt;
    char c = table[code];
    if (c == '\0') return std::nullopt;
    return c;
}

inline std::optional<int> code_for_symbol(char symbol) {
    for (int code = 1; code <= 41; ++code)
        if (auto s = symbol_for_code(code); s && *s == symbol) return code;
    return std::nullopt;
}

namespace detail {

inline std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <typename T>
T parse_num(std::string_view tok, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw MalformedHeader(std::string("cannot parse ") + what + " from '" + std::string(tok) + "'");
    return value;
}

inline double parse_float_tok(std::string_view tok, const char* what) {
    // from_chars for double is available, but keep locale-free strtod-style fallback simple
    try {
        std::size_t used = 0;
        double v = std::stod(std::string(tok), &used);
        if (used != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw MalformedHeader(std::string("cannot parse ") + what + " from '" + std::string(tok) + "'");
    }
}

} // namespace detail

/// Parse a WFDB .hea header. Only single-segment, format-212 records are
/// accepted. Missing gain defaults to 200 adu/mV, missing baseline to the
/// ADC zero (1024 when that is absent too).
inline RecordHeader parse_header(std::string_view text) {
    std::istringstream stream{std::string(text)};
    std::string line;

    // record line: name n_signals [fs [n_samples ...]]
    RecordHeader header;
    bool have_record_line = false;
    std::vector<std::string> signal_lines;
    while (std::getline(stream, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!have_record_line) {
            auto toks = detail::split_ws(line);
            if (toks.size() < 2) throw MalformedHeader("record line needs name and signal count");
            if (toks[0].find('/') != std::string::npos)
                throw UnsupportedFormat("multi-segment records are not supported");
            header.record_name = toks[0];
            header.n_signals = detail::parse_num<int>(toks[1], "signal count");
            if (header.n_signals < 1) throw MalformedHeader("signal count must be >= 1");
            header.sampling_rate = toks.size() > 2 ? detail::parse_float_tok(toks[2], "sampling rate") : 250.0;
            if (header.sampling_rate <= 0) throw MalformedHeader("sampling rate must be positive");
            header.n_samples = toks.size() > 3 ? detail::parse_num<std::size_t>(toks[3], "sample count") : 0;
            have_record_line = true;
        } else if (signal_lines.size() < std::size_t(header.n_signals)) {
            signal_lines.push_back(line);
        }
        // anything after the signal lines (info lines) is ignored
    }
    if (!have_record_line) throw MalformedHeader("empty header");
    if (signal_lines.size() != std::size_t(header.n_signals))
        throw MalformedHeader("expected " + std::to_string(header.n_signals) + " signal lines, got " +
                              std::to_string(signal_lines.size()));

    for (const std::string& sl : signal_lines) {
        auto toks = detail::split_ws(sl);
        if (toks.size() < 2) throw MalformedHeader("signal line needs file name and format");
        SignalSpec sig;
        sig.file = toks[0];

        // format token: integer, possibly with xN / :skew / +offset suffixes
        std::string_view fmt = toks[1];
        std::size_t fmt_end = 0;
        while (fmt_end < fmt.size() &&
               (std::isdigit(static_cast<unsigned char>(fmt[fmt_end])) || (fmt_end == 0 && fmt[fmt_end] == '-')))
            ++fmt_end;
        if (fmt_end == 0) throw MalformedHeader("cannot parse signal format from '" + std::string(fmt) + "'");
        sig.format_code = detail::parse_num<int>(fmt.substr(0, fmt_end), "signal format");
        if (sig.format_code != 212)
            throw UnsupportedFormat("signal format " + std::to_string(sig.format_code) +
                                    " is not supported (need 212)");

        std::optional<double> paren_baseline;
        if (toks.size() > 2) {
            // gain token: gain[(baseline)][/units]
            std::string_view g = toks[2];
            if (auto slash = g.find('/'); slash != std::string_view::npos) g = g.substr(0, slash);
            if (auto open = g.find('('); open != std::string_view::npos) {
                auto close = g.find(')', open);
                if (close == std::string_view::npos) throw MalformedHeader("unterminated baseline in gain field");
                paren_baseline = detail::parse_float_tok(g.substr(open + 1, close - open - 1), "baseline");
                g = g.substr(0, open);
            }
            double gain = detail::parse_float_tok(g, "gain");
            sig.gain = gain != 0.0 ? gain : 200.0; // 0 means "unspecified" in WFDB headers
        }
        if (sig.gain <= 0) throw MalformedHeader("gain must be positive");
        double adc_zero = 1024.0;
        if (toks.size() > 4) adc_zero = detail::parse_float_tok(toks[4], "ADC zero");
        sig.baseline = paren_baseline.value_or(adc_zero);
        header.signals.push_back(std::move(sig));
    }
    return header;
}

inline int sign_extend_12(unsigned v) {
    return (v & 0x800u) ? int(v) - 0x1000 : int(v);
}

/// Decode `total` consecutive 12-bit samples from 212-packed bytes.
inline std::vector<int> decode_212_flat(std::span<const std::uint8_t> bytes, std::size_t total) {
    std::size_t frames = (total + 1) / 2;
    if (bytes.size() < frames * 3)
        throw TruncatedData("212 data holds " + std::to_string(bytes.size() / 3 * 2) +
                            " samples, need " + std::to_string(total));
    std::vector<int> out;
    out.reserve(total);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::uint8_t b0 = bytes[f * 3], b1 = bytes[f * 3 + 1], b2 = bytes[f * 3 + 2];
        out.push_back(sign_extend_12(unsigned(b0) | ((unsigned(b1) & 0x0Fu) << 8)));
        if (out.size() < total)
            out.push_back(sign_extend_12(unsigned(b2) | ((unsigned(b1) & 0xF0u) << 4)));
    }
    return out;
}

/// Decode a two-channel 212 stream: sample A of each frame is channel 0,
/// sample B is channel 1. Values lie in [-2048, 2047].
inline std::pair<std::vector<int>, std::vector<int>> decode_212(std::span<const std::uint8_t> bytes,
                                                                std::size_t n_samples_per_channel) {
    std::vector<int> flat = decode_212_flat(bytes, n_samples_per_channel * 2);
    std::vector<int> a(n_samples_per_channel), b(n_samples_per_channel);
    for (std::size_t i = 0; i < n_samples_per_channel; ++i) {
        a[i] = flat[i * 2];
        b[i] = flat[i * 2 + 1];
    }
    return {std::move(a), std::move(b)};
}

namespace detail {
// MIT annotation pseudo-codes.
inline constexpr int kSkip = 59, kNum = 60, kSub = 61, kChn = 62, kAux = 63;
} // namespace detail

/// Parse a MIT-format annotation stream. Returns annotations in file order
/// with absolute sample indices accumulated from the stored increments.
inline std::vector<Annotation> parse_annotations(std::span<const std::uint8_t> bytes) {
    ByteReader reader(bytes);
    std::vector<Annotation> out;
    long long time = 0;
    while (true) {
        std::uint16_t word = reader.u16le();
        int code = word >> 10;
        int increment = word & 0x3FF;
        if (code == 0) {
            if (increment == 0) break; // terminator
            throw UnknownCode("NOTQRS word with nonzero increment");
        }
        switch (code) {
        case detail::kSkip: {
            // 4-byte signed interval, high 16 bits first, each half little-endian
            std::uint16_t hi = reader.u16le();
            std::uint16_t lo = reader.u16le();
            time += std::int32_t((std::uint32_t(hi) << 16) | lo);
            break;
        }
        case detail::kNum:
        case detail::kSub:
        case detail::kChn:
            break; // attribute only, no payload
        case detail::kAux: {
            std::size_t len = std::size_t(increment);
            reader.skip(len + (len % 2)); // payload padded to even length
            break;
        }
        default: {
            auto symbol = symbol_for_code(code);
            if (!symbol) throw UnknownCode("annotation code " + std::to_string(code) + " is not defined");
            time += increment;
            if (time < 0) throw Error("annotation time went negative");
            out.push_back(Annotation{std::size_t(time), *symbol, code});
            break;
        }
        }
    }
    return out;
}

/// mV = (raw - baseline) / gain
inline double adu_to_mv(double raw, double gain, double baseline) {
    return (raw - baseline) / gain;
}

/// Load and calibrate a full WFDB record plus its annotations.
inline std::pair<Record, std::vector<Annotation>> load_record(const std::filesystem::path& header_path,
                                                              const std::filesystem::path& signal_path,
                                                              const std::filesystem::path& annotation_path) {
    RecordHeader header = parse_header(read_file_text(header_path));
    if (header.n_signals < 1) throw ChannelMissing("record has no signals");

    std::vector<std::uint8_t> dat = read_file_bytes(signal_path);
    std::size_t per_channel = header.n_samples;
    if (per_channel == 0) per_channel = (dat.size() / 3) * 2 / std::size_t(header.n_signals);

    std::vector<int> flat = decode_212_flat(dat, per_channel * std::size_t(header.n_signals));
    Record record;
    record.header = header;
    record.header.n_samples = per_channel;
    record.signals.assign(std::size_t(header.n_signals), {});
    for (auto& ch : record.signals) ch.resize(per_channel);
    for (std::size_t i = 0; i < per_channel; ++i)
        for (std::size_t c = 0; c < std::size_t(header.n_signals); ++c) {
            const SignalSpec& sig = header.signals[c];
            record.signals[c][i] =
                float(adu_to_mv(double(flat[i * std::size_t(header.n_signals) + c]), sig.gain, sig.baseline));
        }

    std::vector<Annotation> annotations = parse_annotations(read_file_bytes(annotation_path));
    return {std::move(record), std::move(annotations)};
}

/// CSV fallback: one channel, lines of "sample_index,millivolts"; the
/// annotation file holds lines of "sample_index,symbol". A non-numeric
/// first line is treated as a column header.
inline std::pair<Record, std::vector<Annotation>> load_record_csv(const std::filesystem::path& signal_csv,
                                                                  const std::filesystem::path& annotation_csv,
                                                                  double sampling_rate = 360.0) {
    auto parse_csv = [](const std::filesystem::path& path, auto&& on_row) {
        std::string text = read_file_text(path);
        std::istringstream stream(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(stream, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto comma = line.find(',');
            if (comma == std::string::npos)
                throw Error(path.string() + ":" + std::to_string(line_no) + ": expected 'a,b'");
            std::string_view first(line.data(), comma);
            std::string_view second(line.data() + comma + 1, line.size() - comma - 1);
            if (line_no == 1 && !first.empty() && !std::isdigit(static_cast<unsigned char>(first[0])))
                continue; // header row
            on_row(first, second, line_no);
        }
    };

    Record record;
    record.header.record_name = signal_csv.stem().string();
    record.header.n_signals = 1;
    record.header.sampling_rate = sampling_rate;
    record.header.signals.push_back(SignalSpec{signal_csv.filename().string(), 212, 200.0, 0.0});
    record.signals.emplace_back();
    parse_csv(signal_csv, [&](std::string_view, std::string_view mv, std::size_t line_no) {
        try {
            record.signals[0].push_back(std::stof(std::string(mv)));
        } catch (...) {
            throw Error(signal_csv.string() + ":" + std::to_string(line_no) + ": bad millivolt value");
        }
    });
    record.header.n_samples = record.signals[0].size();

    std::vector<Annotation> annotations;
    parse_csv(annotation_csv, [&](std::string_view idx, std::string_view sym, std::size_t line_no) {
        Annotation ann;
        ann.sample_index = detail::parse_num<std::size_t>(idx, "annotation sample index");
        if (sym.empty())
            throw Error(annotation_csv.string() + ":" + std::to_string(line_no) + ": empty symbol");
        ann.symbol = sym[0];
        ann.raw_code = code_for_symbol(ann.symbol).value_or(0);
        if (ann.raw_code == 0)
            throw UnknownCode(annotation_csv.string() + ":" + std::to_string(line_no) +
                              ": unknown annotation symbol '" + std::string(sym) + "'");
        annotations.push_back(ann);
        (void)line_no;
    });
    return {std::move(record), std::move(annotations)};
}

} // namespace ecgcnn::wfdb
