#include <gtest/gtest.h>

#include <random>

#include "ecgcnn/wfdb.hpp"
#include "testutil.hpp"

using namespace ecgcnn;
using namespace ecgcnn::wfdb;

namespace {

const char* kHeaderText =
    "100 2 360 650000\n"
    "100.dat 212 200 11 1024 995 -22131 0 MLII\n"
    "100.dat 212 200 11 1024 1011 20052 0 V5\n";

} // namespace

TEST(WfdbHeader, ParsesMitStyleHeader) {
    RecordHeader h = parse_header(kHeaderText);
    EXPECT_EQ(h.record_name, "100");
    EXPECT_EQ(h.n_signals, 2);
    EXPECT_DOUBLE_EQ(h.sampling_rate, 360.0);
    EXPECT_EQ(h.n_samples, 650000u);
    ASSERT_EQ(h.signals.size(), 2u);
    for (const SignalSpec& s : h.signals) {
        EXPECT_EQ(s.format_code, 212);
        EXPECT_DOUBLE_EQ(s.gain, 200.0);
        EXPECT_DOUBLE_EQ(s.baseline, 1024.0);
    }
}

TEST(WfdbHeader, DefaultsWhenFieldsAbsent) {
    RecordHeader h = parse_header("rec 1 360 1000\nrec.dat 212\n");
    EXPECT_DOUBLE_EQ(h.signals[0].gain, 200.0);
    EXPECT_DOUBLE_EQ(h.signals[0].baseline, 1024.0);
}

TEST(WfdbHeader, ParenBaselineAndUnitsSuffix) {
    RecordHeader h = parse_header("rec 1 360 1000\nrec.dat 212 100(512)/mV 11 900\n");
    EXPECT_DOUBLE_EQ(h.signals[0].gain, 100.0);
    EXPECT_DOUBLE_EQ(h.signals[0].baseline, 512.0);
}

TEST(WfdbHeader, ZeroGainFallsBackToDefault) {
    RecordHeader h = parse_header("rec 1 360 1000\nrec.dat 212 0 11 1024\n");
    EXPECT_DOUBLE_EQ(h.signals[0].gain, 200.0);
}

TEST(WfdbHeader, RejectsNon212Format) {
    EXPECT_THROW(parse_header("rec 1 360 1000\nrec.dat 16 200 11 1024\n"), UnsupportedFormat);
}

TEST(WfdbHeader, RejectsEmptyText) {
    EXPECT_THROW(parse_header(""), MalformedHeader);
}

TEST(WfdbHeader, RejectsGarbage) {
    EXPECT_THROW(parse_header("onlyonetoken\n"), MalformedHeader);
    EXPECT_THROW(parse_header("rec notanumber\nrec.dat 212\n"), MalformedHeader);
}

TEST(WfdbHeader, RejectsMultiSegment) {
    EXPECT_THROW(parse_header("rec/3 2 360 1000\nrec.dat 212\n"), UnsupportedFormat);
}

TEST(WfdbHeader, SkipsCommentLines) {
    RecordHeader h = parse_header("# comment\n100 2 360 650000\n# another\n"
                                  "100.dat 212 200 11 1024\n100.dat 212 200 11 1024\n");
    EXPECT_EQ(h.n_signals, 2);
}

TEST(Wfdb212, HandComputedFrames) {
    {
        const std::uint8_t bytes[] = {0x00, 0x00, 0x00};
        auto [a, b] = decode_212(bytes, 1);
        EXPECT_EQ(a[0], 0);
        EXPECT_EQ(b[0], 0);
    }
    {
        const std::uint8_t bytes[] = {0xFF, 0x0F, 0x00};
        auto [a, b] = decode_212(bytes, 1);
        EXPECT_EQ(a[0], -1);
        EXPECT_EQ(b[0], 0);
    }
    {
        const std::uint8_t bytes[] = {0x34, 0x12, 0xAB};
        auto [a, b] = decode_212(bytes, 1);
        EXPECT_EQ(a[0], 564);
        EXPECT_EQ(b[0], 427);
    }
}

TEST(Wfdb212, TruncatedDataThrows) {
    const std::uint8_t bytes[] = {0x00, 0x00, 0x00};
    EXPECT_THROW(decode_212(bytes, 2), TruncatedData);
}

TEST(Wfdb212, RoundTripAgainstEncoderIsBitExact) {
    std::mt19937_64 engine(123);
    std::uniform_int_distribution<int> sample(-2048, 2047);
    std::uniform_int_distribution<std::size_t> length(1, 64);
    for (int iter = 0; iter < 10000; ++iter) {
        const std::size_t n = length(engine);
        std::vector<int> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = sample(engine);
            b[i] = sample(engine);
        }
        std::vector<std::uint8_t> bytes = testutil::encode_212(a, b);
        auto [da, db] = decode_212(bytes, n);
        ASSERT_EQ(da, a);
        ASSERT_EQ(db, b);
        // and the re-encode reproduces the original bytes
        ASSERT_EQ(testutil::encode_212(da, db), bytes);
    }
}

TEST(Wfdb212, OutputAlwaysInTwelveBitRange) {
    std::mt19937_64 engine(99);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int iter = 0; iter < 2000; ++iter) {
        std::vector<std::uint8_t> bytes(3 * 8);
        for (auto& v : bytes) v = std::uint8_t(byte(engine));
        auto [a, b] = decode_212(bytes, 8);
        for (int v : a) {
            ASSERT_GE(v, -2048);
            ASSERT_LE(v, 2047);
        }
        for (int v : b) {
            ASSERT_GE(v, -2048);
            ASSERT_LE(v, 2047);
        }
        // every valid byte string survives decode -> encode untouched
        ASSERT_EQ(testutil::encode_212(a, b), bytes);
    }
}

TEST(WfdbAnnotations, HandComputedWords) {
    {
        const std::uint8_t bytes[] = {0x14, 0x04, 0x00, 0x00};
        auto anns = parse_annotations(bytes);
        ASSERT_EQ(anns.size(), 1u);
        EXPECT_EQ(anns[0].sample_index, 20u);
        EXPECT_EQ(anns[0].symbol, 'N');
        EXPECT_EQ(anns[0].raw_code, 1);
    }
    {
        const std::uint8_t bytes[] = {0x00, 0x00};
        EXPECT_TRUE(parse_annotations(bytes).empty());
    }
    {
        // two NORMAL words, increments 20 then 30 -> absolute 20, 50
        const std::uint8_t bytes[] = {0x14, 0x04, 0x1E, 0x04, 0x00, 0x00};
        auto anns = parse_annotations(bytes);
        ASSERT_EQ(anns.size(), 2u);
        EXPECT_EQ(anns[0].sample_index, 20u);
        EXPECT_EQ(anns[1].sample_index, 50u);
    }
}

TEST(WfdbAnnotations, MissingTerminatorThrows) {
    const std::uint8_t bytes[] = {0x14, 0x04};
    EXPECT_THROW(parse_annotations(bytes), TruncatedData);
}

TEST(WfdbAnnotations, UndefinedCodeThrows) {
    // code 45 is undefined; word = 45 << 10
    const std::uint16_t word = 45u << 10;
    const std::uint8_t bytes[] = {std::uint8_t(word & 0xFF), std::uint8_t(word >> 8), 0x00, 0x00};
    EXPECT_THROW(parse_annotations(bytes), UnknownCode);
}

TEST(WfdbAnnotations, IndicesArePrefixSumsOfIncrements) {
    std::mt19937_64 engine(7);
    std::uniform_int_distribution<int> gap(0, 5000);
    std::uniform_int_distribution<int> code_pick(0, 4);
    const int beat_codes[] = {1, 2, 5, 8, 28}; // N L V A +
    for (int iter = 0; iter < 10000; ++iter) {
        testutil::AnnotationWriter writer;
        std::vector<std::size_t> indices;
        std::vector<int> codes;
        std::size_t t = 0;
        const int n = 1 + int(engine() % 20);
        for (int i = 0; i < n; ++i) {
            t += std::size_t(gap(engine));
            indices.push_back(t);
            codes.push_back(beat_codes[code_pick(engine)]);
            writer.add(t, codes.back());
        }
        if (iter % 3 == 0) writer.add_aux("machine note");
        if (iter % 5 == 0) writer.add_attribute(60, 3); // NUM
        auto anns = parse_annotations(writer.finish());
        ASSERT_EQ(anns.size(), indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) {
            EXPECT_EQ(anns[i].sample_index, indices[i]);
            EXPECT_EQ(anns[i].raw_code, codes[i]);
        }
    }
}

TEST(WfdbAnnotations, AuxAndAttributesAreSkipped) {
    testutil::AnnotationWriter writer;
    writer.add_attribute(61, 1); // SUB
    writer.add_attribute(62, 2); // CHN
    writer.add(100, 5);          // 'V'
    writer.add_aux("odd");       // 3 bytes + pad
    writer.add(40000, 1);        // forces a SKIP word
    auto anns = parse_annotations(writer.finish());
    ASSERT_EQ(anns.size(), 2u);
    EXPECT_EQ(anns[0].sample_index, 100u);
    EXPECT_EQ(anns[0].symbol, 'V');
    EXPECT_EQ(anns[1].sample_index, 40000u);
    EXPECT_EQ(anns[1].symbol, 'N');
}

TEST(WfdbCalibration, AduToMvIsAffine) {
    EXPECT_DOUBLE_EQ(adu_to_mv(1024, 200, 1024), 0.0);
    EXPECT_DOUBLE_EQ(adu_to_mv(1224, 200, 1024), 1.0);
    EXPECT_DOUBLE_EQ(adu_to_mv(824, 200, 1024), -1.0);
    for (double gain : {100.0, 200.0, 512.5})
        for (double adu : {-100.0, 0.0, 931.0})
            EXPECT_DOUBLE_EQ(adu_to_mv(adu + gain, gain, 77.0) - adu_to_mv(adu, gain, 77.0), 1.0);
}

TEST(WfdbLoad, FullRecordRoundTrip) {
    testutil::TempDir dir;
    // two channels of a short ramp, gain 200 baseline 1024
    const std::size_t n = 50;
    std::vector<int> ch0(n), ch1(n);
    for (std::size_t i = 0; i < n; ++i) {
        ch0[i] = 1024 + int(i);
        ch1[i] = 1024 - int(i);
    }
    write_file_bytes(dir.file("r.dat"), testutil::encode_212(ch0, ch1));
    testutil::AnnotationWriter writer;
    writer.add(10, 1);
    writer.add(30, 5);
    write_file_bytes(dir.file("r.atr"), writer.finish());
    testutil::write_text(dir.file("r.hea"),
                             "r 2 360 50\nr.dat 212 200 11 1024\nr.dat 212 200 11 1024\n");

    auto [record, anns] = load_record(dir.file("r.hea"), dir.file("r.dat"), dir.file("r.atr"));
    ASSERT_EQ(record.signals.size(), 2u);
    ASSERT_EQ(record.signals[0].size(), n);
    EXPECT_FLOAT_EQ(record.signals[0][0], 0.0f);
    EXPECT_FLOAT_EQ(record.signals[0][20], 0.1f);  // 20 adu / 200
    EXPECT_FLOAT_EQ(record.signals[1][20], -0.1f);
    ASSERT_EQ(anns.size(), 2u);
    EXPECT_EQ(anns[1].symbol, 'V');
}

TEST(WfdbCsv, FallbackLoaderMatchesWrittenValues) {
    testutil::TempDir dir;
    wfdb::Record record;
    record.header.record_name = "c";
    record.header.n_signals = 1;
    record.header.sampling_rate = 360;
    record.signals.push_back({0.0f, 0.5f, -0.25f, 1.0f});
    record.header.n_samples = 4;
    std::vector<Annotation> anns{{2, 'N', 1}};
    testutil::write_record_csv(dir.file("c.csv"), record, anns);

    auto [loaded, loaded_anns] = load_record_csv(dir.file("c.csv"), dir.file("c.ann.csv"));
    ASSERT_EQ(loaded.signals[0].size(), 4u);
    EXPECT_FLOAT_EQ(loaded.signals[0][1], 0.5f);
    ASSERT_EQ(loaded_anns.size(), 1u);
    EXPECT_EQ(loaded_anns[0].sample_index, 2u);
    EXPECT_EQ(loaded_anns[0].symbol, 'N');
    EXPECT_EQ(loaded_anns[0].raw_code, 1);
}

TEST(WfdbCsv, UnknownSymbolInCsvThrows) {
    testutil::TempDir dir;
    testutil::write_text(dir.file("c.csv"), "0,0.1\n1,0.2\n");
    testutil::write_text(dir.file("c.ann.csv"), "1,%\n");
    EXPECT_THROW(load_record_csv(dir.file("c.csv"), dir.file("c.ann.csv")), UnknownCode);
}
