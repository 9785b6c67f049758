#include <gtest/gtest.h>

#include <cstdio>
#include <random>

#include "ecgcnn/metrics.hpp"
#include "ecgcnn/report.hpp"
#include "ecgcnn/synthetic.hpp"
#include "ecgcnn/trainer.hpp"
#include "testutil.hpp"

using namespace ecgcnn;

namespace {

std::vector<BeatLabel> labels_of(std::initializer_list<int> xs) {
    std::vector<BeatLabel> out;
    for (int x : xs) out.push_back(BeatLabel(x));
    return out;
}

std::string two_dp(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

TEST(Confusion, SingleCaseCounts) {
    auto m = confusion(labels_of({1}), labels_of({1}));
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.tn + m.fp + m.fn, 0u);

    m = confusion(labels_of({0}), labels_of({1}));
    EXPECT_EQ(m.fn, 1u);

    m = confusion(labels_of({1}), labels_of({0}));
    EXPECT_EQ(m.fp, 1u);

    m = confusion(labels_of({0}), labels_of({0}));
    EXPECT_EQ(m.tn, 1u);
}

TEST(Confusion, Validation) {
    EXPECT_THROW(confusion(labels_of({1}), labels_of({1, 0})), LengthMismatch);
    EXPECT_THROW(confusion(labels_of({}), labels_of({})), EmptyInput);
}

TEST(Confusion, RandomAgainstBruteForce) {
    std::mt19937_64 engine(31);
    std::vector<BeatLabel> pred(1000), truth(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        pred[i] = BeatLabel(engine() & 1);
        truth[i] = BeatLabel(engine() & 1);
    }
    ConfusionMatrix m = confusion(pred, truth);
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        if (truth[i] == BeatLabel::abnormal)
            (pred[i] == BeatLabel::abnormal ? tp : fn) += 1;
        else
            (pred[i] == BeatLabel::abnormal ? fp : tn) += 1;
    }
    EXPECT_EQ(m.tp, tp);
    EXPECT_EQ(m.tn, tn);
    EXPECT_EQ(m.fp, fp);
    EXPECT_EQ(m.fn, fn);
    EXPECT_EQ(m.total(), 1000u);
}

TEST(Evaluate, ReferenceMatrix) {
    MetricsReport r = evaluate(ConfusionMatrix{891, 579, 21, 9});
    ASSERT_TRUE(r.sensitivity && r.specificity && r.accuracy);
    EXPECT_EQ(two_dp(*r.sensitivity), "99.00");
    EXPECT_EQ(two_dp(*r.specificity), "96.50");
    EXPECT_EQ(two_dp(*r.accuracy), "98.00");
    EXPECT_NEAR(*r.sensitivity, 99.00, 1e-9);
    EXPECT_NEAR(*r.specificity, 96.50, 1e-9);
    EXPECT_NEAR(*r.accuracy, 98.00, 1e-9);
}

TEST(Evaluate, PerfectAndUndefined) {
    MetricsReport perfect = evaluate(ConfusionMatrix{1, 1, 0, 0});
    EXPECT_DOUBLE_EQ(*perfect.sensitivity, 100.0);
    EXPECT_DOUBLE_EQ(*perfect.specificity, 100.0);
    EXPECT_DOUBLE_EQ(*perfect.accuracy, 100.0);

    MetricsReport no_pos = evaluate(ConfusionMatrix{0, 5, 2, 0});
    EXPECT_FALSE(no_pos.sensitivity.has_value()); // no positives at all
    EXPECT_TRUE(no_pos.specificity.has_value());
    EXPECT_TRUE(no_pos.accuracy.has_value());
}

TEST(Evaluate, NoErrorsMeansFullAccuracy) {
    std::mt19937_64 engine(33);
    for (int i = 0; i < 50; ++i) {
        ConfusionMatrix m{engine() % 100, engine() % 100, 0, 0};
        if (m.total() == 0) continue;
        EXPECT_DOUBLE_EQ(*evaluate(m).accuracy, 100.0);
    }
}

TEST(Evaluate, PolarityTransposeInvariance) {
    ConfusionMatrix m{37, 22, 11, 5};
    ConfusionMatrix swapped{m.tn, m.tp, m.fn, m.fp};
    EXPECT_DOUBLE_EQ(*evaluate(m).accuracy, *evaluate(swapped).accuracy);
    EXPECT_DOUBLE_EQ(*evaluate(m).sensitivity, *evaluate(swapped).specificity);
}

TEST(Evaluate, AccuracyTimesTotalIsCorrectCount) {
    std::mt19937_64 engine(35);
    for (int i = 0; i < 50; ++i) {
        ConfusionMatrix m{engine() % 500, engine() % 500, engine() % 100, engine() % 100};
        MetricsReport r = evaluate(m);
        EXPECT_NEAR(*r.accuracy / 100.0 * double(m.total()), double(m.tp + m.tn), 0.5);
    }
}

TEST(Predict, ConfusionMatchesPolarity) {
    // polarity swap: confusion with normal as positive transposes counts
    std::mt19937_64 engine(37);
    std::vector<BeatLabel> pred(200), truth(200);
    for (std::size_t i = 0; i < 200; ++i) {
        pred[i] = BeatLabel(engine() & 1);
        truth[i] = BeatLabel(engine() & 1);
    }
    ConfusionMatrix ab = confusion(pred, truth, BeatLabel::abnormal);
    ConfusionMatrix no = confusion(pred, truth, BeatLabel::normal);
    EXPECT_EQ(ab.tp, no.tn);
    EXPECT_EQ(ab.fp, no.fn);
}

namespace {

struct SweepFixture {
    std::vector<Beat> beats;
    Network<float> net;
    AxisBounds bounds;

    SweepFixture() {
        auto [record, anns] = generate_synthetic_record(
            {.n_beats = 60, .abnormal_fraction = 0.5, .rhythm_marker_fraction = 0.0, .seed = 41});
        beats = segment_beats(record, anns);
        bounds = compute_bounds(beats);
        DatasetView pool = view_of_beats(beats);
        std::vector<std::size_t> idx(beats.size());
        std::iota(idx.begin(), idx.end(), 0);
        TrainConfig config;
        config.max_iterations = 120;
        config.batch_size = 16;
        config.eval_interval = 120;
        net = build_network<float>(tiny_1d(ActivationKind{Activation::relu}), InitScheme{}, 43);
        train(net, subset(pool, idx), subset(pool, idx), config);
    }
};

} // namespace

TEST(Sweep, CleanRowEqualsStandaloneEvaluation) {
    SweepFixture fx;
    std::vector<SweepCondition> conditions{{std::nullopt}};
    auto reports = robustness_sweep(fx.net, fx.beats, conditions, fx.bounds,
                                    Representation::signal_1d, 7, 1, BeatLabel::abnormal, "m");
    ASSERT_EQ(reports.size(), 1u);
    MetricsReport standalone = evaluate_dataset(fx.net, view_of_beats(fx.beats));
    EXPECT_EQ(reports[0].matrix.tp, standalone.matrix.tp);
    EXPECT_EQ(reports[0].matrix.tn, standalone.matrix.tn);
    EXPECT_EQ(reports[0].matrix.fp, standalone.matrix.fp);
    EXPECT_EQ(reports[0].matrix.fn, standalone.matrix.fn);
    EXPECT_FALSE(reports[0].snr_db.has_value());
}

TEST(Sweep, RowsKeyedBySnrInOrderAndDeterministic) {
    SweepFixture fx;
    auto conditions = default_sweep_conditions();
    auto a = robustness_sweep(fx.net, fx.beats, conditions, fx.bounds, Representation::signal_1d,
                              7, 1, BeatLabel::abnormal, "m");
    auto b = robustness_sweep(fx.net, fx.beats, conditions, fx.bounds, Representation::signal_1d,
                              7, 1, BeatLabel::abnormal, "m");
    ASSERT_EQ(a.size(), 5u);
    EXPECT_FALSE(a[0].snr_db.has_value());
    EXPECT_DOUBLE_EQ(*a[1].snr_db, 35.0);
    EXPECT_DOUBLE_EQ(*a[4].snr_db, 20.0);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i].matrix.tp, b[i].matrix.tp);
        EXPECT_EQ(a[i].matrix.fn, b[i].matrix.fn);
    }
    const std::string csv = sweep_csv(a);
    EXPECT_NE(csv.find("model,snr_db,sensitivity,specificity,accuracy"), std::string::npos);
    EXPECT_NE(csv.find("m,none,"), std::string::npos);
    EXPECT_NE(csv.find("m,20,"), std::string::npos);
}

TEST(Sweep, Validation) {
    SweepFixture fx;
    std::vector<SweepCondition> none;
    EXPECT_THROW(robustness_sweep(fx.net, fx.beats, none, fx.bounds, Representation::signal_1d, 7),
                 EmptyInput);
}

TEST(Sweep, AccuracySpan) {
    std::vector<MetricsReport> reports(3);
    reports[0].accuracy = 98.0;
    reports[1].accuracy = 96.5;
    reports[2].accuracy = 94.7;
    EXPECT_NEAR(accuracy_span(reports), 3.3, 1e-12);
    std::vector<MetricsReport> empty(1);
    EXPECT_THROW(accuracy_span(empty), EmptyInput);
}

TEST(ReportFiles, HistoryCsvFormat) {
    TrainHistory history{{100, 0.51234567, 91.25}, {200, 0.25, 95.0}};
    const std::string csv = history_csv(history);
    EXPECT_EQ(csv,
              "iteration,train_loss,test_accuracy\n"
              "100,0.512346,91.2500\n"
              "200,0.250000,95.0000\n");
}

TEST(ReportFiles, MetricsJsonHandlesUndefined) {
    MetricsReport r = evaluate(ConfusionMatrix{0, 5, 2, 0});
    ordered_json j = metrics_json(r);
    EXPECT_TRUE(j.at("sensitivity").is_null());
    EXPECT_FALSE(j.at("accuracy").is_null());
}
