#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "yzr/dataset.hpp"
#include "yzr/error.hpp"
#include "yzr/evaluation.hpp"
#include "testkit.hpp"

using namespace yzr;

namespace {

std::shared_ptr<const Detector> detector() {
    Lexicon lex({make_vocabulary(VocabularyKind::SafeEnglish, {"you", "are", "nice", "hello", "world"})},
                make_vocabulary(VocabularyKind::Profane, {"abuse", "blarg", "zorkle"}));
    return std::make_shared<const Detector>(std::move(lex), NormalizationConfig{},
                                            std::make_shared<const EncoderParams<float>>(
                                                EncoderParams<float>::initialize(EncoderConfig{}, 4)));
}

std::vector<LabeledChat> small_dataset() {
    return {{"hello world", Gold::NotProfane}, {"you are nice", Gold::NotProfane}, {"b l a r g", Gold::Profane},
            {"ABUSE you", Gold::Profane},       {"bl*rg you", Gold::Profane},       {"zorkle", Gold::Profane},
            {"qwpv hello", Gold::NotProfane}, {"zork1e", Gold::Profane}};
}

}  // namespace

TEST(Metrics, HandCountedExample) {
    // 2 TP, 1 FP, 1 FN, 6 TN
    std::vector<Gold> gold{Gold::Profane, Gold::Profane, Gold::NotProfane, Gold::Profane};
    std::vector<bool> pred{true, true, true, false};
    for (int i = 0; i < 6; ++i) {
        gold.push_back(Gold::NotProfane);
        pred.push_back(false);
    }
    const MetricsReport r = make_report(gold, pred, "m", 0.8);
    EXPECT_EQ(r.counts.tp, 2);
    EXPECT_EQ(r.counts.fp, 1);
    EXPECT_EQ(r.counts.fn, 1);
    EXPECT_EQ(r.counts.tn, 6);
    EXPECT_NEAR(r.profane.precision, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.profane.recall, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.profane.f1, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.not_profane.precision, 6.0 / 7.0, 1e-12);
    EXPECT_NEAR(r.not_profane.recall, 6.0 / 7.0, 1e-12);
}

TEST(Metrics, PerfectAndUndefined) {
    const MetricsReport r = make_report({Gold::Profane, Gold::NotProfane}, {true, false}, "m", 0.5);
    EXPECT_DOUBLE_EQ(r.profane.precision, 1.0);
    EXPECT_DOUBLE_EQ(r.profane.recall, 1.0);
    EXPECT_DOUBLE_EQ(r.profane.f1, 1.0);
    EXPECT_DOUBLE_EQ(r.not_profane.f1, 1.0);
    const ClassMetrics none = class_metrics(0, 0, 0);
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_EQ(none.f1, 0.0);
}

TEST(Metrics, AgreesWithBruteForceCounting) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<Gold> gold;
        std::vector<bool> pred;
        for (std::size_t i = 0; i < n; ++i) {
            gold.push_back(rng() % 2 ? Gold::Profane : Gold::NotProfane);
            pred.push_back(rng() % 2);
        }
        const MetricsReport r = make_report(gold, pred, "m", 0.0);
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tp += gold[i] == Gold::Profane && pred[i];
            fp += gold[i] == Gold::NotProfane && pred[i];
            fn += gold[i] == Gold::Profane && !pred[i];
        }
        const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
        EXPECT_EQ(r.counts.total(), static_cast<std::int64_t>(n));
        EXPECT_NEAR(r.profane.precision, p, 1e-12);
        EXPECT_NEAR(r.profane.recall, rc, 1e-12);
        EXPECT_NEAR(r.profane.f1, f, 1e-12);
    }
}

TEST(Metrics, Errors) {
    try {
        make_report({}, {}, "m", 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
    }
    EXPECT_THROW(make_report({Gold::Profane}, {}, "m", 0.5), Error);
    const auto det = detector();
    try {
        evaluate({}, *det, 0.8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
    }
    EXPECT_THROW(regex_baseline({}, make_vocabulary(VocabularyKind::Profane, {"x"})), Error);
    EXPECT_THROW(threshold_sweep({}, *det, {0.5}), Error);
}

TEST(Baseline, ExactTokensOnly) {
    const auto data = small_dataset();
    const MetricsReport r = regex_baseline(data, make_vocabulary(VocabularyKind::Profane, {"abuse", "blarg", "zorkle"}));
    // "ABUSE you" and "zorkle" normalize to exact keys; spaced, starred and
    // lookalike spellings do not.
    EXPECT_EQ(r.counts.tp, 2);
    EXPECT_EQ(r.counts.fp, 0);
    EXPECT_EQ(r.model, "regex baseline");

    const MetricsReport empty = regex_baseline(data, make_vocabulary(VocabularyKind::Profane, {}));
    EXPECT_EQ(empty.counts.tp + empty.counts.fp, 0);

    std::vector<LabeledChat> starred{{"bl*rg", Gold::Profane}, {"ab*se you", Gold::Profane}, {"z*rkle", Gold::Profane}};
    EXPECT_EQ(regex_baseline(starred, make_vocabulary(VocabularyKind::Profane, {"abuse", "blarg", "zorkle"})).profane.recall,
              0.0);
}

TEST(Evaluate, PipelineBeatsBaselineOnSpacedText) {
    const auto data = small_dataset();
    const auto det = detector();
    const MetricsReport p = evaluate(data, *det, 0.8);
    EXPECT_EQ(p.model, "pipeline");
    EXPECT_EQ(p.counts.total(), static_cast<std::int64_t>(data.size()));
    // "b l a r g", "ABUSE you" and "zorkle" are direct hits.
    EXPECT_GE(p.counts.tp, 3);
}

TEST(Sweep, MonotoneAndConsistentWithDetect) {
    const auto data = small_dataset();
    const auto det = detector();
    const std::vector<double> ts{0.05, 0.2, 0.5, 0.8, 0.95, 1.0};
    const auto reports = threshold_sweep(data, *det, ts);
    ASSERT_EQ(reports.size(), ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        EXPECT_EQ(reports[i].threshold, ts[i]);
        const MetricsReport direct = evaluate(data, *det, ts[i]);
        EXPECT_EQ(reports[i].counts.tp, direct.counts.tp) << ts[i];
        EXPECT_EQ(reports[i].counts.fp, direct.counts.fp) << ts[i];
        if (i > 0) {
            EXPECT_LE(reports[i].counts.tp + reports[i].counts.fp, reports[i - 1].counts.tp + reports[i - 1].counts.fp);
        }
    }
    try {
        threshold_sweep(data, *det, {0.9, 0.5});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(Report, TableAndCsv) {
    const MetricsReport r = make_report({Gold::Profane, Gold::Profane, Gold::NotProfane}, {true, false, false}, "pipeline", 0.8);
    const std::string table = format_report_table({r});
    EXPECT_NE(table.find("pipeline  threshold 0.80  (n=3)"), std::string::npos);
    EXPECT_NE(table.find("precision"), std::string::npos);
    EXPECT_NE(table.find("100.00%"), std::string::npos);
    EXPECT_NE(table.find("50.00%"), std::string::npos);
    EXPECT_NE(table.find("tp=1 fp=0 fn=1 tn=1"), std::string::npos);

    const std::string csv = format_report_csv({r, r});
    const auto rows = parse_csv(csv);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"model", "threshold", "class", "precision", "recall", "f1", "tp", "fp",
                                                 "fn", "tn"}));
    EXPECT_EQ(rows[1][2], "profane");
    EXPECT_EQ(rows[2][2], "not_profane");
    EXPECT_EQ(std::stod(rows[1][4]), 0.5);
    EXPECT_NEAR(std::stod(rows[2][3]), 0.5, 1e-15);
    EXPECT_EQ(rows[1][6], "1");
}

TEST(EmbeddingsCsv, ShapeDeterminismAndRoundTrip) {
    const auto params = EncoderParams<float>::initialize(EncoderConfig{}, 8);
    const std::string csv = embeddings_csv({"hello", "b*tch", "hello"}, params);
    const auto rows = parse_csv(csv);
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& row : rows) EXPECT_EQ(row.size(), 65u);
    EXPECT_EQ(rows[0][0], "token");
    EXPECT_EQ(rows[0][64], "d63");
    EXPECT_EQ(rows[1], rows[3]);
    const Matrix<float> z = embed(params, std::vector<CharSeq>{encode_token("hello"), encode_token("b*tch")});
    for (int r = 0; r < 2; ++r) {
        for (int d = 0; d < 64; ++d) EXPECT_NEAR(std::stof(rows[1 + r][1 + d]), z(r, d), 1e-6);
    }
    EXPECT_EQ(parse_csv(embeddings_csv({}, params)).size(), 1u);
    EXPECT_THROW(embeddings_csv({"thistokeniswaytoolongforthemodel"}, params), Error);
}

TEST(EmbeddingsCsv, ExportFile) {
    testkit::TempDir dir;
    testkit::write_file(dir / "tokens.txt", "alpha\nbeta\r\n\ngamma\n");
    const auto params = EncoderParams<float>::initialize(EncoderConfig{}, 8);
    export_embeddings(dir / "tokens.txt", params, dir / "out.csv");
    EXPECT_EQ(testkit::read_file(dir / "out.csv"), embeddings_csv({"alpha", "beta", "gamma"}, params));
    EXPECT_THROW(export_embeddings(dir / "missing.txt", params, dir / "x.csv"), Error);
}

TEST(LabeledCsv, ParseQuotingAndErrors) {
    const auto chats = parse_labeled_csv(
        "text,label\n"
        "hello,not_profane\n"
        "\"a, \"\"quoted\"\"\nline\",profane\n");
    ASSERT_EQ(chats.size(), 2u);
    EXPECT_EQ(chats[1].text, "a, \"quoted\"\nline");
    EXPECT_EQ(chats[1].gold, Gold::Profane);
    EXPECT_EQ(parse_labeled_csv("label,text\nprofane,x\n")[0].text, "x");
    for (const char* bad : {"", "foo,bar\nx,y\n", "text,label\nx,maybe\n", "text,label\n\"x,profane\n"}) {
        try {
            parse_labeled_csv(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::Format) << bad;
        }
    }
    testkit::TempDir dir;
    write_labeled_csv(dir / "d.csv", chats);
    const auto back = read_labeled_csv(dir / "d.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].text, chats[1].text);
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
}
