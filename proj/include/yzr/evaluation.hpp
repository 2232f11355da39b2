#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "yzr/dataset.hpp"
#include "yzr/encoder.hpp"
#include "yzr/pipeline.hpp"

namespace yzr {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Confusion {
    // Counted with Profane as the positive class.
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

struct MetricsReport {
    std::string model;
    double threshold = 0.0;
    Confusion counts;
    ClassMetrics profane;
    ClassMetrics not_profane;
};

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); each 0 when undefined.
ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn);
MetricsReport make_report(const std::vector<Gold>& gold, const std::vector<bool>& predicted_profane,
                          std::string model, double threshold);

/// Runs detect per chat; both profane labels count as a Profane prediction.
/// Throws EmptyDataset.
MetricsReport evaluate(const std::vector<LabeledChat>& data, const Detector& detector, double threshold);

/// Exact token equality against the profane vocabulary after normalization
/// and tokenization; no merging, no prefilter, no latent stage.
MetricsReport regex_baseline(const std::vector<LabeledChat>& data, const Vocabulary& profane,
                             const NormalizationConfig& normalization = {});

/// One report per threshold (ascending). Each chat is analyzed once; the sweep
/// only re-runs the threshold comparison.
std::vector<MetricsReport> threshold_sweep(const std::vector<LabeledChat>& data, const Detector& detector,
                                           const std::vector<double>& thresholds);

/// "Class  Precision  Recall  F1" table with two-decimal percentages, plus counts.
std::string format_report_table(const std::vector<MetricsReport>& reports);
/// model,threshold,class,precision,recall,f1,tp,fp,fn,tn at full precision.
std::string format_report_csv(const std::vector<MetricsReport>& reports);

/// CSV header token,d0..d{P-1}; one inference-mode embedding per token, in
/// order, at round-trip precision.
std::string embeddings_csv(const std::vector<std::string>& tokens, const EncoderParams<float>& params);
void export_embeddings(const std::filesystem::path& tokens_file, const EncoderParams<float>& params,
                       const std::filesystem::path& out_csv);

}  // namespace yzr
