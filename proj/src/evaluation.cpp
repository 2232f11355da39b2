#include "yzr/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "yzr/error.hpp"

namespace yzr {

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    ClassMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

MetricsReport make_report(const std::vector<Gold>& gold, const std::vector<bool>& predicted_profane, std::string model,
                          double threshold) {
    if (gold.size() != predicted_profane.size()) throw Error(ErrorCode::Shape, "gold and prediction counts differ");
    if (gold.empty()) throw Error(ErrorCode::EmptyDataset, "no chats to evaluate");
    MetricsReport r;
    r.model = std::move(model);
    r.threshold = threshold;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i] == Gold::Profane;
        const bool p = predicted_profane[i];
        (g ? (p ? r.counts.tp : r.counts.fn) : (p ? r.counts.fp : r.counts.tn)) += 1;
    }
    r.profane = class_metrics(r.counts.tp, r.counts.fp, r.counts.fn);
    r.not_profane = class_metrics(r.counts.tn, r.counts.fn, r.counts.fp);
    return r;
}

namespace {

std::vector<Gold> golds(const std::vector<LabeledChat>& data) {
    std::vector<Gold> g;
    g.reserve(data.size());
    for (const auto& c : data) g.push_back(c.gold);
    return g;
}

RawChat as_chat(const LabeledChat& c, std::size_t i) { return RawChat{std::to_string(i), c.text, "{}"}; }

std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

MetricsReport evaluate(const std::vector<LabeledChat>& data, const Detector& detector, double threshold) {
    if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no chats to evaluate");
    std::vector<bool> pred;
    pred.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) pred.push_back(detector.detect(as_chat(data[i], i), threshold).profane());
    return make_report(golds(data), pred, detector.latent_enabled() ? "pipeline" : "pipeline (direct only)", threshold);
}

MetricsReport regex_baseline(const std::vector<LabeledChat>& data, const Vocabulary& profane,
                             const NormalizationConfig& normalization) {
    if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no chats to evaluate");
    std::vector<bool> pred;
    pred.reserve(data.size());
    for (const auto& c : data) {
        const std::string n = normalize(c.text, normalization);
        bool hit = false;
        std::size_t i = 0;
        while (!hit && i < n.size()) {
            const std::size_t j = std::min(n.find(' ', i), n.size());
            hit = j > i && profane.contains(std::string_view(n).substr(i, j - i));
            i = j + 1;
        }
        pred.push_back(hit);
    }
    return make_report(golds(data), pred, "regex baseline", 1.0);
}

std::vector<MetricsReport> threshold_sweep(const std::vector<LabeledChat>& data, const Detector& detector,
                                           const std::vector<double>& thresholds) {
    if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no chats to evaluate");
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw Error(ErrorCode::InvalidArgument, "sweep thresholds must be ascending");
    }
    std::vector<ChatAnalysis> analyses;
    analyses.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) analyses.push_back(detector.analyze(as_chat(data[i], i)));
    const auto gold = golds(data);
    std::vector<MetricsReport> out;
    for (double t : thresholds) {
        std::vector<bool> pred;
        pred.reserve(data.size());
        for (const auto& a : analyses) pred.push_back(a.label_at(t) != Label::NotProfane);
        out.push_back(make_report(gold, pred, "pipeline", t));
    }
    return out;
}

std::string format_report_table(const std::vector<MetricsReport>& reports) {
    std::string out;
    char line[256];
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%s  threshold %.2f  (n=%lld)\n", r.model.c_str(), r.threshold,
                      static_cast<long long>(r.counts.total()));
        out += line;
        std::snprintf(line, sizeof line, "  %-12s %9s %9s %9s\n", "class", "precision", "recall", "f1");
        out += line;
        for (const auto& [name, m] : {std::pair{"profane", r.profane}, std::pair{"not_profane", r.not_profane}}) {
            std::snprintf(line, sizeof line, "  %-12s %8.2f%% %8.2f%% %8.2f%%\n", name, 100.0 * m.precision,
                          100.0 * m.recall, 100.0 * m.f1);
            out += line;
        }
        std::snprintf(line, sizeof line, "  tp=%lld fp=%lld fn=%lld tn=%lld\n", static_cast<long long>(r.counts.tp),
                      static_cast<long long>(r.counts.fp), static_cast<long long>(r.counts.fn),
                      static_cast<long long>(r.counts.tn));
        out += line;
    }
    return out;
}

std::string format_report_csv(const std::vector<MetricsReport>& reports) {
    std::string out = "model,threshold,class,precision,recall,f1,tp,fp,fn,tn\n";
    for (const auto& r : reports) {
        for (const auto& [name, m] : {std::pair{"profane", r.profane}, std::pair{"not_profane", r.not_profane}}) {
            out += csv_field(r.model) + ',' + fmt_double(r.threshold) + ',' + name + ',' + fmt_double(m.precision) + ',' +
                   fmt_double(m.recall) + ',' + fmt_double(m.f1) + ',' + std::to_string(r.counts.tp) + ',' +
                   std::to_string(r.counts.fp) + ',' + std::to_string(r.counts.fn) + ',' + std::to_string(r.counts.tn) + '\n';
        }
    }
    return out;
}

std::string embeddings_csv(const std::vector<std::string>& tokens, const EncoderParams<float>& params) {
    std::string out = "token";
    for (int d = 0; d < params.config.proj_dim; ++d) out += ",d" + std::to_string(d);
    out += '\n';
    if (tokens.empty()) return out;
    std::vector<CharSeq> seqs;
    seqs.reserve(tokens.size());
    for (const auto& t : tokens) seqs.push_back(encode_token(t));
    const Matrix<float> z = embed(params, seqs);
    char buf[32];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out += csv_field(tokens[i]);
        for (Eigen::Index d = 0; d < z.cols(); ++d) {
            const auto r = std::to_chars(buf, buf + sizeof buf, z(static_cast<Eigen::Index>(i), d));
            out += ',';
            out.append(buf, r.ptr);
        }
        out += '\n';
    }
    return out;
}

void export_embeddings(const std::filesystem::path& tokens_file, const EncoderParams<float>& params,
                       const std::filesystem::path& out_csv) {
    const std::string csv = embeddings_csv(read_lines(tokens_file), params);
    std::ofstream out(out_csv, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + out_csv.string() + " for writing");
    out << csv;
    if (!out) throw Error(ErrorCode::Io, "write failed on " + out_csv.string());
}

}  // namespace yzr
