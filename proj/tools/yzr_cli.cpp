// Command-line front end; everything goes through the C interface.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "yzr/yzr.h"

namespace {

struct RuntimeFailure {
    std::string message;
};

void check(yzr_status st) {
    if (st != YZR_OK) throw RuntimeFailure{yzr_last_error()};
}

std::string take(char* s) {
    std::string out = s ? s : "";
    yzr_string_free(s);
    return out;
}

struct Common {
    std::string config;
    std::optional<double> threshold;
    std::string log_level = "warn";

    const char* config_path() const {
        if (!config.empty()) return config.c_str();
        const char* env = std::getenv("YZR_CONFIG");
        return env && *env ? env : nullptr;
    }
};

struct Detector {
    yzr_detector* handle = nullptr;
    explicit Detector(const Common& c) { check(yzr_detector_open(c.config_path(), c.threshold.value_or(0.0), &handle)); }
    ~Detector() { yzr_detector_close(handle); }
    Detector(const Detector&) = delete;
    Detector& operator=(const Detector&) = delete;
};

std::string json_escape(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out;
}

std::vector<double> parse_sweep(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw CLI::ValidationError("--sweep", "not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError("--sweep", "no thresholds given");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Profanity detection: normalization, dictionary matching and latent matching"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config, "Pipeline/training config file (falls back to $YZR_CONFIG)");
    app.add_option("--threshold", common.threshold, "Cosine threshold for latent matches, overrides the config")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--log-level", common.log_level, "trace|debug|info|warn|error|off");
    app.add_flag_callback("--version", [] {
        std::cout << yzr_version() << '\n';
        throw CLI::Success();
    });

    // train
    auto* train = app.add_subcommand("train", "Train the encoder on a token file");
    std::string tokens, weights_out, history_out;
    int epochs = 0;
    long long seed = -1;
    bool verbose = false;
    train->add_option("--tokens", tokens, "One token per line")->required();
    train->add_option("--out", weights_out, "Weights file to write")->required();
    train->add_option("--history", history_out, "Per-epoch history CSV");
    train->add_option("--epochs", epochs, "Override the configured epoch count")->check(CLI::PositiveNumber);
    train->add_option("--seed", seed, "Override the configured seed")->check(CLI::NonNegativeNumber);
    train->add_flag("--verbose", verbose, "Log every epoch");

    // detect
    auto* detect = app.add_subcommand("detect", "One chat per line on stdin, one verdict per line on stdout");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the verdict service (stdin/stdout, or TCP with --listen)");
    int workers = 0;
    std::string listen;
    serve->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    serve->add_option("--listen", listen, "HOST:PORT for newline-delimited JSON over TCP");

    // eval
    auto* eval = app.add_subcommand("eval", "Score a labeled CSV (text,label)");
    std::string data, sweep, csv_out;
    bool baseline = false;
    eval->add_option("--data", data, "Labeled CSV")->required()->check(CLI::ExistingFile);
    eval->add_flag("--baseline", baseline, "Exact token matching only");
    eval->add_option("--sweep", sweep, "Comma-separated ascending thresholds");
    eval->add_option("--csv", csv_out, "Also write the report as CSV");

    // index-build
    auto* index_build = app.add_subcommand("index-build", "Embed the profane vocabulary and write the index");
    std::string index_out;
    index_build->add_option("--out", index_out, "Index file (defaults to the configured index path)");

    // vocab-add
    auto* vocab_add = app.add_subcommand("vocab-add", "Add a profane key without retraining");
    std::string key;
    vocab_add->add_option("key", key, "The new key")->required();

    // export-embeddings
    auto* export_emb = app.add_subcommand("export-embeddings", "Write token embeddings as CSV");
    std::string emb_weights, emb_tokens, emb_out;
    export_emb->add_option("--weights", emb_weights, "Weights file")->required()->check(CLI::ExistingFile);
    export_emb->add_option("--tokens", emb_tokens, "One token per line")->required()->check(CLI::ExistingFile);
    export_emb->add_option("--out", emb_out, "CSV to write")->required();

    // fixtures
    auto* fixtures = app.add_subcommand("fixtures", "Write a synthetic corpus, variants and labeled chats");
    yzr_fixture_options fx{nullptr, 450, 50, 1, 200, 0.5, "mixed"};
    std::string fx_dir, fx_style = "mixed";
    fixtures->add_option("--out", fx_dir, "Output directory")->required();
    fixtures->add_option("--n-safe", fx.n_safe, "Safe tokens")->check(CLI::NonNegativeNumber);
    fixtures->add_option("--n-profane", fx.n_profane, "Profane keys")->check(CLI::NonNegativeNumber);
    fixtures->add_option("--seed", fx.seed, "Generator seed");
    fixtures->add_option("--chats", fx.n_chats, "Labeled chats")->check(CLI::NonNegativeNumber);
    fixtures->add_option("--profane-fraction", fx.profane_fraction, "Share of profane chats")->check(CLI::Range(0.0, 1.0));
    fixtures->add_option("--style", fx_style, "exact|censored|variant|spaced|mixed")
        ->check(CLI::IsMember({"exact", "censored", "variant", "spaced", "mixed"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);  // --help, --version
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        check(yzr_set_log_level(common.log_level.c_str()));
        if (*train) {
            yzr_train_options opts{common.config_path(), tokens.c_str(), weights_out.c_str(),
                                   history_out.empty() ? nullptr : history_out.c_str(), epochs, seed, verbose ? 1 : 0};
            if (common.log_level == "warn") check(yzr_set_log_level("info"));
            check(yzr_train(&opts));
        } else if (*detect) {
            Detector det(common);
            std::string line;
            long n = 0;
            while (std::getline(std::cin, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                char* out = nullptr;
                check(yzr_detector_detect(det.handle, std::to_string(++n).c_str(), line.c_str(), nullptr, &out));
                std::cout << take(out) << '\n';
            }
        } else if (*serve) {
            // Signals are taken synchronously by the main thread below, so
            // block them before any worker thread exists.
            sigset_t sigs;
            sigemptyset(&sigs);
            sigaddset(&sigs, SIGINT);
            sigaddset(&sigs, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
            Detector det(common);
            yzr_service* svc = nullptr;
            check(yzr_service_open(det.handle, workers, &svc));
            yzr_status st = YZR_OK;
            if (!listen.empty() || yzr_service_listen_configured(svc)) {
                int port = 0;
                st = yzr_service_listen(svc, listen.empty() ? nullptr : listen.c_str(), &port);
                if (st == YZR_OK) {
                    std::cerr << "listening on port " << port << std::endl;
                    int sig = 0;
                    sigwait(&sigs, &sig);
                    st = yzr_service_stop(svc);
                }
            } else {
                st = yzr_service_serve_stdio(svc);
            }
            const std::string err = st == YZR_OK ? "" : yzr_last_error();
            yzr_service_close(svc);
            if (st != YZR_OK) throw RuntimeFailure{err};
        } else if (*eval) {
            Detector det(common);
            std::vector<double> thresholds = sweep.empty() ? std::vector<double>{} : parse_sweep(sweep);
            char* table = nullptr;
            char* csv = nullptr;
            check(yzr_detector_eval(det.handle, data.c_str(), baseline ? 1 : 0, thresholds.data(), thresholds.size(),
                                    &table, &csv));
            std::cout << take(table);
            const std::string csv_text = take(csv);
            if (!csv_out.empty()) {
                FILE* f = std::fopen(csv_out.c_str(), "wb");
                if (!f || std::fwrite(csv_text.data(), 1, csv_text.size(), f) != csv_text.size()) {
                    if (f) std::fclose(f);
                    throw RuntimeFailure{"cannot write " + csv_out};
                }
                std::fclose(f);
            }
        } else if (*index_build) {
            Detector det(common);
            check(yzr_detector_save_index(det.handle, index_out.empty() ? nullptr : index_out.c_str()));
        } else if (*vocab_add) {
            Detector det(common);
            char* normalized = nullptr;
            check(yzr_detector_vocab_add(det.handle, key.c_str(), 1, &normalized));
            std::cout << "{\"added\":\"" << json_escape(take(normalized)) << "\"}\n";
        } else if (*export_emb) {
            check(yzr_export_embeddings(emb_weights.c_str(), emb_tokens.c_str(), emb_out.c_str()));
        } else if (*fixtures) {
            fx.out_dir = fx_dir.c_str();
            fx.style = fx_style.c_str();
            check(yzr_fixtures_write(&fx));
        }
    } catch (const RuntimeFailure& f) {
        std::cerr << "error: " << f.message << '\n';
        return 1;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
