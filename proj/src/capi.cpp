#include "yzr/yzr.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "yzr/dataset.hpp"
#include "yzr/error.hpp"
#include "yzr/evaluation.hpp"
#include "yzr/fixtures.hpp"
#include "yzr/kvconfig.hpp"
#include "yzr/pipeline.hpp"
#include "yzr/service.hpp"
#include "yzr/trainer.hpp"
#include "yzr/weights_io.hpp"

struct yzr_detector {
    yzr::PipelineConfig config;
    std::shared_ptr<yzr::Detector> detector;
    std::mutex persist_mu;
};

struct yzr_service {
    std::shared_ptr<yzr::Detector> detector;
    std::string listen;
    std::unique_ptr<yzr::Service> service;
    std::unique_ptr<yzr::TcpServer> server;
};

namespace {

thread_local std::string g_last_error;

yzr_status status_of(yzr::ErrorCode code) {
    using yzr::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument: return YZR_ERR_INVALID_ARGUMENT;
        case ErrorCode::EmptyToken: return YZR_ERR_EMPTY_TOKEN;
        case ErrorCode::TokenTooLong: return YZR_ERR_TOKEN_TOO_LONG;
        case ErrorCode::TokenTooShort: return YZR_ERR_TOKEN_TOO_SHORT;
        case ErrorCode::Io: return YZR_ERR_IO;
        case ErrorCode::Format: return YZR_ERR_FORMAT;
        case ErrorCode::Conflict: return YZR_ERR_CONFLICT;
        case ErrorCode::Shape: return YZR_ERR_SHAPE;
        case ErrorCode::NonFinite: return YZR_ERR_NON_FINITE;
        case ErrorCode::StaleCache: return YZR_ERR_STALE_CACHE;
        case ErrorCode::VersionMismatch: return YZR_ERR_VERSION_MISMATCH;
        case ErrorCode::Checksum: return YZR_ERR_CHECKSUM;
        case ErrorCode::ZeroVector: return YZR_ERR_ZERO_VECTOR;
        case ErrorCode::EmptyIndex: return YZR_ERR_EMPTY_INDEX;
        case ErrorCode::DuplicateKey: return YZR_ERR_DUPLICATE_KEY;
        case ErrorCode::EmptyDataset: return YZR_ERR_EMPTY_DATASET;
        case ErrorCode::TooFewTokens: return YZR_ERR_TOO_FEW_TOKENS;
        case ErrorCode::SpecInfeasible: return YZR_ERR_SPEC_INFEASIBLE;
        case ErrorCode::NotEnoughVariants: return YZR_ERR_NOT_ENOUGH_VARIANTS;
        case ErrorCode::NotInitialized: return YZR_ERR_NOT_INITIALIZED;
        case ErrorCode::Service: return YZR_ERR_SERVICE;
    }
    return YZR_ERR_INTERNAL;
}

template <typename F>
yzr_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return YZR_OK;
    } catch (const yzr::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return YZR_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return YZR_ERR_INTERNAL;
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size() + 1);
    return p;
}

void require(const void* p, const char* what) {
    if (!p) throw yzr::Error(yzr::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::vector<std::string> read_training_tokens(const char* path) {
    const yzr::NormalizationConfig norm;
    std::vector<std::string> tokens;
    for (const auto& line : yzr::read_lines(path)) {
        if (line.front() == '#') continue;
        std::string t = yzr::normalize(line, norm);
        if (t.empty()) continue;
        if (t.find(' ') != std::string::npos) {
            throw yzr::Error(yzr::ErrorCode::Format, std::string(path) + ": '" + line + "' is more than one token");
        }
        tokens.push_back(std::move(t));
    }
    return tokens;
}

}  // namespace

extern "C" {

const char* yzr_version(void) { return "1.0.0"; }

const char* yzr_status_name(yzr_status status) {
    switch (status) {
        case YZR_OK: return "ok";
        case YZR_ERR_INTERNAL: return "internal";
        default: break;
    }
    if (status > 0 && status <= YZR_ERR_SERVICE) return yzr::to_string(static_cast<yzr::ErrorCode>(status - 1));
    return "unknown";
}

const char* yzr_last_error(void) { return g_last_error.c_str(); }

void yzr_string_free(char* s) { std::free(s); }

yzr_status yzr_set_log_level(const char* level) {
    return guarded([&] {
        require(level, "level");
        const auto lvl = spdlog::level::from_str(level);
        if (lvl == spdlog::level::off && std::strcmp(level, "off") != 0) {
            throw yzr::Error(yzr::ErrorCode::InvalidArgument, std::string("unknown log level '") + level + "'");
        }
        spdlog::set_level(lvl);
    });
}

yzr_status yzr_detector_open(const char* config_path, double threshold, yzr_detector** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        auto h = std::make_unique<yzr_detector>();
        if (config_path) h->config = yzr::PipelineConfig::load(config_path);
        if (threshold > 0.0) h->config.threshold = threshold;
        h->detector = yzr::Detector::open(h->config);
        *out = h.release();
    });
}

void yzr_detector_close(yzr_detector* det) { delete det; }

yzr_status yzr_detector_set_threshold(yzr_detector* det, double threshold) {
    return guarded([&] {
        require(det, "detector");
        det->detector->set_threshold(threshold);
        det->config.threshold = threshold;
    });
}

yzr_status yzr_detector_detect(yzr_detector* det, const char* chat_id, const char* text, const char* meta_json,
                               char** verdict_json) {
    return guarded([&] {
        require(det, "detector");
        require(text, "text");
        require(verdict_json, "verdict_json");
        std::string meta = "{}";
        if (meta_json) {
            const auto m = nlohmann::json::parse(meta_json, nullptr, false);
            if (m.is_discarded() || !m.is_object()) throw yzr::Error(yzr::ErrorCode::Format, "meta must be a JSON object");
            meta = m.dump();
        }
        yzr::RawChat chat{chat_id ? chat_id : "", text, meta};
        *verdict_json = dup(yzr::verdict_to_json(det->detector->detect(chat)));
    });
}

yzr_status yzr_detector_vocab_add(yzr_detector* det, const char* key, int persist, char** normalized_out) {
    return guarded([&] {
        require(det, "detector");
        require(key, "key");
        std::lock_guard lock(det->persist_mu);
        const bool known = [&] {
            const auto snap = det->detector->snapshot();
            return snap->lexicon.is_profane(yzr::normalize(key, snap->normalization));
        }();
        if (persist && !det->config.profane) {
            throw yzr::Error(yzr::ErrorCode::InvalidArgument, "no profane vocabulary file configured (vocab.profane)");
        }
        const std::string n = det->detector->add_profane_key(key);
        if (persist) {
            if (!known) {
                std::ofstream out(*det->config.profane, std::ios::binary | std::ios::app);
                out << n << '\n';
                if (!out) throw yzr::Error(yzr::ErrorCode::Io, "cannot append to " + det->config.profane->string());
            }
            const auto snap = det->detector->snapshot();
            if (det->config.index && snap->params) snap->index->save(*det->config.index, yzr::params_fingerprint(*snap->params));
        }
        if (normalized_out) *normalized_out = dup(n);
    });
}

yzr_status yzr_detector_save_index(yzr_detector* det, const char* path) {
    return guarded([&] {
        require(det, "detector");
        const auto snap = det->detector->snapshot();
        if (!snap->params) throw yzr::Error(yzr::ErrorCode::NotInitialized, "no weights configured; there is no index to build");
        std::filesystem::path target;
        if (path) {
            target = path;
        } else if (det->config.index) {
            target = *det->config.index;
        } else {
            throw yzr::Error(yzr::ErrorCode::InvalidArgument, "no index path given or configured");
        }
        snap->index->save(target, yzr::params_fingerprint(*snap->params));
    });
}

yzr_status yzr_detector_eval(yzr_detector* det, const char* data_csv, int baseline, const double* sweep, size_t n_sweep,
                             char** table_out, char** csv_out) {
    return guarded([&] {
        require(det, "detector");
        require(data_csv, "data_csv");
        if (n_sweep > 0) require(sweep, "sweep");
        const auto data = yzr::read_labeled_csv(data_csv);
        std::vector<yzr::MetricsReport> reports;
        if (baseline) {
            const auto snap = det->detector->snapshot();
            reports.push_back(yzr::regex_baseline(data, snap->lexicon.profane(), snap->normalization));
        } else if (n_sweep > 0) {
            reports = yzr::threshold_sweep(data, *det->detector, std::vector<double>(sweep, sweep + n_sweep));
        } else {
            reports.push_back(yzr::evaluate(data, *det->detector, det->detector->threshold()));
        }
        if (table_out) *table_out = dup(yzr::format_report_table(reports));
        if (csv_out) *csv_out = dup(yzr::format_report_csv(reports));
    });
}

yzr_status yzr_train(const yzr_train_options* opts) {
    return guarded([&] {
        require(opts, "options");
        require(opts->tokens_path, "tokens_path");
        require(opts->weights_out, "weights_out");
        yzr::KeyValueConfig kv;
        if (opts->config_path) kv = yzr::KeyValueConfig::load(opts->config_path);
        yzr::TrainConfig cfg = yzr::TrainConfig::from_config(kv);
        const yzr::EncoderConfig enc = yzr::encoder_config_from(kv);
        if (opts->epochs > 0) cfg.epochs = opts->epochs;
        if (opts->seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts->seed);
        const auto tokens = read_training_tokens(opts->tokens_path);
        const bool verbose = opts->verbose != 0;
        const yzr::TrainResult result = yzr::fit(tokens, enc, cfg, [&](const yzr::EpochRecord& r) {
            if (verbose || r.epoch + 1 == cfg.epochs || r.epoch % 50 == 0) {
                spdlog::info("epoch {:4d}  train {:.5f}  valid {:.5f}  lr {:.3e}", r.epoch, r.train_loss, r.val_loss, r.lr);
            }
        });
        yzr::save_params(result.params, opts->weights_out);
        if (opts->history_out) result.history.write_csv(opts->history_out);
        spdlog::info("best epoch {} (valid loss {:.5f})", result.history.best_epoch, result.history.best_val_loss);
    });
}

yzr_status yzr_export_embeddings(const char* weights_path, const char* tokens_path, const char* out_csv) {
    return guarded([&] {
        require(weights_path, "weights_path");
        require(tokens_path, "tokens_path");
        require(out_csv, "out_csv");
        yzr::export_embeddings(tokens_path, yzr::load_params(weights_path), out_csv);
    });
}

yzr_status yzr_fixtures_write(const yzr_fixture_options* opts) {
    return guarded([&] {
        require(opts, "options");
        require(opts->out_dir, "out_dir");
        yzr::CorpusSpec spec;
        spec.n_safe = opts->n_safe;
        spec.n_profane = opts->n_profane;
        spec.seed = opts->seed;
        yzr::ChatSpec chats;
        chats.n_chats = opts->n_chats;
        chats.profane_fraction = opts->profane_fraction;
        chats.seed = opts->seed + 1;
        const std::string style = opts->style ? opts->style : "mixed";
        if (style == "exact") {
            chats.style = yzr::ProfaneStyle::Exact;
        } else if (style == "censored") {
            chats.style = yzr::ProfaneStyle::Censored;
        } else if (style == "variant") {
            chats.style = yzr::ProfaneStyle::Variant;
        } else if (style == "spaced") {
            chats.style = yzr::ProfaneStyle::Spaced;
        } else if (style == "mixed") {
            chats.style = yzr::ProfaneStyle::Mixed;
        } else {
            throw yzr::Error(yzr::ErrorCode::InvalidArgument, "unknown chat style '" + style + "'");
        }
        yzr::write_fixture_files(opts->out_dir, yzr::generate_corpus(spec), spec, chats);
    });
}

yzr_status yzr_service_open(yzr_detector* det, int workers, yzr_service** out) {
    return guarded([&] {
        require(det, "detector");
        require(out, "out");
        *out = nullptr;
        auto h = std::make_unique<yzr_service>();
        h->detector = det->detector;
        h->listen = det->config.listen;
        h->service = std::make_unique<yzr::Service>(h->detector, workers > 0 ? workers : det->config.workers);
        h->service->start();
        *out = h.release();
    });
}

void yzr_service_close(yzr_service* svc) {
    if (!svc) return;
    if (svc->server) svc->server->stop();
    svc->server.reset();
    svc->service->stop();
    delete svc;
}

yzr_status yzr_service_submit(yzr_service* svc, const char* message_json) {
    return guarded([&] {
        require(svc, "service");
        require(message_json, "message_json");
        if (!svc->service->submit(message_json)) throw yzr::Error(yzr::ErrorCode::Service, "service is stopped");
    });
}

yzr_status yzr_service_poll(yzr_service* svc, int timeout_ms, char** record_out) {
    return guarded([&] {
        require(svc, "service");
        require(record_out, "record_out");
        *record_out = nullptr;
        if (auto rec = svc->service->poll(std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms))) *record_out = dup(*rec);
    });
}

yzr_status yzr_service_stop(yzr_service* svc) {
    return guarded([&] {
        require(svc, "service");
        if (svc->server) {
            svc->server->stop();
            svc->server->wait();
        }
        svc->service->stop();
    });
}

yzr_status yzr_service_serve_stdio(yzr_service* svc) {
    return guarded([&] {
        require(svc, "service");
        std::ios::sync_with_stdio(false);
        yzr::serve_stream(*svc->service, std::cin, std::cout);
    });
}

yzr_status yzr_service_listen(yzr_service* svc, const char* address, int* bound_port) {
    return guarded([&] {
        require(svc, "service");
        if (!address && svc->listen.empty()) throw yzr::Error(yzr::ErrorCode::InvalidArgument, "no listen address given or configured");
        if (svc->server) throw yzr::Error(yzr::ErrorCode::Service, "service is already listening");
        const auto [host, port] = yzr::parse_listen_address(address ? address : svc->listen);
        svc->server = std::make_unique<yzr::TcpServer>(*svc->service, host, port);
        const int p = svc->server->start();
        if (bound_port) *bound_port = p;
    });
}

int yzr_service_listen_configured(const yzr_service* svc) { return svc && !svc->listen.empty() ? 1 : 0; }

}  // extern "C"
