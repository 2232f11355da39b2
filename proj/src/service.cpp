#include "yzr/service.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "yzr/error.hpp"

namespace yzr {

using json = nlohmann::json;

std::string verdict_to_json(const Verdict& v) {
    json j;
    j["chat_id"] = v.chat_id;
    j["label"] = to_string(v.label);
    if (v.evidence) {
        j["token"] = v.evidence->token;
        j["key"] = v.evidence->key;
        if (v.evidence->similarity) j["sim"] = *v.evidence->similarity;
    }
    j["stage"] = to_string(v.stage);
    j["latency_us"] = v.latency_us;
    json meta = json::parse(v.meta_json, nullptr, false);
    j["meta"] = meta.is_discarded() ? json::object() : meta;
    if (!v.error.empty()) j["error"] = v.error;
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

RawChat parse_chat_message(const std::string& line) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Format, "message is not a JSON object");
    if (!j.contains("chat_id") || !j["chat_id"].is_string()) throw Error(ErrorCode::Format, "chat_id must be a string");
    if (!j.contains("text") || !j["text"].is_string()) throw Error(ErrorCode::Format, "text must be a string");
    RawChat chat;
    chat.id = j["chat_id"].get<std::string>();
    chat.text = j["text"].get<std::string>();
    if (j.contains("meta")) {
        if (!j["meta"].is_object()) throw Error(ErrorCode::Format, "meta must be an object");
        chat.meta_json = j["meta"].dump();
    }
    return chat;
}

Service::Service(std::shared_ptr<const Detector> detector, int workers, std::size_t queue_capacity,
                 std::size_t cache_capacity)
    : detector_(std::move(detector)),
      workers_(workers),
      inbound_(queue_capacity),
      outbound_(queue_capacity),
      cache_capacity_(cache_capacity) {
    if (!detector_) throw Error(ErrorCode::NotInitialized, "service needs a detector");
    if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
}

Service::~Service() { stop(); }

void Service::start() {
    if (started_) return;
    started_ = true;
    for (int i = 0; i < workers_; ++i) threads_.emplace_back([this] { work(); });
}

void Service::stop() {
    inbound_.close();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
    threads_.clear();
    outbound_.close();
}

bool Service::submit(std::string line, Reply reply) { return inbound_.push({std::move(line), std::move(reply)}); }

std::optional<std::string> Service::poll(std::chrono::milliseconds timeout) { return outbound_.pop_for(timeout); }

void Service::work() {
    while (auto job = inbound_.pop()) {
        std::string out = process(job->line);
        if (job->reply) {
            job->reply(out);
        } else {
            outbound_.push(std::move(out));
        }
    }
}

std::string Service::process(const std::string& line) {
    Verdict v;
    v.label = Label::ServiceError;
    v.stage = Stage::Service;
    RawChat chat;
    try {
        chat = parse_chat_message(line);
    } catch (const std::exception& e) {
        // best effort: echo the id if the record had one
        const json j = json::parse(line, nullptr, false);
        if (j.is_object() && j.contains("chat_id") && j["chat_id"].is_string()) v.chat_id = j["chat_id"].get<std::string>();
        v.error = e.what();
        spdlog::warn("malformed message: {}", e.what());
        ++processed_;
        return verdict_to_json(v);
    }
    {
        std::lock_guard lock(cache_mu_);
        if (auto it = cache_.find(chat.id); it != cache_.end()) {
            ++processed_;
            return it->second;
        }
    }
    std::string out;
    bool cacheable = false;
    try {
        out = verdict_to_json(detector_->detect(chat));
        cacheable = true;
    } catch (const std::exception& e) {
        v.chat_id = chat.id;
        v.meta_json = chat.meta_json;
        v.error = e.what();
        spdlog::error("detection failed for chat '{}': {}", chat.id, e.what());
        out = verdict_to_json(v);
    }
    if (cacheable && cache_capacity_ > 0) {
        std::lock_guard lock(cache_mu_);
        auto [it, inserted] = cache_.emplace(chat.id, out);
        if (inserted) {
            cache_order_.push_back(chat.id);
            if (cache_order_.size() > cache_capacity_) {
                cache_.erase(cache_order_.front());
                cache_order_.pop_front();
            }
        } else {
            out = it->second;  // a concurrent duplicate won the race
        }
    }
    ++processed_;
    return out;
}

void serve_stream(Service& service, std::istream& in, std::ostream& out) {
    service.start();
    std::thread writer([&] {
        while (true) {
            if (auto rec = service.poll(std::chrono::milliseconds(200))) {
                out << *rec << '\n';
                out.flush();
            } else if (service.drained()) {
                break;
            }
        }
    });
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        service.submit(line);
    }
    service.stop();
    writer.join();
}

}  // namespace yzr
