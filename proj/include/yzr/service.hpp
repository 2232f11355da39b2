#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "yzr/pipeline.hpp"

namespace yzr {

/// Blocking multi-producer multi-consumer queue. After close(), push fails and
/// pop drains what is left, then returns nullopt.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    bool push(T item) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        return take(lock);
    }

    std::optional<T> pop_for(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mu_);
        not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
        return take(lock);
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(mu_);
        return closed_;
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return items_.size();
    }

private:
    std::optional<T> take(std::unique_lock<std::mutex>&) {
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable not_empty_, not_full_;
    std::deque<T> items_;
    bool closed_ = false;
};

/// Parses one inbound wire record {"chat_id","text","meta"}. Throws Format.
RawChat parse_chat_message(const std::string& line);

/// Worker pool between an inbound and an outbound queue of wire records.
/// Verdicts are cached by chat_id, so a redelivered message gets the exact
/// record it got the first time.
class Service {
public:
    using Reply = std::function<void(const std::string&)>;

    Service(std::shared_ptr<const Detector> detector, int workers, std::size_t queue_capacity = 1024,
            std::size_t cache_capacity = 100000);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void start();
    /// Closes the inbound queue, lets workers drain it, then closes the outbound queue.
    void stop();

    /// Queue a raw line; the verdict goes to the outbound queue, or to `reply`.
    bool submit(std::string line, Reply reply = {});
    /// Next outbound record; nullopt on timeout or after stop() once drained.
    std::optional<std::string> poll(std::chrono::milliseconds timeout);

    /// Synchronous path used by the workers: never throws.
    std::string process(const std::string& line);

    std::uint64_t processed() const { return processed_.load(); }
    /// Stopped and every outbound record has been polled.
    bool drained() const { return outbound_.closed() && outbound_.size() == 0; }

private:
    struct Job {
        std::string line;
        Reply reply;
    };
    void work();

    std::shared_ptr<const Detector> detector_;
    int workers_;
    BoundedQueue<Job> inbound_;
    BoundedQueue<std::string> outbound_;
    std::vector<std::thread> threads_;
    std::atomic<std::uint64_t> processed_{0};
    bool started_ = false;

    std::mutex cache_mu_;
    std::unordered_map<std::string, std::string> cache_;
    std::deque<std::string> cache_order_;
    std::size_t cache_capacity_;
};

/// Reads records from `in` until EOF and writes one verdict line per record to `out`.
void serve_stream(Service& service, std::istream& in, std::ostream& out);

/// Newline-delimited JSON over TCP: one verdict line back per inbound line,
/// on the same connection.
class TcpServer {
public:
    TcpServer(Service& service, std::string host, int port);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting; returns the bound port (useful with port 0).
    int start();
    void stop();
    void wait();

private:
    void accept_loop();
    void serve_connection(int fd);

    Service& service_;
    std::string host_;
    int port_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex conn_mu_;
    std::vector<std::thread> connections_;
    std::vector<int> open_fds_;
};

/// Splits "host:port"; Throws InvalidArgument.
std::pair<std::string, int> parse_listen_address(const std::string& address);

}  // namespace yzr
