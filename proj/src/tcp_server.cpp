#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <memory>

#include <spdlog/spdlog.h>

#include "yzr/error.hpp"
#include "yzr/service.hpp"

namespace yzr {

std::pair<std::string, int> parse_listen_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "listen address must be HOST:PORT, got '" + address + "'");
    std::string host = address.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    int port = -1;
    const std::string p = address.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
    if (ec != std::errc() || ptr != p.data() + p.size() || port < 0 || port > 65535) {
        throw Error(ErrorCode::InvalidArgument, "bad port in listen address '" + address + "'");
    }
    return {host.empty() ? "0.0.0.0" : host, port};
}

TcpServer::TcpServer(Service& service, std::string host, int port)
    : service_(service), host_(std::move(host)), port_(port) {}

TcpServer::~TcpServer() {
    stop();
    wait();
}

int TcpServer::start() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(port_);
    if (const int rc = getaddrinfo(host_.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw Error(ErrorCode::Service, "cannot resolve " + host_ + ": " + gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(res, freeaddrinfo);
    int fd = -1;
    std::string last_error = "no usable address";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
        last_error = std::strerror(errno);
        ::close(fd);
        fd = -1;
    }
    if (fd < 0) throw Error(ErrorCode::Service, "cannot listen on " + host_ + ":" + port + ": " + last_error);

    sockaddr_storage bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                         : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
    listen_fd_ = fd;
    running_ = true;
    service_.start();
    acceptor_ = std::thread([this] { accept_loop(); });
    spdlog::info("listening on {}:{}", host_, port_);
    return port_;
}

void TcpServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 200);
        if (rc <= 0) continue;
        const int conn = ::accept(listen_fd_, nullptr, nullptr);
        if (conn < 0) continue;
        std::lock_guard lock(conn_mu_);
        open_fds_.push_back(conn);
        connections_.emplace_back([this, conn] { serve_connection(conn); });
    }
}

namespace {

bool send_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n <= 0) return false;
        off += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

// Replies for one connection are written by whichever worker finishes the
// record, so writes share a lock; the socket closes once every reply is out.
void TcpServer::serve_connection(int fd) {
    struct Conn {
        int fd;
        std::mutex mu;
        std::condition_variable done;
        std::size_t pending = 0;
    };
    auto conn = std::make_shared<Conn>();
    conn->fd = fd;
    std::string buffer;
    char chunk[4096];
    bool open = true;
    while (open && running_) {
        pollfd p{fd, POLLIN, 0};
        const int rc = ::poll(&p, 1, 200);
        if (rc == 0) continue;
        const ssize_t n = rc > 0 ? ::recv(fd, chunk, sizeof chunk, 0) : -1;
        if (n <= 0) {
            open = false;
        } else {
            buffer.append(chunk, static_cast<std::size_t>(n));
        }
        std::size_t nl;
        while ((nl = buffer.find('\n')) != std::string::npos || (!open && !buffer.empty())) {
            std::string line = nl == std::string::npos ? std::move(buffer) : buffer.substr(0, nl);
            buffer.erase(0, nl == std::string::npos ? buffer.size() : nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            {
                std::lock_guard lock(conn->mu);
                ++conn->pending;
            }
            const bool queued = service_.submit(std::move(line), [conn](const std::string& out) {
                std::lock_guard lock(conn->mu);
                send_all(conn->fd, out + "\n");
                --conn->pending;
                conn->done.notify_all();
            });
            if (!queued) {
                std::lock_guard lock(conn->mu);
                --conn->pending;
                open = false;
            }
        }
    }
    {
        std::unique_lock lock(conn->mu);
        conn->done.wait(lock, [&] { return conn->pending == 0; });
    }
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
    std::lock_guard lock(conn_mu_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
}

void TcpServer::stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void TcpServer::wait() {
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> conns;
    {
        std::lock_guard lock(conn_mu_);
        conns.swap(connections_);
    }
    for (auto& t : conns) {
        if (t.joinable()) t.join();
    }
}

}  // namespace yzr
