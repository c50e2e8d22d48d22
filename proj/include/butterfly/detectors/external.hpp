#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "butterfly/detectors/detector.hpp"
#include "butterfly/detectors/protocol.hpp"

extern char** environ;

namespace butterfly {

enum class DetectorErrorKind {
    transport,
    malformed,
    id_mismatch,
    timeout,
    remote,
    version_mismatch,
};

[[nodiscard]] constexpr auto to_string(DetectorErrorKind kind) noexcept -> const char*
{
    switch (kind) {
    case DetectorErrorKind::transport: return "transport";
    case DetectorErrorKind::malformed: return "malformed";
    case DetectorErrorKind::id_mismatch: return "id_mismatch";
    case DetectorErrorKind::timeout: return "timeout";
    case DetectorErrorKind::remote: return "remote";
    case DetectorErrorKind::version_mismatch: return "version_mismatch";
    }
    return "unknown";
}

class DetectorError : public std::runtime_error {
public:
    DetectorError(DetectorErrorKind kind, const std::string& what)
        : std::runtime_error(std::string("detector ") + to_string(kind) + " error: " + what), kind_(kind)
    {
    }
    [[nodiscard]] auto kind() const noexcept -> DetectorErrorKind { return kind_; }

private:
    DetectorErrorKind kind_;
};

/// Bidirectional newline-delimited text channel.
class LineChannel {
public:
    LineChannel() = default;
    LineChannel(const LineChannel&) = delete;
    auto operator=(const LineChannel&) -> LineChannel& = delete;
    virtual ~LineChannel() = default;

    virtual void send_line(std::string_view line) = 0;
    /// Next line without its terminator. Throws DetectorError(timeout) or
    /// DetectorError(transport) on EOF.
    [[nodiscard]] virtual auto receive_line(std::chrono::milliseconds timeout) -> std::string = 0;
};

/// LineChannel over a pair of file descriptors (pipe ends or one socket).
class FdChannel : public LineChannel {
public:
    static constexpr std::size_t kMaxLine = std::size_t{1} << 28;

    FdChannel(int read_fd, int write_fd, bool is_socket)
        : read_fd_(read_fd), write_fd_(write_fd), is_socket_(is_socket)
    {
    }
    ~FdChannel() override { close_fds(); }

    void send_line(std::string_view line) override
    {
        if (line.find('\n') != std::string_view::npos) {
            throw std::invalid_argument("send_line: record contains a raw newline");
        }
        std::string buf(line);
        buf.push_back('\n');
        std::size_t sent = 0;
        while (sent < buf.size()) {
            auto const n = is_socket_ ? ::send(write_fd_, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL)
                                      : ::write(write_fd_, buf.data() + sent, buf.size() - sent);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw DetectorError(DetectorErrorKind::transport, std::string("write failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    [[nodiscard]] auto receive_line(std::chrono::milliseconds timeout) -> std::string override
    {
        auto const deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (auto const nl = buffer_.find('\n', scanned_); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                scanned_ = 0;
                if (!line.empty() && line.back() == '\r') {
                    line.pop_back();
                }
                return line;
            }
            scanned_ = buffer_.size();
            if (buffer_.size() > kMaxLine) {
                throw DetectorError(DetectorErrorKind::malformed, "record exceeds maximum line length");
            }
            auto const left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                throw DetectorError(DetectorErrorKind::timeout, "no response within " + std::to_string(timeout.count()) + " ms");
            }
            pollfd pfd{read_fd_, POLLIN, 0};
            auto const ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
            if (ready < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw DetectorError(DetectorErrorKind::transport, std::string("poll failed: ") + std::strerror(errno));
            }
            if (ready == 0) {
                continue;
            }
            char chunk[65536];
            auto const n = ::read(read_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) {
                    continue;
                }
                throw DetectorError(DetectorErrorKind::transport, std::string("read failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                throw DetectorError(DetectorErrorKind::transport, "connection closed by peer");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

protected:
    void close_write()
    {
        if (write_fd_ < 0) {
            return;
        }
        if (write_fd_ == read_fd_) {
            if (is_socket_) {
                ::shutdown(write_fd_, SHUT_WR);
            }
            return;
        }
        ::close(write_fd_);
        write_fd_ = -1;
    }

    void close_fds()
    {
        if (read_fd_ >= 0) {
            ::close(read_fd_);
        }
        if (write_fd_ >= 0 && write_fd_ != read_fd_) {
            ::close(write_fd_);
        }
        read_fd_ = -1;
        write_fd_ = -1;
    }

private:
    int read_fd_;
    int write_fd_;
    bool is_socket_;
    std::string buffer_;
    std::size_t scanned_ = 0;
};

[[nodiscard]] inline auto connect_tcp(const std::string& host, std::uint16_t port) -> std::unique_ptr<LineChannel>
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    auto const service = std::to_string(port);
    if (auto rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
        throw DetectorError(DetectorErrorKind::transport, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, &::freeaddrinfo);
    for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            return std::make_unique<FdChannel>(fd, fd, true);
        }
        ::close(fd);
    }
    throw DetectorError(DetectorErrorKind::transport, "cannot connect to " + host + ":" + service);
}

/// "host:port" -> channel.
[[nodiscard]] inline auto connect_tcp(std::string_view address) -> std::unique_ptr<LineChannel>
{
    auto const colon = address.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == address.size()) {
        throw std::invalid_argument("detector address must be host:port, got '" + std::string(address) + "'");
    }
    auto const port = std::stoul(std::string(address.substr(colon + 1)));
    if (port == 0 || port > 65535) {
        throw std::invalid_argument("detector port out of range");
    }
    return connect_tcp(std::string(address.substr(0, colon)), static_cast<std::uint16_t>(port));
}

/// Child process whose stdin/stdout carry the protocol. stderr is inherited.
class ChildProcess final : public FdChannel {
public:
    static auto spawn(const std::vector<std::string>& argv) -> std::unique_ptr<ChildProcess>
    {
        if (argv.empty()) {
            throw std::invalid_argument("detector command is empty");
        }
        // A dead child must surface as a write error, not terminate us.
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0) {
            throw DetectorError(DetectorErrorKind::transport, "pipe failed");
        }
        if (::pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw DetectorError(DetectorErrorKind::transport, "pipe failed");
        }
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

        std::vector<char*> args;
        for (const auto& a : argv) {
            args.push_back(const_cast<char*>(a.c_str()));
        }
        args.push_back(nullptr);
        pid_t pid = 0;
        auto const rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        ::close(to_child[0]);
        ::close(from_child[1]);
        if (rc != 0) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            throw DetectorError(DetectorErrorKind::transport, "cannot start '" + argv[0] + "': " + std::strerror(rc));
        }
        return std::unique_ptr<ChildProcess>(new ChildProcess(pid, from_child[0], to_child[1]));
    }

    ~ChildProcess() override
    {
        close_write();
        using namespace std::chrono_literals;
        auto const deadline = std::chrono::steady_clock::now() + 2s;
        int status = 0;
        while (::waitpid(pid_, &status, WNOHANG) == 0) {
            if (std::chrono::steady_clock::now() > deadline) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, &status, 0);
                break;
            }
            std::this_thread::sleep_for(10ms);
        }
    }

    [[nodiscard]] auto pid() const noexcept -> pid_t { return pid_; }

private:
    ChildProcess(pid_t pid, int read_fd, int write_fd)
        : FdChannel(read_fd, write_fd, false), pid_(pid)
    {
    }

    pid_t pid_;
};

struct ConnectionOptions {
    std::chrono::milliseconds timeout{30000};
};

/// Client side of one protocol connection. Requests are strictly serial.
class DetectorConnection {
public:
    DetectorConnection(std::unique_ptr<LineChannel> channel, ConnectionOptions options = {})
        : channel_(std::move(channel)), options_(options)
    {
        if (!channel_) {
            throw std::invalid_argument("DetectorConnection: null channel");
        }
    }

    /// Exchanges hello records; returns the server's name.
    auto handshake() -> std::string
    {
        channel_->send_line(protocol::encode(protocol::Hello{protocol::kVersion, std::nullopt}));
        auto const record = receive();
        const auto* hello = std::get_if<protocol::Hello>(&record);
        if (hello == nullptr) {
            if (const auto* err = std::get_if<protocol::ErrorRecord>(&record)) {
                throw DetectorError(DetectorErrorKind::remote, "handshake rejected: " + err->message);
            }
            throw DetectorError(DetectorErrorKind::malformed, "expected hello record");
        }
        if (hello->version != protocol::kVersion) {
            throw DetectorError(DetectorErrorKind::version_mismatch,
                                "server speaks version " + std::to_string(hello->version) + ", expected " +
                                    std::to_string(protocol::kVersion));
        }
        server_name_ = hello->name.value_or("");
        handshaken_ = true;
        return server_name_;
    }

    auto detect(const Image& img) -> DetectionSet
    {
        if (!handshaken_) {
            throw std::logic_error("DetectorConnection: handshake required before detect");
        }
        auto const id = next_id_++;
        channel_->send_line(protocol::encode(protocol::DetectRequest{id, img}));
        auto const record = receive();
        if (const auto* d = std::get_if<protocol::Detections>(&record)) {
            if (d->id != id) {
                throw DetectorError(DetectorErrorKind::id_mismatch,
                                    "expected id " + std::to_string(id) + ", got " + std::to_string(d->id));
            }
            return d->boxes;
        }
        if (const auto* err = std::get_if<protocol::ErrorRecord>(&record)) {
            throw DetectorError(DetectorErrorKind::remote, err->message);
        }
        throw DetectorError(DetectorErrorKind::malformed, "expected detections record");
    }

    [[nodiscard]] auto server_name() const -> const std::string& { return server_name_; }

private:
    auto receive() -> protocol::Record
    {
        auto const line = channel_->receive_line(options_.timeout);
        try {
            return protocol::decode(line);
        } catch (const protocol::ProtocolError& e) {
            throw DetectorError(DetectorErrorKind::malformed, e.what());
        }
    }

    std::unique_ptr<LineChannel> channel_;
    ConnectionOptions options_;
    std::uint64_t next_id_ = 1;
    std::string server_name_;
    bool handshaken_ = false;
};

/// Detector backed by a remote process. Calls are serialized per connection.
class ExternalDetector final : public Detector {
public:
    ExternalDetector(std::unique_ptr<LineChannel> channel, ConnectionOptions options = {})
        : connection_(std::move(channel), options)
    {
        connection_.handshake();
    }

    static auto spawn(const std::vector<std::string>& argv, ConnectionOptions options = {}) -> std::unique_ptr<ExternalDetector>
    {
        return std::make_unique<ExternalDetector>(ChildProcess::spawn(argv), options);
    }

    static auto connect(std::string_view address, ConnectionOptions options = {}) -> std::unique_ptr<ExternalDetector>
    {
        return std::make_unique<ExternalDetector>(connect_tcp(address), options);
    }

    [[nodiscard]] auto detect(const Image& img) const -> DetectionSet override
    {
        std::lock_guard lock(mutex_);
        return connection_.detect(img);
    }
    [[nodiscard]] auto concurrency() const noexcept -> Concurrency override { return Concurrency::serialize; }
    [[nodiscard]] auto name() const -> std::string override { return "external:" + connection_.server_name(); }

private:
    mutable std::mutex mutex_;
    mutable DetectorConnection connection_;
};

} // namespace butterfly
