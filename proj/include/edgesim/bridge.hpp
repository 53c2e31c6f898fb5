#pragma once

// Line-oriented JSON protocol that lets external agents drive an
// OffloadingEnv over TCP. One connection is one session owning one
// environment. Every request line gets at least one reply line; see
// docs/bridge_protocol.md for the message reference.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "edgesim/config_io.hpp"
#include "edgesim/env.hpp"
#include "edgesim/error.hpp"

namespace edgesim::bridge {

using nlohmann::json;

inline json metrics_to_json(const EpisodeMetrics& m) {
    json j;
    j["generated"] = m.generated;
    j["completed"] = m.completed;
    j["dropped_overflow"] = m.dropped_overflow;
    j["dropped_deadline"] = m.dropped_deadline;
    j["resident"] = m.resident_at_end;
    j["overloads_total"] = m.overload_total();
    j["overloads"] = m.overloads;
    const double mean = m.mean_response();
    j["mean_response"] = std::isnan(mean) ? json(nullptr) : json(mean);
    json rewards = json::object();
    for (const auto& [a, r] : m.agent_rewards) rewards[std::to_string(a)] = r;
    j["agent_rewards"] = rewards;
    return j;
}

class Session {
public:
    Session(ConfigValues base, std::filesystem::path base_dir, std::string id)
        : base_(std::move(base)), base_dir_(std::move(base_dir)), id_(std::move(id)) {
        config_ = config_from_values(base_, base_dir_);
    }

    const std::string& id() const noexcept { return id_; }

    /// Handles one request line and returns the reply lines (without newlines).
    std::vector<std::string> handle(const std::string& line) {
        std::vector<std::string> out;
        json msg;
        try {
            msg = json::parse(line);
        } catch (const json::parse_error& e) {
            out.push_back(error(std::string("malformed line: ") + e.what()));
            return out;
        }
        if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
            out.push_back(error("malformed line: expected an object with a string \"type\""));
            return out;
        }
        const std::string type = msg["type"];
        try {
            if (type == "hello") out.push_back(hello());
            else if (type == "reset") out.push_back(reset(msg));
            else if (type == "act") act(msg, out);
            else out.push_back(error("unknown message type: " + type));
        } catch (const std::exception& e) {
            out.push_back(error(e.what()));
        }
        return out;
    }

private:
    json envelope(const char* type) const { return json{{"type", type}, {"session", id_}}; }

    std::string error(const std::string& reason) const {
        json j = envelope("error");
        j["reason"] = reason;
        return j.dump();
    }

    std::string hello() const {
        json j = envelope("hello");
        j["agents"] = config_.topology.controllers();
        j["obs_width"] = observation_width(config_.max_neighbors);
        j["num_actions"] = 1 + config_.max_neighbors;
        return j.dump();
    }

    std::string reset(const json& msg) {
        ConfigValues values = base_;
        if (msg.contains("config")) {
            const json& overrides = msg["config"];
            if (!overrides.is_object()) throw Error("reset: config must be an object");
            for (const auto& [k, v] : overrides.items()) {
                if (!is_config_key(k)) throw Error("unknown key: " + k);
                values[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        SimConfig c = config_from_values(values, base_dir_);
        if (msg.contains("seed")) {
            if (!msg["seed"].is_number_unsigned()) throw Error("reset: seed must be a non-negative integer");
            c.seed = msg["seed"].get<std::uint64_t>();
        }
        config_ = c;
        env_.reset(config_);
        return observations(env_.observe()).dump();
    }

    json observations(const Observations& obs) const {
        json j = envelope("obs");
        j["time"] = env_.state().time;
        json values = json::object();
        json masks = json::object();
        for (const auto& [a, o] : obs) {
            values[std::to_string(a)] = o.values;
            masks[std::to_string(a)] = o.action_mask;
        }
        j["obs"] = values;
        j["mask"] = masks;
        return j;
    }

    void act(const json& msg, std::vector<std::string>& out) {
        if (!env_.active()) throw Error("no active episode: send reset first");
        if (env_.done()) throw EpisodeFinished();
        if (!msg.contains("actions") || !msg["actions"].is_object()) throw Error("act: actions must be an object");
        JointAction joint;
        for (const auto& [k, v] : msg["actions"].items()) {
            NodeId agent = 0;
            try {
                std::size_t used = 0;
                agent = std::stoi(k, &used);
                if (used != k.size()) throw std::invalid_argument(k);
            } catch (const std::exception&) {
                throw IllegalAction("illegal action: agent key '" + k + "' is not a node id");
            }
            if (!v.is_number_integer()) throw IllegalAction("illegal action: agent " + k + " index must be an integer");
            joint[agent] = v.get<int>();
        }
        for (NodeId a : env_.agents())
            if (!joint.contains(a)) throw IllegalAction("incomplete joint action: missing agent " + std::to_string(a));

        StepResult res = env_.step(joint);
        json rw = envelope("reward");
        rw["time"] = env_.state().time;
        json rewards = json::object();
        for (const auto& [a, r] : res.rewards) rewards[std::to_string(a)] = r;
        rw["rewards"] = rewards;
        out.push_back(rw.dump());
        if (res.done) {
            json d = envelope("done");
            d["time"] = env_.state().time;
            d["metrics"] = metrics_to_json(env_.metrics());
            out.push_back(d.dump());
        } else {
            out.push_back(observations(res.observations).dump());
        }
    }

    ConfigValues base_;
    std::filesystem::path base_dir_;
    std::string id_;
    SimConfig config_;
    OffloadingEnv env_;
};

/// TCP server: one thread per connection, one Session per connection.
class Server {
public:
    Server(ConfigValues base, std::filesystem::path base_dir) : base_(std::move(base)), base_dir_(std::move(base_dir)) {
        (void)config_from_values(base_, base_dir_);
    }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { stop(); }

    /// Binds to 127.0.0.1:`port` (0 picks a free port) and starts accepting.
    /// Returns the bound port.
    int start(int port, const std::string& host = "127.0.0.1") {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
        int yes = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw Error("bad host: " + host);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
            const std::string why = std::strerror(errno);
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw Error("cannot listen on port " + std::to_string(port) + ": " + why);
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        running_ = true;
        acceptor_ = std::thread([this] { accept_loop(); });
        return port_;
    }

    int port() const noexcept { return port_; }

    void wait() {
        if (acceptor_.joinable()) acceptor_.join();
    }

    void stop() {
        if (!running_.exchange(false)) return;
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        if (acceptor_.joinable()) acceptor_.join();
        std::list<Connection> conns;
        {
            std::lock_guard lock(mutex_);
            for (auto& c : connections_)
                if (c.fd >= 0) ::shutdown(c.fd, SHUT_RDWR);
            conns.swap(connections_);
        }
        for (auto& c : conns)
            if (c.thread.joinable()) c.thread.join();
    }

private:
    struct Connection {
        int fd = -1;
        std::thread thread;
    };

    void accept_loop() {
        std::uint64_t counter = 0;
        while (running_) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (errno == EINTR) continue;
                return;
            }
            std::lock_guard lock(mutex_);
            Connection* c = &connections_.emplace_back();
            c->fd = fd;
            const std::string id = "s" + std::to_string(++counter);
            c->thread = std::thread([this, c, fd, id] {
                serve(fd, id);
                std::lock_guard done(mutex_);
                ::close(fd);
                c->fd = -1;
            });
        }
    }

    static bool send_all(int fd, const std::string& data) {
        std::size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return false;
            sent += static_cast<std::size_t>(n);
        }
        return true;
    }

    void serve(int fd, const std::string& id) {
        constexpr std::size_t kMaxLine = 1 << 20;
        std::optional<Session> session;
        std::string pending;
        char buf[4096];
        bool open = true;
        try {
            session.emplace(base_, base_dir_, id);
        } catch (const std::exception& e) {
            send_all(fd, json{{"type", "error"}, {"session", id}, {"reason", e.what()}}.dump() + "\n");
            open = false;
        }
        while (open) {
            const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
            if (n <= 0) break;  // closed or half-closed: the session is discarded
            pending.append(buf, static_cast<std::size_t>(n));
            std::size_t nl;
            while (open && (nl = pending.find('\n')) != std::string::npos) {
                std::string line = pending.substr(0, nl);
                pending.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                std::string reply;
                for (const auto& r : session->handle(line)) reply += r + "\n";
                open = send_all(fd, reply);
            }
            if (pending.size() > kMaxLine) {
                send_all(fd, json{{"type", "error"}, {"session", id}, {"reason", "malformed line: too long"}}.dump() + "\n");
                pending.clear();
            }
        }
    }

    ConfigValues base_;
    std::filesystem::path base_dir_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mutex_;
    std::list<Connection> connections_;
};

}  // namespace edgesim::bridge
