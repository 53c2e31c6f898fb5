#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

#include "fixtures.hpp"

using namespace edgesim;
using nlohmann::json;

namespace {

ConfigValues small_values() {
    return {{"topology.mode", "clusters"}, {"horizon", "40"}, {"lambda", "0.3"}, {"seed", "3"}};
}

std::string all_zero_act(const std::vector<NodeId>& agents) {
    json a = json::object();
    for (NodeId n : agents) a[std::to_string(n)] = 0;
    return json{{"type", "act"}, {"actions", a}}.dump();
}

class Client {
public:
    explicit Client(int port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) throw std::runtime_error("connect");
    }
    ~Client() { ::close(fd_); }

    void send(const std::string& line) {
        const std::string data = line + "\n";
        ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    }

    json recv() {
        for (;;) {
            if (auto nl = buf_.find('\n'); nl != std::string::npos) {
                const std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return json::parse(line);
            }
            char tmp[4096];
            const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
            if (n <= 0) throw std::runtime_error("connection closed");
            buf_.append(tmp, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_ = -1;
    std::string buf_;
};

}  // namespace

TEST(Session, Hello) {
    bridge::Session s(small_values(), ".", "t1");
    const auto out = s.handle(R"({"type":"hello"})");
    ASSERT_EQ(out.size(), 1u);
    const json j = json::parse(out[0]);
    EXPECT_EQ(j["type"], "hello");
    EXPECT_EQ(j["session"], "t1");
    EXPECT_EQ(j["agents"].size(), 12u);
    EXPECT_EQ(j["obs_width"], 100);
    EXPECT_EQ(j["num_actions"], 11);
}

TEST(Session, Errors) {
    bridge::Session s(small_values(), ".", "t2");
    auto reason = [&](const std::string& line) {
        const auto out = s.handle(line);
        EXPECT_EQ(out.size(), 1u);
        const json j = json::parse(out[0]);
        EXPECT_EQ(j["type"], "error");
        return j["reason"].get<std::string>();
    };
    EXPECT_EQ(reason("{nope").rfind("malformed line", 0), 0u);
    EXPECT_EQ(reason(R"({"type":"dance"})"), "unknown message type: dance");
    EXPECT_EQ(reason(R"({"type":"act","actions":{}})"), "no active episode: send reset first");
    s.handle(R"({"type":"reset"})");
    EXPECT_EQ(reason(R"({"type":"act","actions":{"0":0}})").rfind("incomplete joint action", 0), 0u);
    json bad = json::parse(all_zero_act(std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}));
    bad["actions"]["0"] = 10;
    EXPECT_NE(reason(bad.dump()).find("illegal action: agent 0"), std::string::npos);
    EXPECT_EQ(reason(R"({"type":"reset","config":{"lamda":1}})"), "unknown key: lamda");
    // The session survives every error.
    EXPECT_EQ(json::parse(s.handle(R"({"type":"hello"})")[0])["type"], "hello");
}

TEST(Session, AllLocalMatchesInProcess) {
    bridge::Session s(small_values(), ".", "t3");
    const json hello = json::parse(s.handle(R"({"type":"hello"})")[0]);
    const auto agents = hello["agents"].get<std::vector<NodeId>>();
    json obs = json::parse(s.handle(R"({"type":"reset","seed":9})")[0]);
    EXPECT_EQ(obs["type"], "obs");
    EXPECT_EQ(obs["time"], 0);
    json done;
    for (int step = 0; step < 40; ++step) {
        const auto out = s.handle(all_zero_act(agents));
        ASSERT_EQ(out.size(), 2u);
        EXPECT_EQ(json::parse(out[0])["type"], "reward");
        const json second = json::parse(out[1]);
        if (step < 39) EXPECT_EQ(second["type"], "obs");
        else done = second;
    }
    ASSERT_EQ(done["type"], "done");
    SimConfig c = config_from_values(small_values());
    c.seed = 9;
    const EpisodeMetrics m = run_baseline_episode(c, BaselineKind::local);
    EXPECT_EQ(done["metrics"], bridge::metrics_to_json(m));
}

TEST(Server, ConcurrentSessionsOverTcp) {
    bridge::Server server(small_values(), ".");
    const int port = server.start(0);
    ASSERT_GT(port, 0);
    Client a(port), b(port);
    a.send(R"({"type":"hello"})");
    b.send(R"({"type":"hello"})");
    const json ha = a.recv(), hb = b.recv();
    EXPECT_NE(ha["session"], hb["session"]);
    a.send("garbage");
    EXPECT_EQ(a.recv()["type"], "error");
    a.send(R"({"type":"reset","seed":2})");
    EXPECT_EQ(a.recv()["type"], "obs");
    const auto agents = ha["agents"].get<std::vector<NodeId>>();
    a.send(all_zero_act(agents));
    EXPECT_EQ(a.recv()["type"], "reward");
    EXPECT_EQ(a.recv()["type"], "obs");
    server.stop();
}
