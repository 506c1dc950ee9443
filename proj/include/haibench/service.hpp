#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "haibench/config.hpp"
#include "haibench/events.hpp"
#include "haibench/sim.hpp"

namespace haibench::harness {

struct ServiceResponse {
    int status = 200;
    Json body = Json::object();
};

// Live sessions for human participants. Transport-free so it can be driven
// directly; HttpFrontend maps HTTP requests onto handle().
//
// Server-owned events (stimulus, advice, system_response, feedback) are
// stamped with the service clock. Clients may only post operator actions,
// whose timestamps must lie within the configured tolerance of receipt time.
class SessionService {
public:
    using Clock = std::function<Millis()>;  // milliseconds, monotonic

    SessionService(BenchmarkConfig config, std::filesystem::path out_dir, Clock clock = {});
    ~SessionService();

    ServiceResponse create_session(const Json& body);
    ServiceResponse get_trial(const std::string& id, std::int64_t n);
    ServiceResponse post_events(const std::string& id, const Json& body);
    ServiceResponse post_questionnaire(const std::string& id, const Json& body);
    ServiceResponse complete(const std::string& id);

    // Routes "METHOD /path" with a raw request body.
    ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

    const BenchmarkConfig& config() const { return config_; }

private:
    struct Live;
    std::shared_ptr<Live> find(const std::string& id);

    BenchmarkConfig config_;
    std::filesystem::path out_dir_;
    Clock clock_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Live>> sessions_;
    std::uint64_t created_ = 0;
};

ServiceResponse error_response(int status, const std::string& message);

class HttpFrontend {
public:
    explicit HttpFrontend(SessionService& service);
    ~HttpFrontend();

    // Returns the bound port (port 0 picks a free one). Throws on failure.
    int bind(const std::string& host, int port);
    void listen();  // blocks until stop()
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace haibench::harness
