#pragma once

#include "pdsim/diagnostics.hpp"
#include "pdsim/estimation.hpp"
#include "pdsim/model_spec.hpp"
#include "pdsim/simulator.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace httplib {
class Server;
}

namespace pdsim::service {

struct ServiceConfig {
    std::chrono::seconds ttl{3600};
    int max_obs = 100000;

    /// Reads PDSIM_TTL_SECS and PDSIM_MAX_OBS, keeping defaults for unset
    /// or malformed values.
    static ServiceConfig from_env();
};

/// Bind address from PDSIM_ADDR, default 127.0.0.1:8080.
std::string default_address();

struct SessionRecord {
    std::string token;
    ModelSpec spec;
    nlohmann::json params_echo;
    sim::SimulatedPanel panel;
    std::shared_ptr<const estimation::Estimate> estimate;
    std::chrono::steady_clock::time_point created_at;
};

// In-memory session records keyed by token. Records are immutable; lookups
// hand out shared ownership so eviction never pulls a record out from under
// a response that is still being written.
class SessionStore {
public:
    explicit SessionStore(std::chrono::seconds ttl) : ttl_(ttl) {}

    /// Stores the record under a fresh 128-bit hex token and returns it.
    std::string insert(SessionRecord record);
    std::shared_ptr<const SessionRecord> find(const std::string& token);
    /// Replaces the record for `token` with a copy carrying `estimate`.
    void attach_estimate(const std::string& token,
                         std::shared_ptr<const estimation::Estimate> estimate);
    void evict_expired();
    std::size_t size() const;

private:
    using clock = std::chrono::steady_clock;

    std::chrono::seconds ttl_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::shared_ptr<const SessionRecord>> records_;
};

std::string new_token();

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

class Service {
public:
    explicit Service(ServiceConfig config = {});

    Response simulate(const std::string& body);
    Response estimate(const std::string& body);
    Response coverage(const std::string& body, const diagnostics::ProgressFn& progress = {});
    /// what is "prices", "maturities" or "states".
    Response export_csv(std::string_view what, const std::string& token);
    Response schema() const;

    /// Registers every /api/v1 route on `server`.
    void mount(httplib::Server& server);

    SessionStore& sessions() { return sessions_; }
    const ServiceConfig& config() const { return config_; }

private:
    ServiceConfig config_;
    SessionStore sessions_;
};

/// Serves until stop() is called from another thread or a signal handler's
/// watcher. Returns false if the address cannot be bound.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    bool bind(const std::string& host, int port);
    /// Port actually bound (useful when binding port 0).
    int port() const { return port_; }
    /// Blocks; in-flight requests finish before it returns.
    void run();
    /// Safe to call before, during or after run().
    void stop();

private:
    std::unique_ptr<httplib::Server> server_;
    int port_ = 0;
    int socket_ = -1;
    std::atomic<bool> started_{false};
    std::atomic<bool> running_{false};
    std::atomic<bool> stop_requested_{false};
};

/// Splits "host:port". Returns nullopt on malformed input.
std::optional<std::pair<std::string, int>> parse_address(const std::string& addr);

} // namespace pdsim::service
