#include "pdsim/service.hpp"

#include "pdsim/csv.hpp"
#include "pdsim/errors.hpp"

#include "httplib.h"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include <unistd.h>

namespace pdsim::service {

namespace {

using nlohmann::json;

constexpr std::size_t preview_rows = 10;

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::optional<long long> env_integer(const char* name)
{
    const char* v = std::getenv(name);
    if (v == nullptr) return std::nullopt;
    long long out = 0;
    const std::string_view s(v);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return out;
}

json matrix_rows(const Eigen::MatrixXd& m, Eigen::Index max_rows = -1)
{
    const Eigen::Index rows = max_rows < 0 ? m.rows() : std::min(m.rows(), max_rows);
    json out = json::array();
    for (Eigen::Index i = 0; i < rows; ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

json vector_json(const Eigen::VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Response json_response(int status, const json& body)
{
    return {status, "application/json", body.dump(2) + "\n"};
}

Response error_response(int status, const std::string& message, const json& locator)
{
    json body = {{"error", message}};
    body.update(locator);
    return json_response(status, body);
}

json parse_body(const std::string& body)
{
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed JSON: ") + e.what(), "body");
    }
}

// Maps the library's exception types onto HTTP status codes.
template <typename Fn>
Response guarded(Fn&& fn)
{
    try {
        return fn();
    } catch (const SchemaError& e) {
        return error_response(422, e.what(), {{"field", e.field()}});
    } catch (const InvalidInput& e) {
        return error_response(400, e.what(), {{"field", e.field()}});
    } catch (const NotFound& e) {
        return error_response(404, e.what(), {{"field", "token"}});
    } catch (const NumericalFailure& e) {
        json idx = e.time_index() ? json(*e.time_index()) : json(nullptr);
        return error_response(500, e.what(), {{"time_index", idx}});
    } catch (const NotPositiveDefinite& e) {
        return error_response(400, e.what(), {{"field", "params"}});
    } catch (const json::exception& e) {
        return error_response(422, e.what(), {{"field", "body"}});
    } catch (const std::exception& e) {
        return error_response(500, e.what(), {{"time_index", nullptr}});
    }
}

std::optional<FilterKind> filter_override(const json& doc)
{
    const auto it = doc.find("filter");
    if (it == doc.end()) return std::nullopt;
    if (!it->is_string()) throw SchemaError("filter must be a string", "filter");
    const auto f = parse_filter_kind(it->get<std::string>());
    if (!f) throw SchemaError("filter must be \"kf\", \"ekf\" or \"ukf\"", "filter");
    return f;
}

double optional_number(const json& doc, const char* key, double fallback)
{
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_number()) throw SchemaError(std::string(key) + " must be a number", key);
    return it->get<double>();
}

json estimate_json(const estimation::Estimate& e, const ModelSpec& spec)
{
    const auto& out = e.output;
    json filtered = matrix_rows(out.a_filt);
    json cov = json::array();
    for (const auto& p : out.P_filt) cov.push_back({p(0, 0), p(0, 1), p(1, 1)});
    return {{"model", std::string(to_string(spec.config.model_kind))},
            {"filter", std::string(to_string(e.filter))},
            {"level", e.level},
            {"n_obs", out.y_fit.rows()},
            {"m", out.y_fit.cols()},
            {"loglik", out.loglik},
            {"rmse", vector_json(e.rmse)},
            {"filtered_states", std::move(filtered)},
            {"filtered_state_cov", std::move(cov)},
            {"fitted_prices", matrix_rows(e.fitted_prices)},
            {"bands", {{"lower", matrix_rows(e.bands.lower)}, {"upper", matrix_rows(e.bands.upper)}}}};
}

} // namespace

ServiceConfig ServiceConfig::from_env()
{
    ServiceConfig c;
    if (const auto ttl = env_integer("PDSIM_TTL_SECS"); ttl && *ttl > 0)
        c.ttl = std::chrono::seconds(*ttl);
    if (const auto max_obs = env_integer("PDSIM_MAX_OBS"); max_obs && *max_obs >= 2 &&
                                                            *max_obs <= 100000000)
        c.max_obs = static_cast<int>(*max_obs);
    return c;
}

std::string default_address()
{
    const char* v = std::getenv("PDSIM_ADDR");
    return (v != nullptr && *v != '\0') ? std::string(v) : std::string("127.0.0.1:8080");
}

std::string new_token()
{
    static thread_local std::random_device device;
    std::string token;
    for (int word = 0; word < 4; ++word) {
        char buf[9];
        std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(device()));
        token += buf;
    }
    return token;
}

std::string SessionStore::insert(SessionRecord record)
{
    std::lock_guard lock(mu_);
    std::string token;
    do {
        token = new_token();
    } while (records_.contains(token));
    record.token = token;
    record.created_at = clock::now();
    records_.emplace(token, std::make_shared<const SessionRecord>(std::move(record)));
    return token;
}

std::shared_ptr<const SessionRecord> SessionStore::find(const std::string& token)
{
    std::lock_guard lock(mu_);
    const auto it = records_.find(token);
    if (it == records_.end()) return nullptr;
    if (clock::now() - it->second->created_at > ttl_) {
        records_.erase(it);
        return nullptr;
    }
    return it->second;
}

void SessionStore::attach_estimate(const std::string& token,
                                   std::shared_ptr<const estimation::Estimate> estimate)
{
    std::lock_guard lock(mu_);
    const auto it = records_.find(token);
    if (it == records_.end()) return;
    auto copy = std::make_shared<SessionRecord>(*it->second);
    copy->estimate = std::move(estimate);
    it->second = std::move(copy);
}

void SessionStore::evict_expired()
{
    std::lock_guard lock(mu_);
    const auto now = clock::now();
    std::erase_if(records_, [&](const auto& kv) { return now - kv.second->created_at > ttl_; });
}

std::size_t SessionStore::size() const
{
    std::lock_guard lock(mu_);
    return records_.size();
}

Service::Service(ServiceConfig config) : config_(config), sessions_(config.ttl) {}

Response Service::simulate(const std::string& body)
{
    return guarded([&] {
        sessions_.evict_expired();
        const json doc = parse_body(body);
        const ModelSpec spec = parse_model_spec(doc);
        const auto warnings = validate(spec);
        if (spec.config.n_obs > config_.max_obs)
            throw InvalidInput("n_obs exceeds the server limit of " +
                                   std::to_string(config_.max_obs),
                               "n_obs");

        SessionRecord record;
        record.spec = spec;
        record.params_echo = doc;
        record.panel = sim::simulate(spec.params, spec.errors, spec.config);
        const Eigen::MatrixXd& prices = record.panel.prices;
        const json preview = {
            {"prices", matrix_rows(prices, preview_rows)},
            {"maturities", matrix_rows(record.panel.maturities, preview_rows)}};
        const json summary = {{"min_price", prices.minCoeff()},
                              {"max_price", prices.maxCoeff()},
                              {"mean_price", prices.mean()}};
        const std::string token = sessions_.insert(std::move(record));

        return json_response(200, {{"token", token},
                                   {"spec", to_json(spec)},
                                   {"warnings", warnings},
                                   {"summary", summary},
                                   {"preview", preview}});
    });
}

Response Service::estimate(const std::string& body)
{
    return guarded([&] {
        const json doc = parse_body(body);
        if (!doc.is_object()) throw SchemaError("request body must be a JSON object", "body");
        const double level = optional_number(doc, "level", 0.95);
        const auto filter = filter_override(doc);

        std::shared_ptr<const SessionRecord> record;
        ModelSpec spec;
        sim::SimulatedPanel panel;
        std::vector<std::string> warnings;
        if (const auto it = doc.find("token"); it != doc.end()) {
            if (!it->is_string()) throw SchemaError("token must be a string", "token");
            record = sessions_.find(it->get<std::string>());
            if (!record) throw NotFound("unknown or expired token");
            spec = record->spec;
            if (filter) spec.config.filter_kind = *filter;
            warnings = validate(spec);
        } else {
            spec = parse_model_spec(doc);
            warnings = validate(spec);
            if (spec.config.n_obs > config_.max_obs)
                throw InvalidInput("n_obs exceeds the server limit of " +
                                       std::to_string(config_.max_obs),
                                   "n_obs");
            panel = sim::simulate(spec.params, spec.errors, spec.config);
        }
        const sim::SimulatedPanel& data = record ? record->panel : panel;

        auto est = std::make_shared<const estimation::Estimate>(
            estimation::estimate(spec.params, spec.errors, spec.config.filter_kind, data.prices,
                                 data.maturities, spec.config.dt, level));
        json out = estimate_json(*est, spec);
        out["warnings"] = warnings;
        if (record) {
            out["token"] = record->token;
            sessions_.attach_estimate(record->token, est);
        }
        return json_response(200, out);
    });
}

Response Service::coverage(const std::string& body, const diagnostics::ProgressFn& progress)
{
    return guarded([&] {
        const json doc = parse_body(body);
        const ModelSpec spec = parse_model_spec(doc);
        validate(spec);
        if (spec.config.n_obs > config_.max_obs)
            throw InvalidInput("n_obs exceeds the server limit of " +
                                   std::to_string(config_.max_obs),
                               "n_obs");
        const auto it = doc.find("n_traj");
        if (it == doc.end()) throw SchemaError("missing required field n_traj", "n_traj");
        if (!it->is_number_integer()) throw SchemaError("n_traj must be an integer", "n_traj");
        const auto n_traj = it->get<long long>();
        if (n_traj < 1) throw InvalidInput("n_traj must be >= 1", "n_traj");
        const double level = optional_number(doc, "level", 0.95);
        const double threshold = optional_number(doc, "threshold", 0.95);

        const auto report = diagnostics::coverage_rate(spec.params, spec.errors, spec.config,
                                                       static_cast<std::size_t>(n_traj), level,
                                                       threshold, progress);
        return Response{200, "application/json", diagnostics::to_json_text(report)};
    });
}

Response Service::export_csv(std::string_view what, const std::string& token)
{
    return guarded([&] {
        const auto record = sessions_.find(token);
        if (!record) throw NotFound("unknown or expired token");
        std::string body;
        if (what == "prices")
            body = csv::prices_csv(record->panel);
        else if (what == "maturities")
            body = csv::maturities_csv(record->panel);
        else if (what == "states")
            body = csv::states_csv(record->panel);
        else
            throw InvalidInput("unknown export " + std::string(what), "export");
        return Response{200, "text/csv; charset=utf-8", std::move(body)};
    });
}

Response Service::schema() const
{
    json doc = {
        {"spec", model_spec_schema()},
        {"endpoints",
         {{"POST /api/v1/simulate", "spec -> {token, spec, warnings, summary, preview}"},
          {"POST /api/v1/estimate",
           "{token, filter?, level?} or spec + level? -> filtered states, fitted prices, bands, "
           "loglik, rmse"},
          {"POST /api/v1/coverage",
           "spec + {n_traj, level?, threshold?} -> coverage report; ?stream=1 sends NDJSON "
           "progress lines before the report"},
          {"GET /api/v1/export/{prices|maturities|states}.csv?token=", "CSV download"},
          {"GET /api/v1/schema", "this document"}}}};
    return json_response(200, doc);
}

void Service::mount(httplib::Server& server)
{
    const auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };

    server.Post("/api/v1/simulate", [this, reply](const httplib::Request& req,
                                                  httplib::Response& res) {
        reply(res, simulate(req.body));
    });
    server.Post("/api/v1/estimate", [this, reply](const httplib::Request& req,
                                                  httplib::Response& res) {
        reply(res, estimate(req.body));
    });
    server.Post("/api/v1/coverage", [this, reply](const httplib::Request& req,
                                                  httplib::Response& res) {
        const bool stream = req.has_param("stream") && req.get_param_value("stream") != "0";
        if (!stream) {
            reply(res, coverage(req.body));
            return;
        }
        res.set_chunked_content_provider(
            "application/x-ndjson", [this, body = req.body](std::size_t, httplib::DataSink& sink) {
                const auto progress = [&sink](std::size_t done, std::size_t total) {
                    const std::string line =
                        json{{"completed", done}, {"total", total}}.dump() + "\n";
                    sink.write(line.data(), line.size());
                };
                const Response r = coverage(body, progress);
                json last = json::parse(r.body);
                const std::string line =
                    (r.status == 200 ? json{{"report", last}} : json{{"status", r.status}, {"error", last}})
                        .dump() + "\n";
                sink.write(line.data(), line.size());
                sink.done();
                return true;
            });
    });
    server.Get(R"(/api/v1/export/(prices|maturities|states)\.csv)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                   reply(res, export_csv(req.matches[1].str(), req.get_param_value("token")));
               });
    server.Get("/api/v1/schema", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, schema());
    });
}

HttpServer::HttpServer(Service& service) : server_(std::make_unique<httplib::Server>())
{
    // SO_REUSEADDR only: a second server on a taken port must fail to bind.
    server_->set_socket_options([this](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
                   sizeof(yes));
        socket_ = static_cast<int>(sock);
    });
    service.mount(*server_);
}

HttpServer::~HttpServer()
{
    // httplib only closes the listening socket of a server that ran.
    if (port_ > 0 && !started_.load() && socket_ >= 0) ::close(socket_);
}

bool HttpServer::bind(const std::string& host, int port)
{
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        return port_ > 0;
    }
    if (!server_->bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

void HttpServer::run()
{
    running_.store(true);
    if (!stop_requested_.load()) {
        started_.store(true);
        server_->listen_after_bind();
    }
    running_.store(false);
}

void HttpServer::stop()
{
    stop_requested_.store(true);
    // run() may not have reached the accept loop yet; httplib ignores stop()
    // until it has.
    while (running_.load() && !server_->is_running())
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    server_->stop();
}

std::optional<std::pair<std::string, int>> parse_address(const std::string& addr)
{
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) return std::nullopt;
    int port = 0;
    const char* first = addr.data() + colon + 1;
    const char* last = addr.data() + addr.size();
    const auto res = std::from_chars(first, last, port);
    if (res.ec != std::errc{} || res.ptr != last || port < 0 || port > 65535) return std::nullopt;
    return std::make_pair(addr.substr(0, colon), port);
}

} // namespace pdsim::service
