#pragma once

// HTTP/JSON front end over SessionStore. Handlers share immutable graphs and
// segments; only the store itself takes a lock.

#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

// Bursts of concurrent clients overflow httplib's default backlog of 5 while
// workers are busy.
#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#endif
#include <httplib.h>

#include "provq/gen.hpp"
#include "provq/graph_io.hpp"
#include "provq/session.hpp"

namespace provq {

/// Canonical text of a JSON artifact. The CLI and the HTTP service both emit
/// documents through this so their bytes agree.
inline std::string artifact_text(const Json& j) { return j.dump(2) + "\n"; }

class NotFound : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline std::optional<std::size_t> env_size(const char* name)
{
    const char* s = std::getenv(name);
    if (!s || !*s)
        return std::nullopt;
    char* end = nullptr;
    const auto v = std::strtoull(s, &end, 10);
    if (*end != '\0')
        throw DataError(std::string(name) + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

/// Segmentation defaults: PROVQ_FACT_BUDGET sets the fact budget.
inline SegOptions default_seg_options()
{
    SegOptions o;
    if (auto b = env_size("PROVQ_FACT_BUDGET"))
        o.fact_budget = *b;
    return o;
}

/// HTTP status and {code, message} body for the active exception.
inline std::pair<int, Json> error_response(std::exception_ptr ep)
{
    auto body = [](int status, const std::string& msg) {
        return std::pair{status, Json{{"code", status}, {"message", msg}}};
    };
    try {
        std::rethrow_exception(ep);
    } catch (const NotFound& e) {
        return body(404, e.what());
    } catch (const StaleSegment& e) {
        return body(409, e.what());
    } catch (const BudgetExceeded& e) {
        return body(507, e.what());
    } catch (const QueryError& e) {
        return body(422, e.what());
    } catch (const DataError& e) {
        return body(400, e.what());
    } catch (const Json::exception& e) {
        return body(400, std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
        return body(500, e.what());
    } catch (...) {
        return body(500, "unknown error");
    }
}

struct ServiceConfig
{
    std::size_t capacity = 64;
    SegOptions defaults = default_seg_options();
};

class Service
{
public:
    explicit Service(ServiceConfig cfg = {}) : cfg_(std::move(cfg)), store_(cfg_.capacity) { routes(); }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    SessionStore& store() noexcept { return store_; }
    httplib::Server& server() noexcept { return http_; }

    /// Binds to an ephemeral port and returns it (-1 on failure).
    int bind_any(const std::string& host = "127.0.0.1") { return http_.bind_to_any_port(host); }
    bool bind(const std::string& host, int port) { return http_.bind_to_port(host, port); }
    /// Blocks until stop().
    bool listen_after_bind() { return http_.listen_after_bind(); }
    void wait_until_ready() { http_.wait_until_ready(); }
    void stop() { http_.stop(); }

private:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    static void send(httplib::Response& res, int status, const std::string& body,
                     const char* type = "application/json")
    {
        res.status = status;
        res.set_content(body, type);
    }

    static Json parse_body(const httplib::Request& req)
    {
        auto j = Json::parse(req.body, nullptr, false);
        if (j.is_discarded())
            throw DataError("request body is not valid JSON");
        return j;
    }

    Handler guarded(Handler h)
    {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (...) {
                auto [status, body] = error_response(std::current_exception());
                send(res, status, artifact_text(body));
            }
        };
    }

    std::shared_ptr<const ProvGraph> graph_or_404(const std::string& id)
    {
        auto g = store_.graph(id);
        if (!g)
            throw NotFound("unknown graph '" + id + "'");
        return g;
    }

    std::shared_ptr<const SegmentSession> segment_or_404(const std::string& id)
    {
        auto s = store_.segment(id);
        if (!s)
            throw NotFound("unknown segment '" + id + "'");
        return s;
    }

    std::pair<std::shared_ptr<const SegmentSession>, std::shared_ptr<const ProvGraph>>
    live_segment(const std::string& id)
    {
        auto sg = store_.segment_with_graph(id);
        if (!sg.first)
            throw NotFound("unknown segment '" + id + "'");
        return sg;
    }

    Json segment_created(const std::string& graph_id, Segment s)
    {
        Json seg = to_json(s);
        const auto id = store_.add_segment(graph_id, std::move(s));
        return Json{{"segmentId", id}, {"segment", std::move(seg)}};
    }

    void routes()
    {
        // Queries can queue behind slow ones on small machines; keep sockets open.
        http_.set_read_timeout(300, 0);
        http_.set_write_timeout(300, 0);
        http_.set_keep_alive_timeout(30);
        http_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        http_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        http_.Post("/graphs", guarded([this](const auto& req, auto& res) {
            auto g = from_json(parse_body(req));
            send(res, 201, artifact_text(Json{{"graphId", store_.add_graph(std::move(g))}}));
        }));

        http_.Post("/graphs/generate", guarded([this](const auto& req, auto& res) {
            const auto j = parse_body(req);
            if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
                throw DataError("generate: 'type' must be \"synpg\" or \"synsg\"");
            const auto type = j["type"].template get<std::string>();
            if (type == "synpg") {
                auto g = synpg(synpg_config_from_json(j));
                send(res, 201, artifact_text(Json{{"graphId", store_.add_graph(std::move(g))}}));
            } else if (type == "synsg") {
                Json ids = Json::array();
                for (auto& g : synsg(synsg_config_from_json(j)))
                    ids.push_back(store_.add_graph(std::move(g)));
                send(res, 201, artifact_text(Json{{"graphIds", std::move(ids)}}));
            } else {
                throw DataError("generate: unknown type '" + type + "'");
            }
        }));

        http_.Get("/graphs/:id", guarded([this](const auto& req, auto& res) {
            send(res, 200, artifact_text(to_json(*graph_or_404(req.path_params.at("id")))));
        }));

        http_.Get("/graphs/:id/dot", guarded([this](const auto& req, auto& res) {
            send(res, 200, to_dot(*graph_or_404(req.path_params.at("id"))), "text/vnd.graphviz");
        }));

        http_.Post("/graphs/:id/segments", guarded([this](const auto& req, auto& res) {
            const auto& gid = req.path_params.at("id");
            auto g = graph_or_404(gid);
            const auto q = seg_query_from_json(parse_body(req), cfg_.defaults);
            send(res, 201, artifact_text(segment_created(gid, segment(*g, q))));
        }));

        http_.Post("/segments/:id/adjust", guarded([this](const auto& req, auto& res) {
            auto [s, g] = live_segment(req.path_params.at("id"));
            const auto b = boundary_from_json(parse_body(req));
            send(res, 201, artifact_text(segment_created(s->graph_id, adjust(*g, s->segment, b))));
        }));

        http_.Get("/segments/:id", guarded([this](const auto& req, auto& res) {
            send(res, 200, artifact_text(to_json(segment_or_404(req.path_params.at("id"))->segment)));
        }));

        http_.Get("/segments/:id/dot", guarded([this](const auto& req, auto& res) {
            auto [s, g] = live_segment(req.path_params.at("id"));
            send(res, 200, to_dot(*g, s->segment), "text/vnd.graphviz");
        }));

        http_.Post("/summaries", guarded([this](const auto& req, auto& res) {
            const auto j = parse_body(req);
            if (!j.is_object() || !j.contains("segmentIds") || !j["segmentIds"].is_array())
                throw DataError("summary request needs a 'segmentIds' array");
            SumOptions opt;
            if (j.contains("k")) {
                if (!j["k"].is_number_unsigned())
                    throw DataError("k must be a non-negative integer");
                opt.k = j["k"].template get<std::size_t>();
            }
            if (j.contains("isoCap")) {
                if (!j["isoCap"].is_number_unsigned())
                    throw DataError("isoCap must be a non-negative integer");
                opt.iso_cap = j["isoCap"].template get<std::size_t>();
            }
            const auto pagg = j.contains("pagg") ? pagg_from_json(j["pagg"]) : Pagg{};
            SummarySession ss;
            std::vector<SegmentGraph> segs;
            for (const auto& x : j["segmentIds"]) {
                if (!x.is_string())
                    throw DataError("segmentIds must be strings");
                auto id = x.template get<std::string>();
                // A graph id stands for the whole graph taken as one segment.
                if (!id.empty() && id[0] == 'g') {
                    segs.push_back(as_segment(*graph_or_404(id)));
                } else {
                    auto [s, g] = live_segment(id);
                    segs.push_back(materialize(*g, s->segment));
                }
                ss.segment_ids.push_back(std::move(id));
            }
            ss.summary = summarize(segs, pagg, opt);
            ss.document = to_json(ss.summary, &segs);
            Json doc = ss.document;
            const auto id = store_.add_summary(std::move(ss));
            send(res, 201, artifact_text(Json{{"summaryId", id}, {"summary", std::move(doc)}}));
        }));

        http_.Get("/summaries/:id", guarded([this](const auto& req, auto& res) {
            const auto& id = req.path_params.at("id");
            auto s = store_.summary(id);
            if (!s)
                throw NotFound("unknown summary '" + id + "'");
            send(res, 200, artifact_text(s->document));
        }));

        http_.Get("/summaries/:id/dot", guarded([this](const auto& req, auto& res) {
            const auto& id = req.path_params.at("id");
            auto s = store_.summary(id);
            if (!s)
                throw NotFound("unknown summary '" + id + "'");
            send(res, 200, to_dot(s->summary), "text/vnd.graphviz");
        }));

        http_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.status == 404 && res.body.empty())
                send(res, 404, artifact_text(Json{{"code", 404}, {"message", "no such route"}}));
        });
    }

    ServiceConfig cfg_;
    SessionStore store_;
    httplib::Server http_;
};

} // namespace provq
