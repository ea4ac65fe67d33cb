#include "mathpii/review_service.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <httplib.h>

#include <charconv>
#include <thread>

namespace mathpii {

namespace {

constexpr const char* kStubPage = R"(<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>mathpii review</title></head>
<body>
<h1>mathpii review service</h1>
<p>No UI bundle is installed. Start the service with <code>--static-dir</code> pointing at the built review UI.</p>
<p>API: <a href="/api/stats">/api/stats</a>, <a href="/api/items">/api/items</a></p>
</body>
</html>
)";

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

std::optional<std::size_t> parse_size(const std::string& s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<int> parse_int(const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

void send_write(httplib::Response& res, const WriteResult& r) {
    switch (r.outcome) {
        case WriteOutcome::Ok: send_json(res, 200, to_json(*r.item)); return;
        case WriteOutcome::NotFound: send_error(res, 404, r.message); return;
        case WriteOutcome::Conflict: send_error(res, 409, r.message); return;
        case WriteOutcome::Invalid: send_error(res, 400, r.message); return;
    }
}

}  // namespace

struct ReviewServer::Impl {
    AnnotationStore& store;
    ReviewServiceOptions options;
    httplib::Server server;
    std::thread thread;
    int port = -1;

    Impl(AnnotationStore& s, ReviewServiceOptions o) : store(s), options(std::move(o)) { routes(); }

    void routes() {
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (!options.token.empty() && req.path.rfind("/api/", 0) == 0 &&
                req.get_header_value("X-Review-Token") != options.token) {
                send_error(res, 401, "missing or invalid X-Review-Token");
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            } catch (...) {
                send_error(res, 500, "internal error");
            }
        });

        server.Get("/api/items", [this](const httplib::Request& req, httplib::Response& res) {
            ItemFilter filter;
            std::size_t page = 1, page_size = 50;
            try {
                if (req.has_param("status") && !req.get_param_value("status").empty())
                    filter.status = parse_item_status(req.get_param_value("status"));
                if (req.has_param("type") && !req.get_param_value("type").empty())
                    filter.type = parse_pii_type(req.get_param_value("type"));
            } catch (const std::exception& e) {
                return send_error(res, 400, e.what());
            }
            auto numeric = [&](const char* key, auto parse, auto& target) {
                if (!req.has_param(key) || req.get_param_value(key).empty()) return true;
                auto v = parse(req.get_param_value(key));
                if (!v) return false;
                target = *v;
                return true;
            };
            int iteration = 0;
            if (req.has_param("iteration") && !req.get_param_value("iteration").empty()) {
                if (!numeric("iteration", parse_int, iteration)) return send_error(res, 400, "bad iteration");
                filter.iteration = iteration;
            }
            if (!numeric("page", parse_size, page) || page == 0) return send_error(res, 400, "bad page");
            if (!numeric("page_size", parse_size, page_size) || page_size == 0)
                return send_error(res, 400, "bad page_size");
            const auto p = store.list(filter, page, page_size);
            nlohmann::ordered_json items = nlohmann::ordered_json::array();
            for (const auto& item : p.items) items.push_back(to_json(item));
            send_json(res, 200,
                      {{"items", items}, {"total", p.total}, {"page", p.page}, {"page_size", p.page_size}});
        });

        server.Post(R"(/api/items/(.+)/vote)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("reviewer_id") ||
                !body["reviewer_id"].is_string() || !body.contains("direction") || !body["direction"].is_string())
                return send_error(res, 400, "body must be {reviewer_id, direction, note?}");
            VoteDirection dir;
            try {
                dir = parse_vote_direction(body["direction"].get<std::string>());
            } catch (const std::exception& e) {
                return send_error(res, 400, e.what());
            }
            std::optional<std::string> note;
            if (body.contains("note") && !body["note"].is_null()) {
                if (!body["note"].is_string()) return send_error(res, 400, "note must be a string");
                note = body["note"].get<std::string>();
            }
            send_write(res, store.vote(req.matches[1], body["reviewer_id"].get<std::string>(), dir, note));
        });

        server.Post(R"(/api/items/(.+)/override)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("evaluation") ||
                !body["evaluation"].is_string())
                return send_error(res, 400, "body must be {evaluation, surrogate?}");
            const auto verdict = try_parse_verdict(body["evaluation"].get<std::string>());
            if (!verdict) return send_error(res, 400, "unknown evaluation");
            std::optional<std::string> surrogate, reviewer;
            if (body.contains("surrogate") && !body["surrogate"].is_null()) {
                if (!body["surrogate"].is_string()) return send_error(res, 400, "surrogate must be a string");
                surrogate = body["surrogate"].get<std::string>();
            }
            if (body.contains("reviewer_id") && body["reviewer_id"].is_string())
                reviewer = body["reviewer_id"].get<std::string>();
            send_write(res, store.override_item(req.matches[1], *verdict, surrogate, reviewer));
        });

        server.Get(R"(/api/items/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto item = store.get(req.matches[1]);
            if (!item) return send_error(res, 404, "unknown item " + std::string(req.matches[1]));
            send_json(res, 200, to_json(*item));
        });

        server.Get(R"(/api/iterations/(-?\d+)/resolution)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto k = parse_int(req.matches[1]);
            if (!k || *k < 1) return send_error(res, 400, "iteration must be a positive integer");
            const auto r = store.resolution(*k);
            send_json(res, 200,
                      {{"iteration", *k},
                       {"previous", r.previous},
                       {"resolved", r.resolved},
                       {"rate", r.rate},
                       {"stop", r.stop},
                       {"threshold", kStopResolutionRate}});
        });

        server.Post(R"(/api/iterations/(-?\d+)/close)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto k = parse_int(req.matches[1]);
            if (!k || *k < 1) return send_error(res, 400, "iteration must be a positive integer");
            const auto s = store.close_iteration(*k);
            send_json(res, 200,
                      {{"iteration", s.iteration}, {"approved", s.approved}, {"rejected", s.rejected},
                       {"pending", s.pending}});
        });

        server.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, store.stats());
        });

        if (!options.static_dir.empty()) {
            if (!server.set_mount_point("/", options.static_dir.string()))
                throw IoError("static directory '" + options.static_dir.string() + "' does not exist");
        } else {
            server.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content(kStubPage, "text/html; charset=utf-8");
            });
        }
    }
};

ReviewServer::ReviewServer(AnnotationStore& store, ReviewServiceOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
    if (impl_->options.port == 0)
        impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
    else
        impl_->port = impl_->server.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
    if (impl_->port < 0)
        throw IoError("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    return impl_->port;
}

void ReviewServer::serve() { impl_->server.listen_after_bind(); }

int ReviewServer::start_background() {
    const int port = bind();
    impl_->thread = std::thread([this] { serve(); });
    impl_->server.wait_until_ready();
    return port;
}

void ReviewServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mathpii
