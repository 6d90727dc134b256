#include "stoprag/pipeline_http.hpp"

#include <thread>

#include <httplib.h>

namespace stoprag {

HttpPipeline::HttpPipeline(const std::string& base_url)
    : client_(std::make_unique<httplib::Client>(base_url)) {
    client_->set_connection_timeout(10);
    client_->set_read_timeout(60);
}

HttpPipeline::~HttpPipeline() = default;

json HttpPipeline::post(const std::string& path, const json& body) {
    auto res = client_->Post(path, body.dump(), "application/json");
    if (!res) throw PipelineError("pipeline endpoint unreachable: " + path);
    if (res->status != 200)
        throw PipelineError("pipeline endpoint " + path + " returned status " + std::to_string(res->status));
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw PipelineError("pipeline endpoint " + path + " returned malformed JSON: " + e.what());
    }
}

std::string HttpPipeline::generate_query(const TraceState& state, std::uint64_t seed) {
    json body{{"state", to_json(state)}, {"seed", seed}};
    return post("/query", body).at("text").get<std::string>();
}

std::vector<Document> HttpPipeline::retrieve(const std::string& query, int k, std::uint64_t seed) {
    json body{{"query", query}, {"k", k}, {"seed", seed}};
    json res = post("/retrieve", body);
    std::vector<Document> docs;
    for (const auto& d : res.at("documents")) docs.push_back(document_from_json(d));
    return docs;
}

std::string HttpPipeline::generate_intermediate_answer(const std::string& query,
                                                       const std::vector<Document>& documents,
                                                       std::uint64_t seed) {
    json docs = json::array();
    for (const auto& d : documents) docs.push_back(to_json(d));
    json body{{"mode", "intermediate"}, {"query", query}, {"documents", docs}, {"seed", seed}};
    return post("/answer", body).at("text").get<std::string>();
}

std::string HttpPipeline::sample_answer(const TraceState& state, int trial, std::uint64_t seed) {
    json body{{"mode", "final"}, {"state", to_json(state)}, {"trial", trial}, {"seed", seed}};
    return post("/answer", body).at("text").get<std::string>();
}

struct PipelineServer::Impl {
    explicit Impl(PipelineInterface& b) : backend(b) {}
    PipelineInterface& backend;
    httplib::Server server;
    std::thread thread;
};

namespace {

void json_handler(httplib::Server& server, const std::string& path,
                  std::function<json(const json&)> fn) {
    server.Post(path, [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            json out = fn(json::parse(req.body));
            res.set_content(out.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });
}

}  // namespace

PipelineServer::PipelineServer(PipelineInterface& backend) : impl_(std::make_unique<Impl>(backend)) {
    json_handler(impl_->server, "/query", [this](const json& body) {
        TraceState state = trace_state_from_json(body.at("state"));
        return json{{"text", impl_->backend.generate_query(state, body.at("seed").get<std::uint64_t>())}};
    });
    json_handler(impl_->server, "/retrieve", [this](const json& body) {
        auto docs = impl_->backend.retrieve(body.at("query").get<std::string>(), body.at("k").get<int>(),
                                            body.at("seed").get<std::uint64_t>());
        json out = json::array();
        for (const auto& d : docs) out.push_back(to_json(d));
        return json{{"documents", out}};
    });
    json_handler(impl_->server, "/answer", [this](const json& body) {
        const std::string mode = body.at("mode").get<std::string>();
        if (mode == "intermediate") {
            std::vector<Document> docs;
            for (const auto& d : body.at("documents")) docs.push_back(document_from_json(d));
            return json{{"text", impl_->backend.generate_intermediate_answer(
                                     body.at("query").get<std::string>(), docs,
                                     body.at("seed").get<std::uint64_t>())}};
        }
        if (mode == "final") {
            TraceState state = trace_state_from_json(body.at("state"));
            return json{{"text", impl_->backend.sample_answer(state, body.at("trial").get<int>(),
                                                              body.at("seed").get<std::uint64_t>())}};
        }
        throw std::invalid_argument("unknown answer mode: " + mode);
    });
}

PipelineServer::~PipelineServer() { stop(); }

int PipelineServer::start() {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void PipelineServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

}  // namespace stoprag
