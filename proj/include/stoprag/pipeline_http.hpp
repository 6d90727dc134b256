#pragma once

#include <memory>
#include <string>

#include "stoprag/dataset.hpp"

namespace httplib {
class Server;
class Client;
}  // namespace httplib

namespace stoprag {

// Client adapter for a remote pipeline speaking the three-endpoint protocol:
//   POST /query    {state, seed}                          -> {text}
//   POST /retrieve {query, k, seed}                       -> {documents}
//   POST /answer   {mode, state|query+documents, trial, seed} -> {text}
// where `state` is the trace-state JSON fragment of the trajectory schema.
// Failures raise PipelineError; rollout handles retries.
class HttpPipeline : public PipelineInterface {
public:
    explicit HttpPipeline(const std::string& base_url);
    ~HttpPipeline() override;

    std::string generate_query(const TraceState& state, std::uint64_t seed) override;
    std::vector<Document> retrieve(const std::string& query, int k, std::uint64_t seed) override;
    std::string generate_intermediate_answer(const std::string& query,
                                             const std::vector<Document>& documents,
                                             std::uint64_t seed) override;
    std::string sample_answer(const TraceState& state, int trial, std::uint64_t seed) override;

private:
    json post(const std::string& path, const json& body);
    std::unique_ptr<httplib::Client> client_;
};

// Serves a local pipeline over the same protocol. Used by the tests to
// exercise the wire format end to end; also handy for bridging a pipeline
// into another process.
class PipelineServer {
public:
    explicit PipelineServer(PipelineInterface& backend);
    ~PipelineServer();

    // Binds to 127.0.0.1 on a free port and serves in a background thread.
    int start();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace stoprag
