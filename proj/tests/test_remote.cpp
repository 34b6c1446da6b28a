#include <atomic>
#include <thread>

#include "aesadv/error.hpp"
#include "aesadv/perturbation.hpp"
#include "aesadv/remote.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace aesadv;
using nlohmann::json;

namespace {

// In-process stand-in for the model server. Handlers are scripted per test.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteBackendConfig config_for(const std::string& url) {
  RemoteBackendConfig c;
  c.base_url = url;
  c.timeout_ms = 2000;
  c.max_retries = 3;
  c.backoff_ms = 1;
  return c;
}

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

InfillRequest sample_request(std::size_t n) {
  InfillRequest r;
  r.tokens = {"the", std::string(kMaskToken), "sat"};
  r.mask_start = 1;
  r.mask_len = 1;
  r.max_new_tokens = 3;
  r.num_candidates = n;
  r.seed = 7;
  return r;
}

}  // namespace

TEST_CASE("remote: 503 then success is retried") {
  FakeServer fs;
  std::atomic<int> calls{0};
  fs.server().Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) return reply(res, {{"error", "warming up"}}, 503);
    const auto body = json::parse(req.body);
    json vectors = json::array();
    for (std::size_t i = 0; i < body.at("texts").size(); ++i) vectors.push_back({1.0, 2.0, 3.0});
    reply(res, {{"dim", 3}, {"vectors", vectors}});
  });
  auto client = std::make_shared<RemoteClient>(config_for(fs.url()));
  const RemoteEmbedder emb(client);
  const std::vector<std::string> texts = {"a b", "c"};
  const auto v = emb.embed(texts);
  CHECK(v.size() == 2);
  CHECK(v[1][2] == 3.0);
  CHECK(calls.load() == 2);
  CHECK(client->retries() == 1);
}

TEST_CASE("remote: infill request fields and candidate-count contract") {
  FakeServer fs;
  json seen;
  fs.server().Post("/v1/infill", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    const auto n = seen.at("num_candidates").get<std::size_t>();
    json cands = json::array();
    for (std::size_t i = 0; i < (n == 3 ? 5 : n); ++i) cands.push_back({"cat"});
    reply(res, {{"candidates", cands}});
  });
  const RemoteInfiller inf(std::make_shared<RemoteClient>(config_for(fs.url())));
  const auto ok = inf.infill(sample_request(2));
  CHECK(ok.size() == 2);
  CHECK(seen.at("mask_start") == 1);
  CHECK(seen.at("max_new_tokens") == 3);
  CHECK(seen.at("seed") == 7);
  CHECK(seen.at("tokens")[1] == kMaskToken);
  // 5 candidates for a request of 3.
  CHECK_THROWS_AS(inf.infill(sample_request(3)), ProtocolError);
}

TEST_CASE("remote: over-long infill candidate is a protocol error") {
  FakeServer fs;
  fs.server().Post("/v1/infill", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"candidates", {{"a", "b", "c", "d"}}}});
  });
  const RemoteInfiller inf(std::make_shared<RemoteClient>(config_for(fs.url())));
  CHECK_THROWS_AS(inf.infill(sample_request(1)), ProtocolError);
}

TEST_CASE("remote: probability outside (0, 1] is a protocol error") {
  FakeServer fs;
  double prob = 1.2;
  fs.server().Post("/v1/cmlm_token_prob", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    CHECK(body.at("class_label") == 2);
    CHECK(body.at("candidate_token") == "dog");
    reply(res, {{"prob", prob}});
  });
  const RemoteCmlm cmlm(std::make_shared<RemoteClient>(config_for(fs.url())));
  const std::vector<std::string> toks = {"the", std::string(kMaskToken)};
  CHECK_THROWS_AS(cmlm.token_prob(2, toks, 1, "dog"), ProtocolError);
  prob = 0.0;
  CHECK_THROWS_AS(cmlm.token_prob(2, toks, 1, "dog"), ProtocolError);
  prob = 0.25;
  CHECK(cmlm.token_prob(2, toks, 1, "dog") == 0.25);
}

TEST_CASE("remote: malformed bodies and client errors") {
  FakeServer fs;
  fs.server().Post("/v1/embed", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content("not json", "application/json");
  });
  fs.server().Post("/v1/cmlm_token_prob", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"error", "bad class"}}, 400);
  });
  fs.server().Post("/v1/infill", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"candidatez", json::array()}});
  });
  auto client = std::make_shared<RemoteClient>(config_for(fs.url()));
  const std::vector<std::string> texts = {"x"};
  CHECK_THROWS_AS(RemoteEmbedder(client).embed(texts), ProtocolError);
  const std::vector<std::string> toks = {std::string(kMaskToken)};
  try {
    RemoteCmlm(client).token_prob(9, toks, 0, "a");
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("bad class") != std::string::npos);
  }
  CHECK_THROWS_AS(RemoteInfiller(client).infill(sample_request(1)), ProtocolError);
}

TEST_CASE("remote: embedding dimension disagreement") {
  FakeServer fs;
  fs.server().Post("/v1/embed", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"dim", 3}, {"vectors", {{1.0, 2.0}}}});
  });
  const std::vector<std::string> texts = {"x"};
  CHECK_THROWS_AS(RemoteEmbedder(std::make_shared<RemoteClient>(config_for(fs.url()))).embed(texts), ProtocolError);
}

TEST_CASE("remote: persistent 5xx exhausts retries") {
  FakeServer fs;
  std::atomic<int> calls{0};
  fs.server().Post("/v1/embed", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "down"}}, 500);
  });
  auto cfg = config_for(fs.url());
  cfg.max_retries = 2;
  const std::vector<std::string> texts = {"x"};
  CHECK_THROWS_AS(RemoteEmbedder(std::make_shared<RemoteClient>(cfg)).embed(texts), BackendUnavailable);
  CHECK(calls.load() == 3);
}

TEST_CASE("remote: connection refused is backend-unavailable") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto cfg = config_for("http://127.0.0.1:" + std::to_string(port));
  cfg.max_retries = 1;
  const std::vector<std::string> texts = {"x"};
  try {
    RemoteEmbedder(std::make_shared<RemoteClient>(cfg)).embed(texts);
    FAIL("expected BackendUnavailable");
  } catch (const BackendUnavailable& e) {
    CHECK(e.exit_code() == ExitCode::kBackend);
    CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
  }
}

TEST_CASE("remote: config validation") {
  RemoteBackendConfig c;
  c.base_url = "https://x";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RemoteBackendConfig{};
  c.max_in_flight = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RemoteBackendConfig{};
  c.timeout_ms = 0;
  CHECK_THROWS_AS(RemoteClient{c}, ConfigError);
}

TEST_CASE("remote: path prefix in the base url") {
  FakeServer fs;
  fs.server().Post("/api/v1/cmlm_token_prob", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"prob", 0.5}});
  });
  const RemoteCmlm cmlm(std::make_shared<RemoteClient>(config_for(fs.url() + "/api/")));
  const std::vector<std::string> toks = {std::string(kMaskToken)};
  CHECK(cmlm.token_prob(1, toks, 0, "a") == 0.5);
}
