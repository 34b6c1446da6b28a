#include "aesadv/remote.hpp"

#include <cmath>
#include <thread>

#include "aesadv/error.hpp"
#include "httplib.h"

namespace aesadv {

void RemoteBackendConfig::validate() const {
  if (timeout_ms <= 0) throw ConfigError("remote timeout must be > 0 ms");
  if (max_in_flight < 1 || max_in_flight > 1024) throw ConfigError("remote max_in_flight must be in [1, 1024]");
  if (max_retries < 0) throw ConfigError("remote max_retries must be >= 0");
  if (backoff_ms < 0) throw ConfigError("remote backoff must be >= 0 ms");
  if (base_url.rfind("http://", 0) != 0) throw ConfigError("remote base_url must start with http://");
}

RemoteClient::RemoteClient(RemoteBackendConfig config)
    : config_(std::move(config)), in_flight_((config_.validate(), config_.max_in_flight)) {
  const auto host_start = config_.base_url.find("://") + 3;
  const auto slash = config_.base_url.find('/', host_start);
  host_ = config_.base_url.substr(0, slash);
  if (slash != std::string::npos) {
    prefix_ = config_.base_url.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
}

namespace {

struct SlotGuard {
  std::counting_semaphore<1024>& sem;
  explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

std::string error_message(const httplib::Result& res) {
  try {
    auto body = nlohmann::json::parse(res->body);
    if (body.contains("error")) return body["error"].get<std::string>();
  } catch (...) {
  }
  return res->body.substr(0, 200);
}

}  // namespace

nlohmann::json RemoteClient::post(const std::string& path, const nlohmann::json& body) const {
  const std::uint64_t request_id = requests_.fetch_add(1);
  const std::string payload = body.dump();
  const std::string full_path = prefix_ + path;
  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      retries_.fetch_add(1);
      const auto delay = static_cast<long long>(config_.backoff_ms) << std::min(attempt - 1, 16);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Result res;
    {
      SlotGuard slot(in_flight_);
      httplib::Client cli(host_);
      const auto secs = config_.timeout_ms / 1000;
      const auto usecs = (config_.timeout_ms % 1000) * 1000;
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      httplib::Headers headers{{"X-Request-Id", std::to_string(request_id)}};
      res = cli.Post(full_path, headers, payload, "application/json");
    }
    if (!res) {
      last_failure = "connection failure (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& ex) {
        throw ProtocolError(full_path + " returned unparseable JSON: " + ex.what());
      }
    }
    if (res->status >= 500 || res->status == 429) {
      last_failure = "HTTP " + std::to_string(res->status) + ": " + error_message(res);
      continue;
    }
    throw ProtocolError(full_path + " returned HTTP " + std::to_string(res->status) + ": " + error_message(res));
  }
  throw BackendUnavailable("POST " + host_ + full_path + " (request " + std::to_string(request_id) + ") failed after " +
                           std::to_string(config_.max_retries + 1) + " attempts: " + last_failure);
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> texts) const {
  const auto resp = client_->post("/v1/embed", {{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  std::vector<Vector> vectors;
  try {
    vectors = resp.at("vectors").get<std::vector<Vector>>();
    const auto dim = resp.at("dim").get<std::size_t>();
    for (const auto& v : vectors) {
      if (v.size() != dim) throw ProtocolError("embedding vector length disagrees with declared dim");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(std::string("malformed /v1/embed response: ") + ex.what());
  }
  validate_embeddings(vectors, texts.size());
  return vectors;
}

std::vector<Tokens> RemoteInfiller::infill(const InfillRequest& request) const {
  const nlohmann::json body = {{"tokens", request.tokens},
                               {"mask_start", request.mask_start},
                               {"mask_len", request.mask_len},
                               {"max_new_tokens", request.max_new_tokens},
                               {"num_candidates", request.num_candidates},
                               {"seed", request.seed}};
  const auto resp = client_->post("/v1/infill", body);
  std::vector<Tokens> candidates;
  try {
    candidates = resp.at("candidates").get<std::vector<Tokens>>();
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(std::string("malformed /v1/infill response: ") + ex.what());
  }
  validate_infill(candidates, request);
  return candidates;
}

double RemoteCmlm::token_prob(int class_label, std::span<const std::string> tokens, std::size_t masked_index,
                              std::string_view candidate) const {
  const nlohmann::json body = {{"class_label", class_label},
                               {"tokens", std::vector<std::string>(tokens.begin(), tokens.end())},
                               {"masked_index", masked_index},
                               {"candidate_token", std::string(candidate)}};
  const auto resp = client_->post("/v1/cmlm_token_prob", body);
  double p = 0.0;
  try {
    p = resp.at("prob").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(std::string("malformed /v1/cmlm_token_prob response: ") + ex.what());
  }
  validate_probability(p);
  return p;
}

Backends make_remote_backends(std::shared_ptr<const RemoteClient> client) {
  return Backends{std::make_shared<RemoteEmbedder>(client), std::make_shared<RemoteInfiller>(client),
                  std::make_shared<RemoteCmlm>(client)};
}

}  // namespace aesadv
