#pragma once

// Client for model servers speaking the /v1 JSON protocol:
//   POST /v1/embed            {"texts"} -> {"dim", "vectors"}
//   POST /v1/infill           {"tokens", "mask_start", "mask_len",
//                              "max_new_tokens", "num_candidates", "seed"}
//                             -> {"candidates"}
//   POST /v1/cmlm_token_prob  {"class_label", "tokens", "masked_index",
//                              "candidate_token"} -> {"prob"}
// Errors come back as a non-200 status with {"error"}.

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "aesadv/backends.hpp"
#include "json.hpp"

namespace aesadv {

struct RemoteBackendConfig {
  std::string base_url = "http://127.0.0.1:8765";
  int timeout_ms = 30000;
  int max_retries = 3;
  int max_in_flight = 4;
  int backoff_ms = 100;  // first retry delay; doubles each attempt

  void validate() const;
};

class RemoteClient {
 public:
  explicit RemoteClient(RemoteBackendConfig config);

  // Posts `body` to `path`, retrying connection failures and 5xx/429
  // responses. Throws BackendUnavailable once retries run out and
  // ProtocolError for other statuses or unparseable bodies.
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  const RemoteBackendConfig& config() const { return config_; }
  std::uint64_t retries() const { return retries_.load(); }
  std::uint64_t requests() const { return requests_.load(); }

 private:
  RemoteBackendConfig config_;
  std::string host_;       // scheme://host:port
  std::string prefix_;     // optional path prefix
  mutable std::counting_semaphore<1024> in_flight_;
  mutable std::atomic<std::uint64_t> retries_{0};
  mutable std::atomic<std::uint64_t> requests_{0};
};

class RemoteEmbedder final : public EmbeddingBackend {
 public:
  explicit RemoteEmbedder(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}
  std::vector<Vector> embed(std::span<const std::string> texts) const override;

 private:
  std::shared_ptr<const RemoteClient> client_;
};

class RemoteInfiller final : public InfillBackend {
 public:
  explicit RemoteInfiller(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}
  std::vector<Tokens> infill(const InfillRequest& request) const override;

 private:
  std::shared_ptr<const RemoteClient> client_;
};

class RemoteCmlm final : public CmlmBackend {
 public:
  explicit RemoteCmlm(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}
  double token_prob(int class_label, std::span<const std::string> tokens, std::size_t masked_index,
                    std::string_view candidate) const override;

 private:
  std::shared_ptr<const RemoteClient> client_;
};

Backends make_remote_backends(std::shared_ptr<const RemoteClient> client);

}  // namespace aesadv
