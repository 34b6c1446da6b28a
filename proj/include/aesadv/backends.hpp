#pragma once

// Model capabilities consumed by the generation pipeline. Code outside this
// module only sees these interfaces and never asks which implementation
// sits behind them.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aesadv {

using Vector = std::vector<double>;
using Tokens = std::vector<std::string>;

inline constexpr std::string_view kMaskToken = "<mask>";

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // One vector per text, all of the same dimension (>= 2).
  virtual std::vector<Vector> embed(std::span<const std::string> texts) const = 0;
};

struct InfillRequest {
  // Sentence tokens where [mask_start, mask_start + mask_len) hold kMaskToken.
  Tokens tokens;
  std::size_t mask_start = 0;
  std::size_t mask_len = 0;
  std::size_t max_new_tokens = 1;
  std::size_t num_candidates = 1;
  std::uint64_t seed = 0;
};

class InfillBackend {
 public:
  virtual ~InfillBackend() = default;
  // At most num_candidates fills, each no longer than max_new_tokens.
  virtual std::vector<Tokens> infill(const InfillRequest& request) const = 0;
};

class CmlmBackend {
 public:
  virtual ~CmlmBackend() = default;
  // Probability in (0, 1] of `candidate` at `masked_index` of `tokens` under
  // the model conditioned on `class_label`.
  virtual double token_prob(int class_label, std::span<const std::string> tokens, std::size_t masked_index,
                            std::string_view candidate) const = 0;
};

struct Backends {
  std::shared_ptr<const EmbeddingBackend> embedder;
  std::shared_ptr<const InfillBackend> infiller;
  std::shared_ptr<const CmlmBackend> cmlm;
};

// Checks a response against the capability contracts; throws ProtocolError.
void validate_embeddings(const std::vector<Vector>& vectors, std::size_t expected_count);
void validate_infill(const std::vector<Tokens>& candidates, const InfillRequest& request);
void validate_probability(double p);

}  // namespace aesadv
