#include "aesadv/backends.hpp"

#include <cmath>

#include "aesadv/error.hpp"

namespace aesadv {

void validate_embeddings(const std::vector<Vector>& vectors, std::size_t expected_count) {
  if (vectors.size() != expected_count) {
    throw ProtocolError("embedding response has " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(expected_count) + " texts");
  }
  if (vectors.empty()) return;
  const std::size_t dim = vectors.front().size();
  if (dim < 2) throw ProtocolError("embedding dimension must be >= 2");
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ProtocolError("embedding vectors differ in dimension");
    for (double x : v) {
      if (!std::isfinite(x)) throw ProtocolError("embedding contains a non-finite value");
    }
  }
}

void validate_infill(const std::vector<Tokens>& candidates, const InfillRequest& request) {
  if (candidates.size() > request.num_candidates) {
    throw ProtocolError("infill returned " + std::to_string(candidates.size()) + " candidates, asked for " +
                        std::to_string(request.num_candidates));
  }
  for (const auto& c : candidates) {
    if (c.size() > request.max_new_tokens) {
      throw ProtocolError("infill candidate of length " + std::to_string(c.size()) + " exceeds max_new_tokens " +
                          std::to_string(request.max_new_tokens));
    }
  }
}

void validate_probability(double p) {
  if (!std::isfinite(p) || p <= 0.0 || p > 1.0) {
    throw ProtocolError("probability " + std::to_string(p) + " outside (0, 1]");
  }
}

}  // namespace aesadv
