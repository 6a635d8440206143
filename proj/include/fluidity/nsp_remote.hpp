#pragma once

#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "fluidity/nsp.hpp"

namespace fluidity {

// HTTP/1.1 client for the scoring service:
//   POST {base}/v1/nsp   {"pairs": [{"statement", "response"}]} -> {"results": [{"p_next"}]}
//   GET  {base}/v1/health -> 200
// Connection failures and 5xx answers are retried with exponential backoff;
// other non-200 statuses and malformed bodies raise ProtocolError.
class RemoteNspBackend final : public NspBackend {
 public:
  explicit RemoteNspBackend(const NspBackendConfig& config);
  ~RemoteNspBackend() override;

  NspResult score(std::string_view statement, std::string_view response) const override;

  // Splits into requests of at most max_batch pairs and keeps up to
  // max_in_flight of them outstanding. Each request's results are mapped back
  // through its own chunk offset.
  std::vector<NspResult> score_batch(std::span<const NspPair> pairs) const override;

  std::string describe() const override;

  // True when GET /v1/health answers 200.
  bool healthy() const;

 private:
  std::vector<double> post_chunk(std::span<const NspPair> pairs) const;

  struct Endpoint;
  std::unique_ptr<Endpoint> endpoint_;
  NspBackendConfig config_;
  mutable std::counting_semaphore<1024> in_flight_;
};

}  // namespace fluidity
