#include "fluidity/nsp_remote.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "fluidity/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fluidity {

using nlohmann::json;

struct RemoteNspBackend::Endpoint {
  std::string scheme_host_port;
  std::string prefix;
};

namespace {

// Splits "http://host:port/prefix" into the origin and an optional path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  if (!url.starts_with("http://")) {
    throw ValidationError("remote NSP URL must start with http:// (got '" + url + "')");
  }
  auto path_start = url.find('/', 7);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

class InFlightSlot {
 public:
  explicit InFlightSlot(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~InFlightSlot() { sem_.release(); }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

}  // namespace

RemoteNspBackend::RemoteNspBackend(const NspBackendConfig& config)
    : NspBackend(config.threshold),
      endpoint_(std::make_unique<Endpoint>()),
      config_(config),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config.max_in_flight, 1, 1024))) {
  if (config.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  if (config.max_batch < 1) throw ValidationError("max_batch must be >= 1");
  if (config.max_retries < 0) throw ValidationError("max_retries must be >= 0");
  auto [origin, prefix] = split_url(config.location);
  endpoint_->scheme_host_port = origin;
  endpoint_->prefix = prefix;
}

RemoteNspBackend::~RemoteNspBackend() = default;

std::string RemoteNspBackend::describe() const { return "remote(" + config_.location + ")"; }

bool RemoteNspBackend::healthy() const {
  httplib::Client client(endpoint_->scheme_host_port);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  auto res = client.Get(endpoint_->prefix + "/v1/health");
  return res && res->status == 200;
}

std::vector<double> RemoteNspBackend::post_chunk(std::span<const NspPair> pairs) const {
  json body = {{"pairs", json::array()}};
  for (const NspPair& p : pairs) {
    body["pairs"].push_back({{"statement", p.statement}, {"response", p.response}});
  }
  const std::string payload = body.dump();
  const std::string path = endpoint_->prefix + "/v1/nsp";

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.retry_backoff * (1 << (attempt - 1)));
    }
    httplib::Result res = [&] {
      InFlightSlot slot(in_flight_);
      httplib::Client client(endpoint_->scheme_host_port);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      return client.Post(path, payload, "application/json");
    }();

    if (!res) {
      last_failure = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_failure = "server answered " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("NSP service answered " + std::to_string(res->status) + " for " +
                          std::to_string(pairs.size()) + " pairs");
    }

    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw ProtocolError(std::string("NSP service sent invalid JSON: ") + e.what());
    }
    auto results = reply.find("results");
    if (!reply.is_object() || results == reply.end() || !results->is_array()) {
      throw ProtocolError("NSP service reply lacks a results array");
    }
    if (results->size() != pairs.size()) {
      throw ProtocolError("NSP service returned " + std::to_string(results->size()) + " results for " +
                          std::to_string(pairs.size()) + " pairs");
    }
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const json& r : *results) {
      auto p = r.is_object() ? r.find("p_next") : r.end();
      if (!r.is_object() || p == r.end() || !p->is_number()) {
        throw ProtocolError("NSP service result lacks a numeric p_next");
      }
      double prob = p->get<double>();
      if (!std::isfinite(prob) || prob < 0.0 || prob > 1.0) {
        throw ProtocolError("NSP service returned p_next outside [0,1]");
      }
      out.push_back(prob);
    }
    return out;
  }
  throw TransportError("NSP service at " + config_.location + " unavailable after " +
                       std::to_string(config_.max_retries + 1) + " attempts (" + last_failure + ")");
}

NspResult RemoteNspBackend::score(std::string_view statement, std::string_view response) const {
  NspPair pair{std::string(statement), std::string(response)};
  return make_result(post_chunk(std::span<const NspPair>(&pair, 1)).front());
}

std::vector<NspResult> RemoteNspBackend::score_batch(std::span<const NspPair> pairs) const {
  std::vector<NspResult> out(pairs.size());
  if (pairs.empty()) return out;

  const std::size_t chunk = config_.max_batch;
  const std::size_t n_chunks = (pairs.size() + chunk - 1) / chunk;
  std::vector<std::exception_ptr> errors(n_chunks);
  std::mutex next_mutex;
  std::size_t next = 0;

  auto worker = [&] {
    for (;;) {
      std::size_t c;
      {
        std::lock_guard lock(next_mutex);
        if (next == n_chunks) return;
        c = next++;
      }
      const std::size_t begin = c * chunk;
      const std::size_t len = std::min(chunk, pairs.size() - begin);
      try {
        std::vector<double> probs = post_chunk(pairs.subspan(begin, len));
        for (std::size_t i = 0; i < len; ++i) out[begin + i] = make_result(probs[i]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  const std::size_t n_threads = std::min(n_chunks, std::max<std::size_t>(config_.max_in_flight, 1));
  std::vector<std::jthread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  threads.clear();

  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (!errors[c]) continue;
    try {
      std::rethrow_exception(errors[c]);
    } catch (const Error&) {
      rethrow_with_context("batch starting at index " + std::to_string(c * chunk) + ": ");
    }
  }
  return out;
}

}  // namespace fluidity
