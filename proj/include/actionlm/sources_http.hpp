#pragma once

// HTTP-backed DataSource. Kept out of sources.hpp so only the CLI and the
// network tests compile httplib. Define ACTIONLM_ENABLE_TLS (and link
// OpenSSL) to reach https:// sources.

#ifdef ACTIONLM_ENABLE_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "actionlm/sources.hpp"

namespace actionlm::ingest {

class HttpSource : public DataSource {
 public:
  explicit HttpSource(std::string base_url) : base_url_(std::move(base_url)) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    std::size_t scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("not a URL: " + base_url_);
    std::size_t host_start = scheme_end + 3;
    std::size_t path_start = base_url_.find('/', host_start);
    origin_ = path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : base_url_.substr(path_start);
#ifndef ACTIONLM_ENABLE_TLS
    if (base_url_.rfind("https://", 0) == 0)
      throw NetworkError("built without TLS support; cannot reach " + base_url_);
#endif
  }

  std::string get(const std::string& rel_path) override {
    ++requests_;
    httplib::Client client(origin_);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);
    client.set_follow_location(true);
    auto res = client.Get(base_path_ + "/" + rel_path);
    if (!res) throw NetworkError("request failed for " + origin_ + base_path_ + "/" + rel_path);
    if (res->status == 404) throw NotFoundError("not found: " + base_url_ + "/" + rel_path);
    if (res->status != 200)
      throw NetworkError("HTTP " + std::to_string(res->status) + " for " + base_url_ + "/" + rel_path);
    return res->body;
  }

  std::string describe() const override { return base_url_; }
  long request_count() const override { return requests_; }

 private:
  std::string base_url_;
  std::string origin_;
  std::string base_path_;
  long requests_ = 0;
};

inline std::unique_ptr<DataSource> make_http_source(const std::string& base_url) {
  return std::make_unique<HttpSource>(base_url);
}

inline std::unique_ptr<DataSource> make_source(const std::string& locator) {
  if (is_url(locator)) return make_http_source(locator);
  if (!fs::exists(locator)) throw NetworkError("data source unreachable: " + locator);
  return std::make_unique<LocalSource>(locator);
}

}  // namespace actionlm::ingest
