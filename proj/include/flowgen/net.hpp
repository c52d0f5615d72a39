#pragma once

// HttpProvider implementation. Separate header so translation units that
// never talk to a live model don't pay for httplib.

#include <httplib.h>

#include "flowgen/pipeline.hpp"

namespace flowgen::pipeline {

inline HttpProvider::HttpProvider() {
  const char* ep = std::getenv(endpoint_env());
  if (!ep || !*ep)
    throw ProviderError(std::string("http provider needs ") + endpoint_env());
  endpoint_ = ep;
  if (const char* key = std::getenv(api_key_env())) api_key_ = key;
}

inline std::string HttpProvider::complete(const std::string& prompt, int) {
  // split "http://host[:port]/path"
  std::string rest = endpoint_;
  size_t scheme = rest.find("://");
  if (scheme != std::string::npos) rest = rest.substr(scheme + 3);
  size_t slash = rest.find('/');
  std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  std::string origin = endpoint_.substr(0, endpoint_.size() - path.size());
  if (slash == std::string::npos) origin = endpoint_;

  httplib::Client client(origin);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty())
    headers.emplace("Authorization", "Bearer " + api_key_);
  nlohmann::json body{{"prompt", prompt}, {"max_tokens", max_tokens_}};
  httplib::Result res =
      client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw ProviderError("http provider: transport error contacting " +
                        endpoint_);
  if (res->status != 200)
    throw ProviderError("http provider: status " +
                        std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("http provider: bad response body: ") +
                        e.what());
  }
}

}  // namespace flowgen::pipeline
