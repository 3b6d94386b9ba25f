// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "critplan/critics.hpp"
#include "critplan/error.hpp"
#include "critplan/generation.hpp"

namespace critplan {

using json = nlohmann::json;

std::string http_post_json(const HttpEndpoint& endpoint, const std::string& body) {
  if (endpoint.base_url.empty()) fail(ErrorCode::kConfiguration, "HTTP endpoint has no base URL");
  httplib::Client client(endpoint.base_url);
  if (!client.is_valid()) {
    fail(ErrorCode::kConfiguration, "invalid endpoint URL '" + endpoint.base_url + "'");
  }
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

  auto res = client.Post(endpoint.path, headers, body, "application/json");
  if (!res) {
    throw BackendError("POST " + endpoint.base_url + endpoint.path + " failed: " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError("POST " + endpoint.base_url + endpoint.path + " returned HTTP " +
                       std::to_string(res->status));
  }
  return res->body;
}

namespace {

json parse_response(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw BackendError(what + ": malformed JSON response: " + e.what());
  }
}

}  // namespace

std::vector<std::string> HttpGenerator::sample(const std::string& prompt, std::size_t k,
                                               double temperature,
                                               std::optional<std::uint64_t> seed) const {
  json request = {{"prompt", prompt}, {"k", k}, {"temperature", temperature}};
  if (seed) request["seed"] = *seed;
  json response = parse_response(http_post_json(endpoint_, request.dump()), "generator");
  std::vector<std::string> candidates;
  try {
    candidates = response.at("candidates").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("generator: response lacks a candidates array: ") + e.what());
  }
  if (candidates.empty()) throw BackendError("generator returned no candidates");
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

std::string HttpGenerator::conclude(const std::string& prompt) const {
  auto candidates = sample(prompt, 1, 0.0, std::nullopt);
  return candidates.front();
}

double HttpCritic::score(const CriticContext& ctx) const {
  json context = json::array();
  for (const auto& obs : ctx.context_observations) {
    json o = {{"kind", to_string(obs.kind)}, {"text", obs.text}};
    if (obs.doc_id) o["doc_id"] = *obs.doc_id;
    context.push_back(std::move(o));
  }
  json candidate = {{"kind", to_string(ctx.candidate.kind)}, {"text", ctx.candidate.text}};
  if (ctx.candidate.doc_id) candidate["doc_id"] = *ctx.candidate.doc_id;
  json request = {{"kind", to_string(ctx.kind)},
                  {"problem", ctx.problem_statement},
                  {"context", std::move(context)},
                  {"candidate", std::move(candidate)}};
  json response = parse_response(http_post_json(endpoint_, request.dump()), "critic");
  try {
    return response.at("score").get<double>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("critic: response lacks a numeric score: ") + e.what());
  }
}

}  // namespace critplan
