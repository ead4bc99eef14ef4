#include "xent/remote.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "xent/errors.hpp"

namespace xent {

using nlohmann::json;

class HttpChannel {
 public:
  explicit HttpChannel(const RemoteEndpoint& ep) : ep_(ep) {}

  json get(const std::string& path) const { return call(path, nullptr); }
  json post(const std::string& path, const json& body) const { return call(path, &body); }

 private:
  json call(const std::string& path, const json* body) const {
    const std::size_t attempts = ep_.retries + 1;
    std::string last;
    for (std::size_t a = 1; a <= attempts; ++a) {
      httplib::Client cli(ep_.host, ep_.port);
      const auto secs = static_cast<time_t>(ep_.timeout_s);
      const auto usecs = static_cast<time_t>((ep_.timeout_s - static_cast<double>(secs)) * 1e6);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      httplib::Result res = body ? cli.Post(path, body->dump(), "application/json") : cli.Get(path);
      if (!res) {
        last = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 503) {
        last = "service unavailable";
        continue;
      }
      json out = json::parse(res->body, nullptr, false);
      if (out.is_discarded()) throw TransportError(path + ": malformed response body", a);
      if (res->status == 501 || (out.is_object() && out.value("error", "") == "capability"))
        throw CapabilityError(path + ": " + out.value("detail", "capability not supported"));
      if (res->status == 400) throw InvalidArgument(path + ": " + out.value("detail", "rejected request"));
      if (res->status != 200) throw TransportError(path + ": HTTP " + std::to_string(res->status), a);
      return out;
    }
    throw TransportError(path + ": " + last, attempts);
  }

  RemoteEndpoint ep_;
};

namespace {

const json& field(const json& res, const char* path, const char* key) {
  if (!res.is_object() || !res.contains(key))
    throw TransportError(std::string(path) + ": response lacks '" + key + "'", 1);
  return res.at(key);
}

json ids(std::span<const TokenId> xs) { return json(std::vector<TokenId>(xs.begin(), xs.end())); }

}  // namespace

RemoteModel::RemoteModel(RemoteEndpoint endpoint, Vocab vocab)
    : endpoint_(std::move(endpoint)), vocab_(vocab), channel_(std::make_unique<HttpChannel>(endpoint_)) {
  const json v = channel_->get("/vocab");
  const std::string served = v.value("vocab_hash", "");
  if (served != vocab_.hash() || v.value("size", std::size_t{0}) != vocab_.size() ||
      v.value("pad_id", std::size_t{0}) != vocab_.pad_id())
    throw ConfigError("remote vocabulary " + served + " does not match local " + vocab_.hash());
}

RemoteModel::~RemoteModel() = default;

std::vector<double> RemoteModel::logprobs(std::span<const TokenId> context,
                                          std::span<const TokenId> continuation) const {
  json req = {{"model_id", endpoint_.model_id}, {"context_tokens", ids(context)},
              {"continuation_tokens", ids(continuation)}};
  const json res = channel_->post("/logprobs", req);
  if (res.value("vocab_hash", "") != vocab_.hash()) throw ConfigError("remote vocabulary hash changed");
  const json& lp = field(res, "/logprobs", "logprobs");
  if (!lp.is_array() || lp.size() != continuation.size())
    throw TransportError("/logprobs: expected " + std::to_string(continuation.size()) + " values", 1);
  std::vector<double> out;
  out.reserve(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (!lp[i].is_number()) throw TransportError("/logprobs: non-numeric value", 1);
    const double v = lp[i].get<double>();
    if (!std::isfinite(v)) throw TransportError("/logprobs: non-finite value", 1);
    out.push_back(continuation[i] == vocab_.pad_id() ? kPadLogProb : std::max(v, kPadLogProb));
  }
  return out;
}

TokenSeq RemoteModel::sample(std::span<const TokenId> context, std::size_t n, double temperature,
                             Rng& rng) const {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const std::uint64_t seed = rng.next_u64();
  if (n == 0) return {};
  json req = {{"model_id", endpoint_.model_id}, {"context_tokens", ids(context)},
              {"n", n}, {"temperature", temperature}, {"seed", seed}};
  const json res = channel_->post("/sample", req);
  if (res.value("vocab_hash", "") != vocab_.hash()) throw ConfigError("remote vocabulary hash changed");
  const json& tj = field(res, "/sample", "tokens");
  if (!tj.is_array()) throw TransportError("/sample: tokens must be a list", 1);
  TokenSeq toks;
  for (const json& t : tj) {
    if (!t.is_number_unsigned()) throw TransportError("/sample: invalid token id", 1);
    toks.push_back(t.get<TokenId>());
  }
  if (toks.size() != n) throw TransportError("/sample: expected " + std::to_string(n) + " tokens", 1);
  for (TokenId t : toks)
    if (t >= vocab_.size() || t == vocab_.pad_id()) throw TransportError("/sample: invalid token id", 1);
  return toks;
}

RemoteGenerator::RemoteGenerator(RemoteEndpoint endpoint)
    : channel_(std::make_unique<HttpChannel>(endpoint)) {}

RemoteGenerator::~RemoteGenerator() = default;

std::string RemoteGenerator::generate(const std::string& prompt, std::size_t max_tokens) const {
  const json res = channel_->post("/generate", {{"prompt_text", prompt}, {"max_tokens", max_tokens}});
  const json& text = field(res, "/generate", "text");
  if (!text.is_string()) throw TransportError("/generate: text must be a string", 1);
  return text.get<std::string>();
}

}  // namespace xent
