#include "stancecred/serve.hpp"

#include <ostream>

#include <httplib.h>
#include <json.hpp>

#include "stancecred/errors.hpp"
#include "stancecred/http_server.hpp"

namespace stancecred {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxRequestBytes = 1 << 20;

std::string error_json(const std::string& message) {
  json j;
  j["error"] = message;
  return j.dump();
}

}  // namespace

std::string ScoreResponse::to_json() const {
  json j;
  j["label"] = to_string(label);
  j["probability_fake"] = probability_fake;
  j["stance"] = stance;
  j["model_version"] = model_version;
  return j.dump();
}

ScoringService::ScoringService(const std::string& model_dir,
                               const std::string& vectors_override,
                               const std::string& checkpoint_override, double threshold)
    : artifact_(load_artifact(model_dir, vectors_override, checkpoint_override)),
      service_threshold_(threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("threshold must be inside (0, 1)");
  version_ = stancecred::model_version(*artifact_.model);
}

ScoreResponse ScoringService::score(const ScoreRequest& req) const {
  if (req.title.size() + req.text.size() > kMaxRequestBytes)
    throw ValidationError("title plus text exceeds 1 MiB");

  Article article;
  article.title = clean_text(req.title);
  article.text = clean_text(req.text);
  if (article.title.empty() || article.text.empty())
    throw ValidationError("title and text must both contain text after cleaning");

  const FeatureRecord record = featurize_article(article, artifact_.bundle, false);
  const double p = artifact_.model->predict_proba({record}).front();

  ScoreResponse out;
  out.probability_fake = p;
  out.label = classify(p, service_threshold_);
  out.stance = record.stance;
  out.model_version = version_;
  return out;
}

struct HttpScoreServer::Impl {
  httplib::Server server;
  const ScoringService* service = nullptr;
  std::ostream* log = nullptr;
};

HttpScoreServer::HttpScoreServer(const ScoringService& service, std::ostream* log)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  impl_->log = log;

  impl_->server.set_payload_max_length(kMaxRequestBytes + 4096);

  impl_->server.Post("/v1/score", [this](const httplib::Request& req,
                                         httplib::Response& res) {
    res.set_header("Content-Type", "application/json");
    try {
      const json body = json::parse(req.body);
      if (!body.is_object() || !body.contains("title") || !body.contains("text") ||
          !body["title"].is_string() || !body["text"].is_string())
        throw ValidationError(
            "request body must be a JSON object with string fields 'title' and 'text'");
      ScoreRequest score_req;
      score_req.title = body["title"].get<std::string>();
      score_req.text = body["text"].get<std::string>();
      const ScoreResponse out = impl_->service->score(score_req);
      res.set_content(out.to_json(), "application/json");
    } catch (const json::exception& e) {
      res.status = 422;
      res.set_content(error_json("invalid JSON body: " + std::string(e.what())),
                      "application/json");
    } catch (const ValidationError& e) {
      res.status = 422;
      res.set_content(error_json(e.what()), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_json(e.what()), "application/json");
      if (impl_->log) *impl_->log << "scoring failed: " << e.what() << "\n";
    }
  });

  impl_->server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    json j;
    j["status"] = "ok";
    j["model_version"] = impl_->service->model_version();
    res.set_content(j.dump(), "application/json");
  });
}

HttpScoreServer::~HttpScoreServer() { stop(); }

int HttpScoreServer::bind_any_port(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port <= 0) throw IoError("failed to bind " + host);
  return port;
}

bool HttpScoreServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpScoreServer::listen(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port))
    throw IoError("failed to bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

void HttpScoreServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void serve_http(const ScoringService& service, const std::string& host, int port,
                std::ostream* log) {
  HttpScoreServer server(service, log);
  if (log)
    *log << "model " << service.model_version() << " listening on http://" << host << ":"
         << port << "\n";
  server.listen(host, port);
}

}  // namespace stancecred
