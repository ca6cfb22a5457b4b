#pragma once

#include <string>

#include "stancecred/experiment.hpp"

namespace stancecred {

struct ScoreRequest {
  std::string title;
  std::string text;
};

struct ScoreResponse {
  Label label = Label::REAL;
  double probability_fake = 0.0;
  double stance = 0.0;
  std::string model_version;

  std::string to_json() const;
};

/// A loaded artifact scoring one article at a time through the identical
/// clean -> stance -> encode -> predict path as training. Stateless per
/// request; safe to call concurrently.
class ScoringService {
 public:
  /// model_dir is a model artifact directory as written by run_experiment.
  ScoringService(const std::string& model_dir, const std::string& vectors_override = "",
                 const std::string& checkpoint_override = "", double threshold = 0.5);

  ScoreResponse score(const ScoreRequest& req) const;

  const std::string& model_version() const { return version_; }
  double threshold() const { return service_threshold_; }

 private:
  LoadedArtifact artifact_;
  std::string version_;
  double service_threshold_;
};

/// Blocking HTTP/1.1 JSON server: POST /v1/score, GET /healthz.
/// Returns once the server stops (failure to bind throws IoError).
void serve_http(const ScoringService& service, const std::string& host, int port,
                std::ostream* log = nullptr);

}  // namespace stancecred
