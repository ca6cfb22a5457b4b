#include "stancecred/stance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "stancecred/csv.hpp"
#include "stancecred/encode.hpp"
#include "stancecred/errors.hpp"

namespace stancecred {

std::optional<double> cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw DimensionError("cosine_similarity: dimension mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  const double value = a.dot(b) / (na * nb);
  return std::clamp(value, -1.0, 1.0);
}

StanceScore compute_stance(const std::string& clean_title, const std::string& clean_body,
                           const TextEncoder& encoder) {
  if (clean_title.empty() || clean_body.empty()) return {0.0, true};
  Eigen::MatrixXf title_vecs = encoder.encode_tokens(clean_title);
  Eigen::MatrixXf body_vecs = encoder.encode_tokens(clean_body);
  if (title_vecs.rows() == 0 || body_vecs.rows() == 0) return {0.0, true};

  std::vector<int> title_mask(static_cast<std::size_t>(title_vecs.rows()), 1);
  std::vector<int> body_mask(static_cast<std::size_t>(body_vecs.rows()), 1);
  Eigen::VectorXd a = pool(title_vecs, title_mask).values;
  Eigen::VectorXd b = pool(body_vecs, body_mask).values;

  auto value = cosine_similarity(a, b);
  if (!value) return {0.0, true};
  return {*value, false};
}

void export_stance_csv(const std::vector<std::pair<std::string, StanceScore>>& rows,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write stance CSV: " + path);
  out << "id,stance\n";
  char buf[64];
  for (const auto& [id, score] : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", score.value);
    out << csv::join_row({id, buf});
  }
}

}  // namespace stancecred
