#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stancecred {

class TextEncoder;

/// Cosine similarity of two equal-dimension vectors, clamped to [-1, 1].
/// Returns nullopt when either vector has zero norm; throws DimensionError
/// on a dimension mismatch.
std::optional<double> cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Headline-body relatedness: cosine similarity of the pooled title and body
/// vectors. Higher means more aligned. `degenerate` is set (and value forced
/// to 0) when either side pooled to a zero vector or was empty after cleaning.
struct StanceScore {
  double value = 0.0;
  bool degenerate = false;
};

/// Title and body must already be cleaned; both are encoded with the same
/// backend and mean-pooled before the cosine is taken.
StanceScore compute_stance(const std::string& clean_title, const std::string& clean_body,
                           const TextEncoder& encoder);

/// Writes an `id,stance` CSV.
void export_stance_csv(const std::vector<std::pair<std::string, StanceScore>>& rows,
                       const std::string& path);

}  // namespace stancecred
