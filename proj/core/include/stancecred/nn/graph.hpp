#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stancecred/util.hpp"

namespace stancecred::nn {

using Mat = Eigen::MatrixXd;

/// A named trainable tensor. The gradient and Adam moment buffers stay empty
/// until first used, so large frozen weights cost only their values.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat m;
  Mat v;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Mat val) : name(std::move(n)), value(std::move(val)) {}
};

struct Node {
  Mat storage;                 // owned value; empty for parameter-bound nodes
  const Mat* value = nullptr;  // points at storage or at Parameter::value
  Mat grad;
  Parameter* param = nullptr;
  bool requires_grad = false;
  std::function<void(Node&)> backward_fn;

  const Mat& val() const { return *value; }
  Eigen::Index rows() const { return value->rows(); }
  Eigen::Index cols() const { return value->cols(); }
};

/// Define-by-run reverse-mode tape over Eigen double matrices. A Graph is
/// built per forward pass and discarded after backward(); Parameters outlive
/// graphs and accumulate gradients across them until the optimizer steps.
class Graph {
 public:
  Node* input(Mat v);
  Node* param(Parameter& p);

  Node* matmul(Node* a, Node* b);     // A B
  Node* matmul_nt(Node* a, Node* b);  // A Bᵀ
  Node* matmul_tn(Node* a, Node* b);  // Aᵀ B
  Node* add(Node* a, Node* b);
  Node* sub(Node* a, Node* b);
  Node* add_rowvec(Node* a, Node* bias);  // bias is 1 x cols, broadcast over rows
  Node* add_const(Node* a, const Mat& c);
  Node* cmul(Node* a, Node* b);
  Node* scale(Node* a, double s);
  Node* mul_colvec(Node* a, Node* c);  // row i of a scaled by c(i, 0)

  Node* sigmoid(Node* a);
  Node* tanh(Node* a);
  Node* relu(Node* a);
  Node* gelu(Node* a);  // exact erf form
  Node* softmax_rows(Node* a);
  Node* layer_norm_rows(Node* a, Node* gamma, Node* beta, double eps = 1e-12);

  Node* concat_cols(const std::vector<Node*>& parts);
  Node* concat_rows(const std::vector<Node*>& parts);
  Node* slice_cols(Node* a, Eigen::Index c0, Eigen::Index n);
  Node* slice_rows(Node* a, Eigen::Index r0, Eigen::Index n);
  Node* transpose(Node* a);
  Node* gather_rows(Node* table, std::vector<int> indices);
  Node* mean_rows(Node* a);                    // 1 x cols
  Node* max_pool_rows(Node* a, int window);    // non-overlapping windows

  /// Valid 1-d convolution along rows. seq is L x E, kernel is (k*E) x F with
  /// kernel.middleRows(j*E, E) applied to window offset j. Output (L-k+1) x F.
  Node* conv1d_valid(Node* seq, Node* kernel, Eigen::Index k);
  Node* flatten_row(Node* a);                  // 1 x (rows*cols), row-major order
  Node* dropout(Node* a, double p, Rng& rng);  // inverted dropout

  /// Stable fused sigmoid + binary cross-entropy, averaged over rows.
  /// logits is n x 1, targets holds n values in {0, 1}. Returns a 1x1 node.
  Node* sigmoid_bce_with_logits(Node* logits, const Eigen::VectorXd& targets);

  /// Reverse sweep from `root` (typically the loss). Parameter gradients are
  /// accumulated into their Parameter::grad buffers.
  void backward(Node* root);

  std::size_t size() const { return nodes_.size(); }

 private:
  Node* make();
  static void ensure_grad(Node* n);

  std::deque<Node> nodes_;
};

/// Adaptive-moment gradient descent (bias-corrected first/second moments).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Parameter*>& params);
  void zero_grad(const std::vector<Parameter*>& params);
  void reset() { t_ = 0; }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Deterministic initializers (our own sampling; distribution code in the
// standard library is implementation-defined).
Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Mat normal(Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev = 1.0);
Mat orthogonal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace stancecred::nn
