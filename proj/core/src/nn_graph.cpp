#include "stancecred/nn/graph.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

#include "stancecred/errors.hpp"

namespace stancecred::nn {

namespace {

void accum(Node* n, const Mat& g) {
  if (!n->requires_grad) return;
  if (n->grad.size() == 0) n->grad = Mat::Zero(n->rows(), n->cols());
  n->grad += g;
}

bool any_grad(std::initializer_list<Node*> xs) {
  for (Node* x : xs)
    if (x->requires_grad) return true;
  return false;
}

}  // namespace

Node* Graph::make() {
  nodes_.emplace_back();
  return &nodes_.back();
}

void Graph::ensure_grad(Node* n) {
  if (n->grad.size() == 0) n->grad = Mat::Zero(n->rows(), n->cols());
}

Node* Graph::input(Mat v) {
  Node* n = make();
  n->storage = std::move(v);
  n->value = &n->storage;
  return n;
}

Node* Graph::param(Parameter& p) {
  Node* n = make();
  n->value = &p.value;
  n->param = &p;
  n->requires_grad = p.trainable;
  if (n->requires_grad) {
    n->backward_fn = [](Node& self) {
      if (self.param->grad.size() == 0)
        self.param->grad = Mat::Zero(self.rows(), self.cols());
      self.param->grad += self.grad;
    };
  }
  return n;
}

Node* Graph::matmul(Node* a, Node* b) {
  if (a->cols() != b->rows())
    throw DimensionError("matmul: inner dimensions disagree");
  Node* n = make();
  n->storage = a->val() * b->val();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, b});
  if (n->requires_grad)
    n->backward_fn = [a, b](Node& self) {
      accum(a, self.grad * b->val().transpose());
      accum(b, a->val().transpose() * self.grad);
    };
  return n;
}

Node* Graph::matmul_nt(Node* a, Node* b) {
  if (a->cols() != b->cols())
    throw DimensionError("matmul_nt: inner dimensions disagree");
  Node* n = make();
  n->storage = a->val() * b->val().transpose();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, b});
  if (n->requires_grad)
    n->backward_fn = [a, b](Node& self) {
      accum(a, self.grad * b->val());
      accum(b, self.grad.transpose() * a->val());
    };
  return n;
}

Node* Graph::matmul_tn(Node* a, Node* b) {
  if (a->rows() != b->rows())
    throw DimensionError("matmul_tn: inner dimensions disagree");
  Node* n = make();
  n->storage = a->val().transpose() * b->val();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, b});
  if (n->requires_grad)
    n->backward_fn = [a, b](Node& self) {
      accum(a, b->val() * self.grad.transpose());
      accum(b, a->val() * self.grad);
    };
  return n;
}

Node* Graph::add(Node* a, Node* b) {
  if (a->rows() != b->rows() || a->cols() != b->cols())
    throw DimensionError("add: shapes disagree");
  Node* n = make();
  n->storage = a->val() + b->val();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, b});
  if (n->requires_grad)
    n->backward_fn = [a, b](Node& self) {
      accum(a, self.grad);
      accum(b, self.grad);
    };
  return n;
}

Node* Graph::sub(Node* a, Node* b) {
  if (a->rows() != b->rows() || a->cols() != b->cols())
    throw DimensionError("sub: shapes disagree");
  Node* n = make();
  n->storage = a->val() - b->val();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, b});
  if (n->requires_grad)
    n->backward_fn = [a, b](Node& self) {
      accum(a, self.grad);
      accum(b, -self.grad);
    };
  return n;
}

Node* Graph::add_rowvec(Node* a, Node* bias) {
  if (bias->rows() != 1 || bias->cols() != a->cols())
    throw DimensionError("add_rowvec: bias must be 1 x cols(a)");
  Node* n = make();
  n->storage = a->val().rowwise() + bias->val().row(0);
  n->value = &n->storage;
  n->requires_grad = any_grad({a, bias});
  if (n->requires_grad)
    n->backward_fn = [a, bias](Node& self) {
      accum(a, self.grad);
      accum(bias, self.grad.colwise().sum());
    };
  return n;
}

Node* Graph::add_const(Node* a, const Mat& c) {
  if (a->rows() != c.rows() || a->cols() != c.cols())
    throw DimensionError("add_const: shapes disagree");
  Node* n = make();
  n->storage = a->val() + c;
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) { accum(a, self.grad); };
  return n;
}

Node* Graph::cmul(Node* a, Node* b) {
  if (a->rows() != b->rows() || a->cols() != b->cols())
    throw DimensionError("cmul: shapes disagree");
  Node* n = make();
  n->storage = a->val().cwiseProduct(b->val());
  n->value = &n->storage;
  n->requires_grad = any_grad({a, b});
  if (n->requires_grad)
    n->backward_fn = [a, b](Node& self) {
      accum(a, self.grad.cwiseProduct(b->val()));
      accum(b, self.grad.cwiseProduct(a->val()));
    };
  return n;
}

Node* Graph::scale(Node* a, double s) {
  Node* n = make();
  n->storage = a->val() * s;
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a, s](Node& self) { accum(a, self.grad * s); };
  return n;
}

Node* Graph::mul_colvec(Node* a, Node* c) {
  if (c->cols() != 1 || c->rows() != a->rows())
    throw DimensionError("mul_colvec: expected rows(a) x 1 column vector");
  Node* n = make();
  n->storage = a->val().array().colwise() * c->val().col(0).array();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, c});
  if (n->requires_grad)
    n->backward_fn = [a, c](Node& self) {
      accum(a, self.grad.array().colwise() * c->val().col(0).array());
      accum(c, self.grad.cwiseProduct(a->val()).rowwise().sum());
    };
  return n;
}

Node* Graph::sigmoid(Node* a) {
  Node* n = make();
  n->storage = a->val().unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
  });
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      Mat ds = self.val().array() * (1.0 - self.val().array());
      accum(a, self.grad.cwiseProduct(ds));
    };
  return n;
}

Node* Graph::tanh(Node* a) {
  Node* n = make();
  n->storage = a->val().array().tanh();
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      Mat dt = 1.0 - self.val().array().square();
      accum(a, self.grad.cwiseProduct(dt));
    };
  return n;
}

Node* Graph::relu(Node* a) {
  Node* n = make();
  n->storage = a->val().cwiseMax(0.0);
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      Mat mask = (a->val().array() > 0.0).cast<double>();
      accum(a, self.grad.cwiseProduct(mask));
    };
  return n;
}

Node* Graph::gelu(Node* a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  Node* n = make();
  n->storage = a->val().unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  });
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      Mat d = a->val().unaryExpr([](double x) {
        double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return phi + x * pdf;
      });
      accum(a, self.grad.cwiseProduct(d));
    };
  return n;
}

Node* Graph::softmax_rows(Node* a) {
  Node* n = make();
  Mat out(a->rows(), a->cols());
  for (Eigen::Index i = 0; i < a->rows(); ++i) {
    Eigen::ArrayXd row = a->val().row(i).array();
    Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
    out.row(i) = e / e.sum();
  }
  n->storage = std::move(out);
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      Mat g(self.rows(), self.cols());
      for (Eigen::Index i = 0; i < self.rows(); ++i) {
        Eigen::ArrayXd s = self.val().row(i).array();
        Eigen::ArrayXd gy = self.grad.row(i).array();
        double dot = (gy * s).sum();
        g.row(i) = s * (gy - dot);
      }
      accum(a, g);
    };
  return n;
}

Node* Graph::layer_norm_rows(Node* a, Node* gamma, Node* beta, double eps) {
  if (gamma->rows() != 1 || gamma->cols() != a->cols() || beta->rows() != 1 ||
      beta->cols() != a->cols())
    throw DimensionError("layer_norm_rows: gamma/beta must be 1 x cols(a)");
  Node* n = make();
  const Eigen::Index cols = a->cols();
  Mat xhat(a->rows(), cols);
  Eigen::VectorXd inv_std(a->rows());
  for (Eigen::Index i = 0; i < a->rows(); ++i) {
    Eigen::ArrayXd row = a->val().row(i).array();
    double mu = row.mean();
    double var = (row - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = ((row - mu) * is).matrix();
  }
  n->storage =
      (xhat.array().rowwise() * gamma->val().row(0).array()).rowwise() +
      beta->val().row(0).array();
  n->value = &n->storage;
  n->requires_grad = any_grad({a, gamma, beta});
  if (n->requires_grad)
    n->backward_fn = [a, gamma, beta, xhat = std::move(xhat),
                      inv_std = std::move(inv_std), cols](Node& self) {
      accum(gamma, (self.grad.cwiseProduct(xhat)).colwise().sum());
      accum(beta, self.grad.colwise().sum());
      if (!a->requires_grad) return;
      Mat g(self.rows(), cols);
      const double inv_n = 1.0 / static_cast<double>(cols);
      for (Eigen::Index i = 0; i < self.rows(); ++i) {
        Eigen::ArrayXd dxhat =
            self.grad.row(i).array() * gamma->val().row(0).array();
        Eigen::ArrayXd xh = xhat.row(i).array();
        double sum_dxhat = dxhat.sum();
        double sum_dxhat_xh = (dxhat * xh).sum();
        g.row(i) = inv_std(i) * inv_n *
                   (static_cast<double>(cols) * dxhat - sum_dxhat -
                    xh * sum_dxhat_xh);
      }
      accum(a, g);
    };
  return n;
}

Node* Graph::concat_cols(const std::vector<Node*>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: empty part list");
  Eigen::Index rows = parts.front()->rows(), total = 0;
  for (Node* p : parts) {
    if (p->rows() != rows)
      throw DimensionError("concat_cols: row counts disagree");
    total += p->cols();
  }
  Node* n = make();
  n->storage.resize(rows, total);
  Eigen::Index c = 0;
  for (Node* p : parts) {
    n->storage.middleCols(c, p->cols()) = p->val();
    c += p->cols();
  }
  n->value = &n->storage;
  for (Node* p : parts) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [parts](Node& self) {
      Eigen::Index c = 0;
      for (Node* p : parts) {
        accum(p, self.grad.middleCols(c, p->cols()));
        c += p->cols();
      }
    };
  return n;
}

Node* Graph::concat_rows(const std::vector<Node*>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: empty part list");
  Eigen::Index cols = parts.front()->cols(), total = 0;
  for (Node* p : parts) {
    if (p->cols() != cols)
      throw DimensionError("concat_rows: column counts disagree");
    total += p->rows();
  }
  Node* n = make();
  n->storage.resize(total, cols);
  Eigen::Index r = 0;
  for (Node* p : parts) {
    n->storage.middleRows(r, p->rows()) = p->val();
    r += p->rows();
  }
  n->value = &n->storage;
  for (Node* p : parts) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [parts](Node& self) {
      Eigen::Index r = 0;
      for (Node* p : parts) {
        accum(p, self.grad.middleRows(r, p->rows()));
        r += p->rows();
      }
    };
  return n;
}

Node* Graph::slice_cols(Node* a, Eigen::Index c0, Eigen::Index count) {
  if (c0 < 0 || count < 0 || c0 + count > a->cols())
    throw DimensionError("slice_cols: range out of bounds");
  Node* n = make();
  n->storage = a->val().middleCols(c0, count);
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a, c0, count](Node& self) {
      Mat g = Mat::Zero(a->rows(), a->cols());
      g.middleCols(c0, count) = self.grad;
      accum(a, g);
    };
  return n;
}

Node* Graph::slice_rows(Node* a, Eigen::Index r0, Eigen::Index count) {
  if (r0 < 0 || count < 0 || r0 + count > a->rows())
    throw DimensionError("slice_rows: range out of bounds");
  Node* n = make();
  n->storage = a->val().middleRows(r0, count);
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a, r0, count](Node& self) {
      Mat g = Mat::Zero(a->rows(), a->cols());
      g.middleRows(r0, count) = self.grad;
      accum(a, g);
    };
  return n;
}

Node* Graph::transpose(Node* a) {
  Node* n = make();
  n->storage = a->val().transpose();
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) { accum(a, self.grad.transpose()); };
  return n;
}

Node* Graph::gather_rows(Node* table, std::vector<int> indices) {
  Node* n = make();
  n->storage.resize(static_cast<Eigen::Index>(indices.size()), table->cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= table->rows())
      throw DimensionError("gather_rows: index out of range");
    n->storage.row(static_cast<Eigen::Index>(r)) = table->val().row(indices[r]);
  }
  n->value = &n->storage;
  n->requires_grad = table->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [table, indices = std::move(indices)](Node& self) {
      Mat g = Mat::Zero(table->rows(), table->cols());
      for (std::size_t r = 0; r < indices.size(); ++r)
        g.row(indices[r]) += self.grad.row(static_cast<Eigen::Index>(r));
      accum(table, g);
    };
  return n;
}

Node* Graph::mean_rows(Node* a) {
  if (a->rows() == 0) throw DimensionError("mean_rows: empty input");
  Node* n = make();
  n->storage = a->val().colwise().mean();
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      double inv = 1.0 / static_cast<double>(a->rows());
      accum(a, (self.grad * inv).replicate(a->rows(), 1));
    };
  return n;
}

Node* Graph::max_pool_rows(Node* a, int window) {
  if (window <= 0 || a->rows() < window)
    throw DimensionError("max_pool_rows: window larger than input");
  const Eigen::Index out_rows = a->rows() / window;
  Node* n = make();
  n->storage.resize(out_rows, a->cols());
  auto argmax = std::make_shared<std::vector<Eigen::Index>>(
      static_cast<std::size_t>(out_rows * a->cols()));
  for (Eigen::Index w = 0; w < out_rows; ++w)
    for (Eigen::Index c = 0; c < a->cols(); ++c) {
      Eigen::Index best = w * window;
      for (Eigen::Index r = w * window + 1; r < (w + 1) * window; ++r)
        if (a->val()(r, c) > a->val()(best, c)) best = r;
      n->storage(w, c) = a->val()(best, c);
      (*argmax)[static_cast<std::size_t>(w * a->cols() + c)] = best;
    }
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a, argmax](Node& self) {
      Mat g = Mat::Zero(a->rows(), a->cols());
      for (Eigen::Index w = 0; w < self.rows(); ++w)
        for (Eigen::Index c = 0; c < self.cols(); ++c)
          g((*argmax)[static_cast<std::size_t>(w * self.cols() + c)], c) +=
              self.grad(w, c);
      accum(a, g);
    };
  return n;
}

Node* Graph::conv1d_valid(Node* seq, Node* kernel, Eigen::Index k) {
  if (k <= 0 || seq->rows() < k)
    throw DimensionError("conv1d_valid: kernel longer than sequence");
  const Eigen::Index e = seq->cols();
  if (kernel->rows() != k * e)
    throw DimensionError("conv1d_valid: kernel rows must equal k * emb_dim");
  const Eigen::Index out_rows = seq->rows() - k + 1;
  Node* n = make();
  n->storage = Mat::Zero(out_rows, kernel->cols());
  for (Eigen::Index j = 0; j < k; ++j)
    n->storage.noalias() +=
        seq->val().middleRows(j, out_rows) * kernel->val().middleRows(j * e, e);
  n->value = &n->storage;
  n->requires_grad = any_grad({seq, kernel});
  if (n->requires_grad)
    n->backward_fn = [seq, kernel, k, e, out_rows](Node& self) {
      if (kernel->requires_grad) {
        Mat gk = Mat::Zero(kernel->rows(), kernel->cols());
        for (Eigen::Index j = 0; j < k; ++j)
          gk.middleRows(j * e, e).noalias() =
              seq->val().middleRows(j, out_rows).transpose() * self.grad;
        accum(kernel, gk);
      }
      if (seq->requires_grad) {
        Mat gs = Mat::Zero(seq->rows(), seq->cols());
        for (Eigen::Index j = 0; j < k; ++j)
          gs.middleRows(j, out_rows).noalias() +=
              self.grad * kernel->val().middleRows(j * e, e).transpose();
        accum(seq, gs);
      }
    };
  return n;
}

Node* Graph::flatten_row(Node* a) {
  Node* n = make();
  n->storage.resize(1, a->rows() * a->cols());
  for (Eigen::Index i = 0; i < a->rows(); ++i)
    for (Eigen::Index j = 0; j < a->cols(); ++j)
      n->storage(0, i * a->cols() + j) = a->val()(i, j);
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a](Node& self) {
      Mat g(a->rows(), a->cols());
      for (Eigen::Index i = 0; i < a->rows(); ++i)
        for (Eigen::Index j = 0; j < a->cols(); ++j)
          g(i, j) = self.grad(0, i * a->cols() + j);
      accum(a, g);
    };
  return n;
}

Node* Graph::dropout(Node* a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw DimensionError("dropout: p must be in [0, 1)");
  if (p == 0.0) return a;
  Node* n = make();
  auto mask = std::make_shared<Mat>(a->rows(), a->cols());
  const double keep = 1.0 - p;
  for (Eigen::Index i = 0; i < a->rows(); ++i)
    for (Eigen::Index j = 0; j < a->cols(); ++j)
      (*mask)(i, j) = rng.next_double() < keep ? 1.0 / keep : 0.0;
  n->storage = a->val().cwiseProduct(*mask);
  n->value = &n->storage;
  n->requires_grad = a->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [a, mask](Node& self) {
      accum(a, self.grad.cwiseProduct(*mask));
    };
  return n;
}

Node* Graph::sigmoid_bce_with_logits(Node* logits,
                                     const Eigen::VectorXd& targets) {
  if (logits->cols() != 1 || logits->rows() != targets.size())
    throw DimensionError("sigmoid_bce_with_logits: logits must be n x 1");
  const Eigen::Index n_rows = logits->rows();
  Node* n = make();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    double z = logits->val()(i, 0);
    double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    total += softplus - targets(i) * z;
  }
  n->storage = Mat::Constant(1, 1, total / static_cast<double>(n_rows));
  n->value = &n->storage;
  n->requires_grad = logits->requires_grad;
  if (n->requires_grad)
    n->backward_fn = [logits, targets, n_rows](Node& self) {
      Mat g(n_rows, 1);
      const double inv = self.grad(0, 0) / static_cast<double>(n_rows);
      for (Eigen::Index i = 0; i < n_rows; ++i) {
        double z = logits->val()(i, 0);
        double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                          : std::exp(z) / (1.0 + std::exp(z));
        g(i, 0) = (s - targets(i)) * inv;
      }
      accum(logits, g);
    };
  return n;
}

void Graph::backward(Node* root) {
  ensure_grad(root);
  root->grad.setOnes();
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& node = *it;
    if (!node.requires_grad || !node.backward_fn) continue;
    if (node.grad.size() == 0) continue;  // not on a path to the root
    node.backward_fn(node);
  }
}

void AdamOptimizer::step(const std::vector<Parameter*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    if (p->grad.size() == 0) continue;
    if (p->m.size() == 0) {
      p->m = Mat::Zero(p->value.rows(), p->value.cols());
      p->v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    p->m = beta1_ * p->m + (1.0 - beta1_) * p->grad;
    p->v = beta2_ * p->v.array() + (1.0 - beta2_) * p->grad.array().square();
    Mat m_hat = p->m / bc1;
    Mat v_hat = p->v / bc2;
    p->value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

void AdamOptimizer::zero_grad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params)
    if (p->grad.size() != 0) p->grad.setZero();
}

Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out(i, j) = (rng.next_double() * 2.0 - 1.0) * limit;
  return out;
}

Mat normal(Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev) {
  Mat out(rows, cols);
  bool have_spare = false;
  double spare = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (have_spare) {
        out(i, j) = spare * stddev;
        have_spare = false;
        continue;
      }
      double u1 = 1.0 - rng.next_double();
      double u2 = rng.next_double();
      double r = std::sqrt(-2.0 * std::log(u1));
      double theta = 2.0 * 3.14159265358979323846 * u2;
      out(i, j) = r * std::cos(theta) * stddev;
      spare = r * std::sin(theta);
      have_spare = true;
    }
  return out;
}

Mat orthogonal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const bool wide = cols > rows;
  const Eigen::Index big = wide ? cols : rows;
  const Eigen::Index small = wide ? rows : cols;
  Mat a = normal(big, small, rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(big, small);
  Mat r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return wide ? Mat(q.transpose()) : q;
}

}  // namespace stancecred::nn
