#pragma once

#include "brainhgt/common.hpp"
#include "brainhgt/numeric.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace brainhgt::nn {

// ---------------------------------------------------------------------------
// Minimal reverse-mode autodiff over dense double matrices. A forward pass
// records a tape of Node objects; backward(loss) runs the chain rule in
// reverse topological order and then frees the tape. Leaf gradients persist
// and accumulate across backward calls until the optimizer clears them, so
// batches are plain repeated forward/backward.
//
// Vectors are 1 x d or d x 1 matrices; scalars are 1 x 1.
// ---------------------------------------------------------------------------

class Node {
 public:
  Matrix value;
  Matrix grad;  // allocated on first use, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // scatter this->grad into parents

  void ensure_grad() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
  }
};

/// Value-semantic handle to a tape node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Var constant(Matrix v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return Var(std::move(n));
  }

  static Var param(Matrix v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    n->ensure_grad();
    return Var(std::move(n));
  }

  static Var scalar(double v, bool requires_grad = false) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return requires_grad ? param(std::move(m)) : constant(std::move(m));
  }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  Matrix& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }
  int rows() const { return static_cast<int>(node_->value.rows()); }
  int cols() const { return static_cast<int>(node_->value.cols()); }
  double item() const {
    if (node_->value.size() != 1) fail(Errc::not_scalar, "item() on non-scalar");
    return node_->value(0, 0);
  }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op node; wires parents and the backward closure.
Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backprop);

// ---- arithmetic ----
Var operator+(const Var& a, const Var& b);  // same shape
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var cmul(const Var& a, const Var& b);       // elementwise, same shape
Var operator*(double c, const Var& a);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add_rowvec(const Var& a, const Var& b);     // a: n x d, b: 1 x d
Var scale_by(const Var& a, const Var& s);       // s: 1 x 1
Var sub_scalar(const Var& a, const Var& s);     // a - s * ones, s: 1 x 1

// ---- elementwise maps ----
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var pow(const Var& a, double p);

// ---- rowwise normalizations ----
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var entmax15_rows(const Var& a);
/// y = (x - mu) / sqrt(var + eps) * gain + bias, per row; gain/bias are 1 x d.
Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);

// ---- reductions & layout ----
Var sum_all(const Var& a);        // 1 x 1
Var mean_all(const Var& a);       // 1 x 1
Var mean_over_rows(const Var& a); // 1 x d column means
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, int start, int n);

/// Inverted dropout; identity when rng is null or rate <= 0.
Var dropout(const Var& a, double rate, Rng* rng);

/// -log softmax(logits)[label] for a 1 x k logits row.
Var cross_entropy_logits(const Var& logits, int label);

/// Reverse-mode sweep from a scalar loss. Frees the tape afterwards; leaf
/// gradients accumulate. Throws NotScalar for non-scalar losses.
void backward(const Var& loss);

}  // namespace brainhgt::nn
