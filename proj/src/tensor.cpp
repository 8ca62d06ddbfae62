#include "brainhgt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace brainhgt::nn {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(Errc::shape_mismatch, std::string(op) + ": operand shapes differ");
}

void check_scalar(const Var& s, const char* op) {
  if (s.rows() != 1 || s.cols() != 1)
    fail(Errc::shape_mismatch, std::string(op) + ": expected 1x1 scalar");
}

}  // namespace

Var make_op(Matrix value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool rg = false;
  for (const Var& p : parents) rg = rg || p.node()->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents.reserve(parents.size());
    for (const Var& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
  }
  return Var(std::move(n));
}

Var operator+(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad;
    if (n.parents[1]->requires_grad) n.parents[1]->grad += n.grad;
  });
}

Var operator-(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_op(a.value() - b.value(), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad;
    if (n.parents[1]->requires_grad) n.parents[1]->grad -= n.grad;
  });
}

Var operator-(const Var& a) { return -1.0 * a; }

Var cmul(const Var& a, const Var& b) {
  check_same_shape(a, b, "cmul");
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad += n.grad.cwiseProduct(n.parents[1]->value);
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad += n.grad.cwiseProduct(n.parents[0]->value);
  });
}

Var operator*(double c, const Var& a) {
  return make_op(c * a.value(), {a}, [c](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += c * n.grad;
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) fail(Errc::shape_mismatch, "matmul: inner dims differ");
  return make_op(a.value() * b.value(), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad += n.grad * n.parents[1]->value.transpose();
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad += n.parents[0]->value.transpose() * n.grad;
  });
}

Var transpose(const Var& a) {
  return make_op(a.value().transpose(), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad.transpose();
  });
}

Var add_rowvec(const Var& a, const Var& b) {
  if (b.rows() != 1 || b.cols() != a.cols())
    fail(Errc::shape_mismatch, "add_rowvec: bias must be 1 x cols(a)");
  Matrix v = a.value();
  v.rowwise() += b.value().row(0);
  return make_op(std::move(v), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad;
    if (n.parents[1]->requires_grad) n.parents[1]->grad += n.grad.colwise().sum();
  });
}

Var scale_by(const Var& a, const Var& s) {
  check_scalar(s, "scale_by");
  return make_op(s.value()(0, 0) * a.value(), {a, s}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad += n.parents[1]->value(0, 0) * n.grad;
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad(0, 0) += n.grad.cwiseProduct(n.parents[0]->value).sum();
  });
}

Var sub_scalar(const Var& a, const Var& s) {
  check_scalar(s, "sub_scalar");
  return make_op((a.value().array() - s.value()(0, 0)).matrix(), {a, s}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad;
    if (n.parents[1]->requires_grad) n.parents[1]->grad(0, 0) -= n.grad.sum();
  });
}

Var relu(const Var& a) {
  return make_op(a.value().cwiseMax(0.0), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    n.parents[0]->grad.array() +=
        n.grad.array() * (n.parents[0]->value.array() > 0.0).cast<double>();
  });
}

Var sigmoid(const Var& a) {
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make_op(std::move(y), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    n.parents[0]->grad.array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

Var exp(const Var& a) {
  return make_op(a.value().array().exp().matrix(), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad.array() += n.grad.array() * n.value.array();
  });
}

Var log(const Var& a) {
  return make_op(a.value().array().log().matrix(), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad.array() += n.grad.array() / n.parents[0]->value.array();
  });
}

Var pow(const Var& a, double p) {
  return make_op(a.value().array().pow(p).matrix(), {a}, [p](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad.array() +=
          n.grad.array() * p * n.parents[0]->value.array().pow(p - 1.0);
  });
}

Var softmax_rows(const Var& a) {
  Matrix y(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    y.row(i) = softmax(a.value().row(i).transpose()).transpose();
  return make_op(std::move(y), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    for (int i = 0; i < n.value.rows(); ++i) {
      const auto yr = n.value.row(i).array();
      const auto gr = n.grad.row(i).array();
      const double dot = (gr * yr).sum();
      n.parents[0]->grad.row(i).array() += yr * (gr - dot);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  Matrix y(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const auto row = a.value().row(i).array();
    const double m = row.maxCoeff();
    const double lse = m + std::log((row - m).exp().sum());
    y.row(i) = (row - lse).matrix();
  }
  return make_op(std::move(y), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    for (int i = 0; i < n.value.rows(); ++i) {
      const double gsum = n.grad.row(i).sum();
      n.parents[0]->grad.row(i).array() +=
          n.grad.row(i).array() - n.value.row(i).array().exp() * gsum;
    }
  });
}

Var entmax15_rows(const Var& a) {
  Matrix y(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    y.row(i) = entmax15(a.value().row(i).transpose()).transpose();
  // Jacobian restricted to the support: with s = sqrt(p),
  // dx = s .* dy - s * (dy . s) / sum(s)
  return make_op(std::move(y), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    for (int i = 0; i < n.value.rows(); ++i) {
      const auto s = n.value.row(i).array().sqrt();
      const auto gr = n.grad.row(i).array();
      const double q = (gr * s).sum() / s.sum();
      n.parents[0]->grad.row(i).array() += s * (gr - q);
    }
  });
}

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
  const int rows = a.rows();
  const int d = a.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d)
    fail(Errc::shape_mismatch, "layer_norm: gain/bias must be 1 x d");
  Matrix xhat(rows, d);
  Vector inv(rows);
  for (int i = 0; i < rows; ++i) {
    const double mu = a.value().row(i).mean();
    const auto c = a.value().row(i).array() - mu;
    const double var = c.square().mean();
    inv(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (c * inv(i)).matrix();
  }
  Matrix y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  return make_op(std::move(y), {a, gain, bias}, [xhat, inv](Node& n) {
    const auto& x = n.parents[0];
    const auto& g = n.parents[1];
    const auto& b = n.parents[2];
    if (g->requires_grad)
      g->grad += (n.grad.cwiseProduct(xhat)).colwise().sum();
    if (b->requires_grad) b->grad += n.grad.colwise().sum();
    if (x->requires_grad) {
      for (int i = 0; i < n.value.rows(); ++i) {
        const auto dxh = n.grad.row(i).array() * g->value.row(0).array();
        const auto xh = xhat.row(i).array();
        const double m1 = dxh.mean();
        const double m2 = (dxh * xh).mean();
        x->grad.row(i).array() += inv(i) * (dxh - m1 - xh * m2);
      }
    }
  });
}

Var sum_all(const Var& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return make_op(std::move(v), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad.array() += n.grad(0, 0);
  });
}

Var mean_all(const Var& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().mean();
  return make_op(std::move(v), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad.array() += n.grad(0, 0) / n.parents[0]->value.size();
  });
}

Var mean_over_rows(const Var& a) {
  Matrix v = a.value().colwise().mean();
  return make_op(std::move(v), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const double scale = 1.0 / n.parents[0]->value.rows();
    n.parents[0]->grad.array() +=
        (scale * n.grad).replicate(n.parents[0]->value.rows(), 1).array();
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail(Errc::shape_mismatch, "concat_cols: no parts");
  const int rows = parts[0].rows();
  int total = 0;
  std::vector<int> widths;
  widths.reserve(parts.size());
  for (const Var& p : parts) {
    if (p.rows() != rows) fail(Errc::shape_mismatch, "concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Matrix v(rows, total);
  int off = 0;
  for (const Var& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return make_op(std::move(v), parts, [widths](Node& n) {
    int off = 0;
    for (size_t k = 0; k < n.parents.size(); ++k) {
      if (n.parents[k]->requires_grad)
        n.parents[k]->grad += n.grad.middleCols(off, widths[k]);
      off += widths[k];
    }
  });
}

Var slice_cols(const Var& a, int start, int count) {
  if (start < 0 || count <= 0 || start + count > a.cols())
    fail(Errc::shape_mismatch, "slice_cols: range out of bounds");
  return make_op(a.value().middleCols(start, count), {a}, [start, count](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad.middleCols(start, count) += n.grad;
  });
}

Var dropout(const Var& a, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return a;
  if (rate >= 1.0) fail(Errc::bad_config, "dropout rate must be < 1");
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) mask(i, j) = rng->uniform01() < rate ? 0.0 : keep;
  return make_op(a.value().cwiseProduct(mask), {a}, [mask](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad.cwiseProduct(mask);
  });
}

Var cross_entropy_logits(const Var& logits, int label) {
  if (logits.rows() != 1 || label < 0 || label >= logits.cols())
    fail(Errc::shape_mismatch, "cross_entropy_logits: logits must be 1 x k, label in range");
  Var ls = log_softmax_rows(logits);
  Matrix v(1, 1);
  v(0, 0) = -ls.value()(0, label);
  return make_op(std::move(v), {ls}, [label](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad(0, label) -= n.grad(0, 0);
  });
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().size() != 1)
    fail(Errc::not_scalar, "backward requires a scalar loss");
  if (!loss.requires_grad()) return;

  // iterative post-order DFS over the tape
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* next = node->parents[idx++].get();
      if (next->requires_grad && seen.insert(next).second) stack.emplace_back(next, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->ensure_grad();
  loss.node()->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);

  // free the tape; leaf parameters keep their accumulated gradients
  for (Node* n : order) {
    n->backprop = nullptr;
    n->parents.clear();
  }
}

}  // namespace brainhgt::nn
