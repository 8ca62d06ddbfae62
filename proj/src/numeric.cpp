#include "brainhgt/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace brainhgt::nn {

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

Vector entmax15(const Vector& logits) {
  const int n = static_cast<int>(logits.size());
  Vector z = (logits.array() - logits.maxCoeff()) / 2.0;  // shift + halve

  std::vector<double> sorted(z.data(), z.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  // tau_k = mean_k - sqrt((1 - ss_k) / k), support = last k with tau_k <= z_(k)
  double cum = 0.0, cumsq = 0.0;
  double tau_star = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double v = sorted[k - 1];
    cum += v;
    cumsq += v * v;
    const double mean = cum / k;
    const double ss = cumsq - k * mean * mean;
    const double delta = std::max((1.0 - ss) / k, 0.0);
    const double tau = mean - std::sqrt(delta);
    if (tau <= v) tau_star = tau;
  }

  Vector p = (z.array() - tau_star).max(0.0).square();
  p /= p.sum();  // remove the O(eps) residue of the threshold solve
  return p;
}

Matrix xavier_uniform(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-a, a);
  return m;
}

Matrix xavier_uniform(const std::vector<int>& shape, uint64_t seed) {
  if (shape.size() < 2)
    fail(Errc::bad_shape, "xavier init needs >= 2 dims to derive fan_in/fan_out");
  Rng rng(seed);
  return xavier_uniform(shape[0], shape[1], rng);
}

Matrix gram_schmidt(const Matrix& c) {
  const int k = static_cast<int>(c.rows());
  const int d = static_cast<int>(c.cols());
  if (k > d) fail(Errc::bad_shape, "gram_schmidt needs K <= d");
  Matrix q = c;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < i; ++j) q.row(i) -= q.row(i).dot(q.row(j)) * q.row(j);
    const double norm = q.row(i).norm();
    if (norm < 1e-10)
      fail(Errc::rank_deficient, "row " + std::to_string(i) + " is linearly dependent");
    q.row(i) /= norm;
  }
  return q;
}

void adam_update(Matrix& param, const Matrix& grad, AdamSlot& slot, long step,
                 const AdamConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    fail(Errc::shape_mismatch, "adam: parameter/gradient shape mismatch");
  if (slot.m.size() == 0) {
    slot.m = Matrix::Zero(param.rows(), param.cols());
    slot.v = Matrix::Zero(param.rows(), param.cols());
  }
  const Matrix g = grad + cfg.weight_decay * param;
  slot.m = cfg.beta1 * slot.m + (1.0 - cfg.beta1) * g;
  slot.v = cfg.beta2 * slot.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const Matrix m_hat = slot.m / bc1;
  const Matrix v_hat = slot.v / bc2;
  param.array() -= cfg.lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double h) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) {
      const double orig = xp(i, j);
      xp(i, j) = orig + h;
      const double fp = f(xp);
      xp(i, j) = orig - h;
      const double fm = f(xp);
      xp(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  return g;
}

}  // namespace brainhgt::nn
