#pragma once

#include "brainhgt/common.hpp"

#include <functional>
#include <vector>

namespace brainhgt::nn {

// ---------------------------------------------------------------------------
// Raw numeric kernels shared by the autodiff ops and the tests.
// ---------------------------------------------------------------------------

/// Numerically stable softmax of a vector.
Vector softmax(const Vector& logits);

/// Exact 1.5-entmax by the sorted-threshold solve: after max-subtraction and
/// halving, p_i = max(0, z_i - tau)^2 with tau the unique root of sum(p) = 1.
/// Produces exact zeros outside the support.
Vector entmax15(const Vector& logits);

/// Xavier/Glorot uniform on [-a, a], a = sqrt(6 / (fan_in + fan_out)).
Matrix xavier_uniform(int rows, int cols, Rng& rng);

/// Shape-vector form; throws BadShape for fewer than 2 dims. Only 2-D shapes
/// are used in this codebase.
Matrix xavier_uniform(const std::vector<int>& shape, uint64_t seed);

/// Orthonormalizes the rows of a K x d matrix (K <= d) in order; row k keeps
/// the span of the first k input rows. Throws RankDeficient when a residual
/// collapses below 1e-10.
Matrix gram_schmidt(const Matrix& c);

// ---------------------------------------------------------------------------
// Adam with classic L2 coupling: grad + weight_decay * param.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct AdamSlot {
  Matrix m;
  Matrix v;
};

/// One bias-corrected update of a single parameter; step is the 1-based count
/// after this update (caller increments a shared step before the sweep).
void adam_update(Matrix& param, const Matrix& grad, AdamSlot& slot, long step,
                 const AdamConfig& cfg);

/// Central finite differences of a scalar function at x.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double h = 1e-5);

}  // namespace brainhgt::nn
