#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>

#include "cloze/lm/safetensors.hpp"

// Transformer building blocks over row-per-token matrices.

namespace cloze::lm {

template <typename Scalar>
struct Linear {
  Matrix<Scalar> weight;  // in x out
  RowVector<Scalar> bias;

  template <typename Derived>
  Matrix<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    Matrix<Scalar> y = x * weight;
    y.rowwise() += bias;
    return y;
  }
};

template <typename Scalar>
struct LayerNorm {
  RowVector<Scalar> gamma;
  RowVector<Scalar> beta;
  Scalar eps = Scalar(1e-5);

  template <typename Derived>
  Matrix<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    Matrix<Scalar> y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const auto row = x.row(r);
      const Scalar mean = row.mean();
      const Scalar var = (row.array() - mean).square().mean();
      y.row(r) = ((row.array() - mean) / std::sqrt(var + eps)).matrix();
    }
    y.array().rowwise() *= gamma.array();
    y.rowwise() += beta;
    return y;
  }
};

/// Exact GELU, x * Phi(x).
template <typename Derived>
auto gelu_erf(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) {
    return Scalar(0.5) * v * (Scalar(1) + std::erf(v / std::numbers::sqrt2_v<Scalar>));
  });
}

/// Tanh approximation used by GPT-2 ("gelu_new").
template <typename Derived>
auto gelu_tanh(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) {
    const Scalar c = std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
    return Scalar(0.5) * v * (Scalar(1) + std::tanh(c * (v + Scalar(0.044715) * v * v * v)));
  });
}

/// log-softmax of one row, computed in double for stable sums over large vocabularies.
template <typename Derived>
Eigen::RowVectorXd log_softmax(const Eigen::MatrixBase<Derived>& row) {
  Eigen::RowVectorXd r = row.template cast<double>();
  const double m = r.maxCoeff();
  const double lse = m + std::log((r.array() - m).exp().sum());
  return (r.array() - lse).matrix();
}

/// Multi-head scaled dot-product attention. q, k, v are T x d with heads
/// laid out as contiguous column blocks.
template <typename Scalar>
Matrix<Scalar> attention(const Matrix<Scalar>& q, const Matrix<Scalar>& k,
                         const Matrix<Scalar>& v, int n_heads, bool causal) {
  const Eigen::Index t = q.rows();
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / n_heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  Matrix<Scalar> out(t, d);
  for (int h = 0; h < n_heads; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto kh = k.middleCols(h * dh, dh);
    const auto vh = v.middleCols(h * dh, dh);
    Matrix<Scalar> scores = (qh * kh.transpose()) * scale;
    for (Eigen::Index i = 0; i < t; ++i) {
      if (causal) {
        for (Eigen::Index j = i + 1; j < t; ++j) {
          scores(i, j) = -std::numeric_limits<Scalar>::infinity();
        }
      }
      const Scalar m = scores.row(i).maxCoeff();
      scores.row(i) = (scores.row(i).array() - m).exp().matrix();
      scores.row(i) /= scores.row(i).sum();
    }
    out.middleCols(h * dh, dh) = scores * vh;
  }
  return out;
}

}  // namespace cloze::lm
