#pragma once

#include <memory>
#include <span>
#include <vector>

#include "aopt/data.hpp"
#include "aopt/problem.hpp"

namespace aopt {

struct SampleEval {
  double f = 0.0;
  Vector g;
  Matrix H;            // empty unless requested
  bool has_hessian = false;
};

/// Regularized logistic regression over the training rows of a dataset:
///   f(x) = (1/N) sum_i log(1 + exp(-z_i * x' xt_i)) + (lambda/2) ||x||^2
/// with z_i in {-1,+1} mapped from the {0,1} labels and xt_i the feature
/// row with an appended bias coordinate. Per-sample gradients average to
/// the full gradient exactly. Strongly convex with modulus lambda when
/// lambda > 0.
class FiniteSumProblem {
 public:
  FiniteSumProblem(std::shared_ptr<const Dataset> data, double lambda)
      : data_(std::move(data)), lambda_(lambda) {
    if (lambda_ < 0.0) throw invalid_problem("logistic_problem: lambda must be >= 0");
    if (!data_ || data_->size() == 0) throw invalid_problem("logistic_problem: empty dataset");
    data_->validate();
    if (data_->train_idx.empty()) {
      train_.resize(data_->size());
      std::iota(train_.begin(), train_.end(), std::size_t{0});
    } else {
      train_ = data_->train_idx;
    }
    dim_ = data_->feature_dim() + 1;  // bias coordinate
  }

  int dim() const { return dim_; }
  std::size_t num_samples() const { return train_.size(); }
  double lambda() const { return lambda_; }
  const Dataset& dataset() const { return *data_; }

  double value(const Vector& x) const {
    double s = 0.0;
    for (std::size_t i : train_) s += sample_loss(i, x);
    return s / static_cast<double>(train_.size()) + regularizer(x);
  }

  Vector gradient(const Vector& x) const {
    Vector g = Vector::Zero(dim_);
    for (std::size_t i : train_) add_sample_grad(i, x, g);
    g /= static_cast<double>(train_.size());
    g += lambda_ * x;
    return g;
  }

  Matrix hessian(const Vector& x) const {
    Matrix H = Matrix::Zero(dim_, dim_);
    for (std::size_t i : train_) add_sample_hess(i, x, H);
    H /= static_cast<double>(train_.size());
    H += lambda_ * Matrix::Identity(dim_, dim_);
    return H;
  }

  /// Mini-batch estimate: per-sample averages over the (multiset) batch
  /// plus the full regularizer term. The full-index batch reproduces the
  /// exact evaluation.
  SampleEval sample_eval(const Vector& x, std::span<const std::size_t> batch,
                         bool want_hessian = false) const {
    if (batch.empty()) throw config_error("sample_eval: empty batch");
    SampleEval out;
    out.g = Vector::Zero(dim_);
    if (want_hessian) {
      out.H = Matrix::Zero(dim_, dim_);
      out.has_hessian = true;
    }
    for (std::size_t i : batch) {
      if (i >= train_.size())
        throw std::out_of_range("sample_eval: batch index " + std::to_string(i) +
                                " out of range [0," + std::to_string(train_.size()) + ")");
      const std::size_t row = train_[i];
      out.f += sample_loss(row, x);
      add_sample_grad(row, x, out.g);
      if (want_hessian) add_sample_hess(row, x, out.H);
    }
    const double n = static_cast<double>(batch.size());
    out.f = out.f / n + regularizer(x);
    out.g /= n;
    out.g += lambda_ * x;
    if (want_hessian) {
      out.H /= n;
      out.H += lambda_ * Matrix::Identity(dim_, dim_);
    }
    return out;
  }

  /// Mini-batch objective only (shared-batch Armijo tests).
  double sample_value(const Vector& x, std::span<const std::size_t> batch) const {
    if (batch.empty()) throw config_error("sample_value: empty batch");
    double s = 0.0;
    for (std::size_t i : batch) {
      if (i >= train_.size()) throw std::out_of_range("sample_value: batch index out of range");
      s += sample_loss(train_[i], x);
    }
    return s / static_cast<double>(batch.size()) + regularizer(x);
  }

  /// Fraction of test rows classified correctly by "predict 1 iff the
  /// logistic score >= 1/2", i.e. iff x' xt >= 0. Falls back to training
  /// rows when the dataset has no split.
  double test_accuracy(const Vector& x) const {
    const auto& rows = data_->has_split() ? data_->test_idx : train_;
    std::size_t correct = 0;
    for (std::size_t r : rows) {
      const double score = margin(r, x);
      const int pred = score >= 0.0 ? 1 : 0;
      if (pred == data_->labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
  }

  /// Adapter exposing the exact full-batch evaluators. L is bounded via
  /// the Gram matrix: hess <= (1/4N) sum xt xt' + lambda I.
  DeterministicProblem as_deterministic() const {
    DeterministicProblem p;
    p.dim = dim_;
    auto self = *this;
    p.value = [self](const Vector& x) { return self.value(x); };
    p.gradient = [self](const Vector& x) { return self.gradient(x); };
    p.hessian = [self](const Vector& x) { return self.hessian(x); };
    Matrix gram = Matrix::Zero(dim_, dim_);
    for (std::size_t i : train_) {
      Vector xt = augmented(i);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(xt);
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    gram /= static_cast<double>(train_.size());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    p.lipschitz_grad = 0.25 * es.eigenvalues().maxCoeff() + lambda_;
    if (lambda_ > 0.0) {
      p.convexity = Convexity::strongly_convex;
      p.strong_modulus = lambda_;
    } else {
      p.convexity = Convexity::convex;
    }
    return p;
  }

  Vector augmented(std::size_t row) const {
    Vector xt(dim_);
    xt.head(dim_ - 1) = data_->features.row(static_cast<Eigen::Index>(row)).transpose();
    xt(dim_ - 1) = 1.0;
    return xt;
  }

 private:
  double margin(std::size_t row, const Vector& x) const {
    double m = x(dim_ - 1);
    m += data_->features.row(static_cast<Eigen::Index>(row)).dot(x.head(dim_ - 1).transpose());
    return m;
  }

  double regularizer(const Vector& x) const { return 0.5 * lambda_ * x.squaredNorm(); }

  // log(1 + exp(-z m)), evaluated without overflow
  double sample_loss(std::size_t row, const Vector& x) const {
    const double z = data_->labels[row] == 1 ? 1.0 : -1.0;
    const double t = -z * margin(row, x);
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }

  void add_sample_grad(std::size_t row, const Vector& x, Vector& g) const {
    const double z = data_->labels[row] == 1 ? 1.0 : -1.0;
    const double t = z * margin(row, x);
    const double w = -z / (1.0 + std::exp(t));  // -z * sigma(-z m)
    g.head(dim_ - 1) += w * data_->features.row(static_cast<Eigen::Index>(row)).transpose();
    g(dim_ - 1) += w;
  }

  void add_sample_hess(std::size_t row, const Vector& x, Matrix& H) const {
    const double z = data_->labels[row] == 1 ? 1.0 : -1.0;
    const double t = z * margin(row, x);
    const double p = 1.0 / (1.0 + std::exp(-t));
    const double w = p * (1.0 - p);
    Vector xt = augmented(row);
    H += w * (xt * xt.transpose());
  }

  std::shared_ptr<const Dataset> data_;
  double lambda_ = 0.0;
  std::vector<std::size_t> train_;
  int dim_ = 0;
};

inline FiniteSumProblem logistic_problem(std::shared_ptr<const Dataset> data, double lambda) {
  return FiniteSumProblem(std::move(data), lambda);
}

inline FiniteSumProblem logistic_problem(const Dataset& data, double lambda) {
  return FiniteSumProblem(std::make_shared<Dataset>(data), lambda);
}

}  // namespace aopt
