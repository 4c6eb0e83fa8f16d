#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "tinyssd/matching.hpp"

namespace tinyssd {

// smooth L1: 0.5 x^2 inside |x| < 1, |x| - 0.5 outside.
inline double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

inline double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

// Raw per-prior network outputs: class logits (background is column 0) and
// box offsets, one row per default box in canonical prior order.
template <typename T>
struct Predictions {
  size_t num_priors = 0;
  int num_classes = 0;     // foreground classes; logits have num_classes + 1 columns
  std::vector<T> conf;     // num_priors x (num_classes + 1), row-major
  std::vector<T> loc;      // num_priors x 4, row-major

  int logit_cols() const { return num_classes + 1; }
  const T* conf_row(size_t i) const { return conf.data() + i * logit_cols(); }
  const T* loc_row(size_t i) const { return loc.data() + i * 4; }
};

template <typename T>
struct LossReport {
  double conf_loss = 0.0;  // softmax term, before the 1/N factor
  double loc_loss = 0.0;   // smooth-L1 term, before the 1/N factor
  double total = 0.0;      // (conf + alpha * loc) / N; 0 when N == 0
  int num_pos = 0;
  std::vector<T> grad_conf;  // d total / d logits, zero on unselected rows
  std::vector<T> grad_loc;   // d total / d offsets
};

struct MultiBoxConfig {
  double alpha = 1.0;          // weight on the localization term
  double neg_pos_ratio = 3.0;  // hard-negative budget per positive
};

namespace detail {

// -log softmax(row)[target]; optionally writes (softmax - onehot) into grad.
template <typename T>
double row_softmax_loss(const T* row, int n, int target, double* grad) {
  double mx = double(row[0]);
  for (int k = 1; k < n; ++k) mx = std::max(mx, double(row[k]));
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += std::exp(double(row[k]) - mx);
  if (grad) {
    for (int k = 0; k < n; ++k)
      grad[k] = std::exp(double(row[k]) - mx) / sum - (k == target ? 1.0 : 0.0);
  }
  return mx + std::log(sum) - double(row[target]);
}

template <typename T>
void check_shapes(const Predictions<T>& pred, const MatchAssignment& m) {
  if (pred.conf.size() != pred.num_priors * size_t(pred.logit_cols()) ||
      pred.loc.size() != pred.num_priors * 4)
    throw std::invalid_argument("predictions: inconsistent tensor sizes");
  if (m.size() != pred.num_priors)
    throw std::invalid_argument("predictions/assignment size mismatch");
}

}  // namespace detail

// Indices of the hardest negatives: per-prior background softmax loss, sorted
// descending (ties toward the lower index), truncated to floor(ratio * N).
// Empty when there are no positives.
template <typename T>
std::vector<size_t> hard_negative_select(const Predictions<T>& pred,
                                         const MatchAssignment& m,
                                         double ratio = 3.0) {
  if (!(ratio > 0.0))
    throw std::invalid_argument("hard_negative_select: ratio must be > 0");
  detail::check_shapes(pred, m);
  if (m.num_pos == 0) return {};

  std::vector<std::pair<double, size_t>> neg;
  neg.reserve(pred.num_priors);
  for (size_t i = 0; i < pred.num_priors; ++i) {
    if (m.positive(i)) continue;
    neg.emplace_back(
        detail::row_softmax_loss(pred.conf_row(i), pred.logit_cols(), 0,
                                 nullptr),
        i);
  }
  const size_t budget =
      std::min(size_t(std::floor(ratio * m.num_pos)), neg.size());
  std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<size_t> out(budget);
  for (size_t k = 0; k < budget; ++k) out[k] = neg[k].second;
  return out;
}

// Softmax confidence loss over positives plus the selected negatives
// (unnormalized). The gradient, when requested, is (softmax - onehot) on
// contributing rows and zero elsewhere.
template <typename T>
double conf_loss(const Predictions<T>& pred, const MatchAssignment& m,
                 std::span<const size_t> selected_negs,
                 std::vector<T>* grad = nullptr) {
  detail::check_shapes(pred, m);
  const int cols = pred.logit_cols();
  if (grad) grad->assign(pred.conf.size(), T(0));
  std::vector<double> grow(cols);

  auto add_row = [&](size_t i, int target) {
    const double l = detail::row_softmax_loss(pred.conf_row(i), cols, target,
                                              grad ? grow.data() : nullptr);
    if (grad)
      for (int k = 0; k < cols; ++k) (*grad)[i * cols + k] = T(grow[k]);
    return l;
  };

  double loss = 0.0;
  for (size_t i = 0; i < pred.num_priors; ++i)
    if (m.positive(i)) loss += add_row(i, m.label[i]);
  for (size_t i : selected_negs) {
    if (m.positive(i))
      throw std::invalid_argument("conf_loss: selected negative is positive");
    loss += add_row(i, 0);
  }
  return loss;
}

// Smooth-L1 localization loss over positive priors (unnormalized).
template <typename T>
double loc_loss(const Predictions<T>& pred, const MatchAssignment& m,
                std::vector<T>* grad = nullptr) {
  detail::check_shapes(pred, m);
  if (grad) grad->assign(pred.loc.size(), T(0));
  double loss = 0.0;
  for (size_t i = 0; i < pred.num_priors; ++i) {
    if (!m.positive(i)) continue;
    const OffsetVector& t = m.target[i];
    const double target[4] = {t.tcx, t.tcy, t.tw, t.th};
    const T* row = pred.loc_row(i);
    for (int k = 0; k < 4; ++k) {
      const double diff = double(row[k]) - target[k];
      loss += smooth_l1(diff);
      if (grad) (*grad)[i * 4 + k] = T(smooth_l1_grad(diff));
    }
  }
  return loss;
}

// The full training objective: (conf + alpha * loc) / N with hard-negative
// mining, plus gradients w.r.t. the raw network outputs. N == 0 yields an
// all-zero report.
template <typename T>
LossReport<T> multibox_loss(const Predictions<T>& pred,
                            const MatchAssignment& m,
                            const MultiBoxConfig& cfg = {}) {
  detail::check_shapes(pred, m);
  for (T v : pred.conf)
    if (!std::isfinite(double(v)))
      throw std::invalid_argument("multibox_loss: non-finite confidence");
  for (T v : pred.loc)
    if (!std::isfinite(double(v)))
      throw std::invalid_argument("multibox_loss: non-finite offset");

  LossReport<T> report;
  report.num_pos = m.num_pos;
  report.grad_conf.assign(pred.conf.size(), T(0));
  report.grad_loc.assign(pred.loc.size(), T(0));
  if (m.num_pos == 0) return report;

  const auto negs = hard_negative_select(pred, m, cfg.neg_pos_ratio);
  report.conf_loss = conf_loss(pred, m, negs, &report.grad_conf);
  report.loc_loss = loc_loss(pred, m, &report.grad_loc);
  report.total = (report.conf_loss + cfg.alpha * report.loc_loss) / m.num_pos;

  const double inv_n = 1.0 / m.num_pos;
  for (T& g : report.grad_conf) g = T(double(g) * inv_n);
  for (T& g : report.grad_loc) g = T(double(g) * cfg.alpha * inv_n);
  return report;
}

}  // namespace tinyssd
