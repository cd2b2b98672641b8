#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sbbv/matrix.hpp"

namespace sbbv {

// One trainable tensor. Gradients are accumulated here by the optimizer
// driver after per-sample tapes finish, in a fixed sample order.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  ParamTensor(std::string n, Matrix v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows, value.cols),
        adam_m(value.rows, value.cols),
        adam_v(value.rows, value.cols) {}

  void zero_grad() { std::fill(grad.a.begin(), grad.a.end(), 0.0); }
};

// Ordered collection of parameters. Registration order is the
// serialization order, so manifests are stable across runs.
class ParamStore {
 public:
  ParamTensor& add(const std::string& name, Matrix init);
  ParamTensor* find(const std::string& name);
  const ParamTensor* find(const std::string& name) const;

  std::vector<ParamTensor*> all();
  std::size_t total_size() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<ParamTensor>> params_;
};

// Reverse-mode autodiff over matrices. A tape is built per forward pass
// and discarded; parameters live outside it. Not thread-safe; use one
// tape per worker.
class Tape {
 public:
  using Ref = int;

  // Leaves.
  Ref leaf(Matrix m);                // constant, no gradient
  Ref param(ParamTensor& p);         // differentiable, grad lands in p via param_grads()

  const Matrix& val(Ref r) const { return nodes_[static_cast<std::size_t>(r)].val; }
  double scalar(Ref r) const { return nodes_[static_cast<std::size_t>(r)].val.a[0]; }
  const Matrix& grad_of(Ref r) const { return nodes_[static_cast<std::size_t>(r)].grad; }

  // Elementwise and linear algebra.
  Ref matmul(Ref x, Ref y);
  Ref add(Ref x, Ref y);
  Ref sub(Ref x, Ref y);
  Ref mul(Ref x, Ref y);
  Ref scale(Ref x, double s);
  Ref add_scalar(Ref x, double s);
  Ref add_rowvec(Ref x, Ref row);    // broadcast a 1xC row over all rows of x
  Ref transpose(Ref x);

  // Shape surgery.
  Ref row(Ref x, std::size_t r);
  Ref stack_rows(const std::vector<Ref>& rows);
  Ref cols(Ref x, std::size_t c0, std::size_t c1);  // [c0, c1)
  Ref concat_cols(const std::vector<Ref>& parts);
  Ref gather_rows(Ref table, const std::vector<int>& ids);

  // Nonlinearities.
  Ref sigmoid(Ref x);
  Ref tanh_(Ref x);
  Ref silu(Ref x);
  Ref softplus(Ref x);
  Ref relu(Ref x);
  Ref huber(Ref x, double delta);
  Ref sqrt_eps(Ref x, double eps);   // sqrt(x + eps), keeps distances differentiable at 0

  // Row-structured ops.
  Ref scale_rows(Ref x, Ref r);      // row i of x scaled by r(0, i)
  Ref layer_norm(Ref x, Ref gain, Ref bias, double eps);
  Ref softmax_rows(Ref x);
  Ref masked_softmax_row(Ref e, const std::vector<char>& keep);
  Ref l2_normalize_rows(Ref x, double eps);

  // Reductions.
  Ref sum(Ref x);                    // 1x1
  Ref mean_all(Ref x);               // 1x1

  // Mean cross-entropy of row-wise softmax against integer targets;
  // rows whose target equals ignore_index contribute nothing.
  Ref softmax_xent_rows(Ref logits, const std::vector<int>& targets, int ignore_index);

  // Reverse sweep from a 1x1 loss node.
  void backward(Ref loss);

  // Per-parameter gradients accumulated by this tape, in param() call order.
  const std::vector<std::pair<ParamTensor*, Matrix>>& param_grads() const { return param_grads_; }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix val;
    Matrix grad;
    std::function<void(Tape&)> back;  // null for constants
  };

  Ref push(Matrix val, std::function<void(Tape&)> back);
  Matrix& grad_mut(Ref r) { return nodes_[static_cast<std::size_t>(r)].grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<ParamTensor*, Matrix>> param_grads_;
  std::vector<std::pair<Ref, std::size_t>> param_nodes_;  // node -> param_grads_ slot
};

// Adam with bias correction; steps the given tensors in order.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamTensor*>& params);
  void reset() { t_ = 0; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Max relative error between analytic and central-difference gradients
// over every entry of every tensor in `params`. `loss_fn` must rebuild the
// forward pass from current parameter values.
struct GradCheckEntry {
  std::string tensor;
  double max_rel_err;
};
struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
};
GradCheckReport gradient_check(const std::vector<ParamTensor*>& params,
                               const std::function<double(bool with_grad)>& loss_fn,
                               double step = 1e-5);

}  // namespace sbbv
