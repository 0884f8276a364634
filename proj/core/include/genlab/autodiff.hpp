#pragma once

// Define-by-run reverse-mode automatic differentiation over rank-2 tensors.
//
// Every operation records its parents and a backward rule written in terms of
// other differentiable operations. Running backward() with create_graph=true
// therefore produces adjoints that are themselves differentiable, which is how
// input-gradient penalties and exact Jacobian traces of score fields are
// differentiated again. Graphs are rebuilt every step; nodes are immutable
// except for parameter leaves, whose values the optimizer replaces in place.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "genlab/tensor.hpp"

namespace genlab::ad {

struct Node;

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const { return value().item(); }
  bool requires_grad() const;
  bool is_leaf() const;
  const char* op_name() const;

  // Replaces the value of a leaf (parameter update). Shape must not change.
  void assign(Tensor value) const;

  const Node* id() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using BackwardFn =
    std::function<std::vector<Var>(const std::vector<Var>& parents, const Var& out, const Var& grad)>;

struct Node {
  Tensor value;
  std::vector<Var> parents;
  BackwardFn backward;
  const char* op = "leaf";
  bool requires_grad = false;
  bool leaf = true;
};

// Leaf holding a trainable value.
Var parameter(Tensor value);
// Leaf that takes no part in differentiation.
Var constant(Tensor value);
Var constant(double value);

// Records a new node (used by every op; exposed for custom primitives).
Var make_op(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward);

// While alive, new operations record no history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

// Adjoints of a scalar root with respect to every node it depends on.
class Gradients {
 public:
  // Adjoint of v; zeros shaped like v when v was not reached.
  Tensor of(const Var& v) const;
  // Adjoint as a Var (differentiable when produced with create_graph).
  Var var(const Var& v) const;
  bool contains(const Var& v) const { return adjoints_.count(v.id()) != 0; }

 private:
  friend Gradients backward(const Var&, bool);
  std::unordered_map<const Node*, Var> adjoints_;
};

// Reverse pass from a 1×1 root. Throws ContractError for a non-scalar root.
Gradients backward(const Var& root, bool create_graph = false);
// Adjoints of root with respect to each of wrt.
std::vector<Var> grad(const Var& root, std::span<const Var> wrt, bool create_graph = false);

// ---- elementwise (shapes must agree; operators broadcast 1-sized dims) ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var square(const Var& a);
Var sqrt(const Var& a);
// Hard clamp; gradient passes where lo <= a <= hi.
Var clamp(const Var& a, double lo, double hi);

// ---- shape ----
Var broadcast_to(const Var& a, std::size_t rows, std::size_t cols);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
// Sum over rows: r×c -> 1×c.
Var sum_rows(const Var& a);
// Sum over columns: r×c -> r×1.
Var sum_cols(const Var& a);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var pad_cols(const Var& a, std::size_t begin, std::size_t total);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double s);
Var operator+(double s, const Var& a);
Var operator-(const Var& a, double s);
Var operator-(double s, const Var& a);
Var operator*(const Var& a, double s);
Var operator*(double s, const Var& a);
Var operator/(const Var& a, double s);

// Max over coordinates of |analytic − central difference| / (|analytic| + 1e-12)
// for a scalar function of one tensor. Throws NumericError on non-finite
// evaluations.
double finite_diff_check(const std::function<Var(const Var&)>& fn, const Tensor& point,
                         double h = 1e-5);
// Same check over the current values of parameter leaves; fn rebuilds the
// graph from those leaves on every call.
double finite_diff_check(const std::function<Var()>& fn, std::span<const Var> params,
                         double h = 1e-5);

}  // namespace genlab::ad
