#include "genlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "genlab/errors.hpp"

namespace genlab::ad {
namespace {

thread_local bool t_grad_enabled = true;

class GradModeScope {
 public:
  explicit GradModeScope(bool enabled) : previous_(t_grad_enabled) { t_grad_enabled = enabled; }
  ~GradModeScope() { t_grad_enabled = previous_; }

 private:
  bool previous_;
};

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out = a;
  for (double& v : out.data()) v = f(v);
  return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f, const char* op) {
  check_same_shape(a, b, op);
  Tensor out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(o[i], bd[i]);
  return out;
}

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Var / Node

const Tensor& Var::value() const {
  if (!node_) throw ContractError("autodiff: use of undefined Var");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }
bool Var::is_leaf() const { return node_ && node_->leaf; }
const char* Var::op_name() const { return node_ ? node_->op : "undefined"; }

void Var::assign(Tensor value) const {
  if (!node_ || !node_->leaf) throw ContractError("autodiff: assign() on a non-leaf node");
  check_same_shape(node_->value, value, "assign");
  node_->value = std::move(value);
}

Var parameter(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "parameter";
  return Var(std::move(n));
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return Var(std::move(n));
}

Var constant(double value) { return constant(Tensor::scalar(value)); }

Var make_op(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Var& p) { return p.requires_grad(); });
  if (t_grad_enabled && any) {
    n->requires_grad = true;
    n->leaf = false;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Var(std::move(n));
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

// ---------------------------------------------------------------------------
// Reverse pass

Tensor Gradients::of(const Var& v) const {
  auto it = adjoints_.find(v.id());
  if (it == adjoints_.end()) return Tensor(v.rows(), v.cols());
  return it->second.value();
}

Var Gradients::var(const Var& v) const {
  auto it = adjoints_.find(v.id());
  if (it == adjoints_.end()) return constant(Tensor(v.rows(), v.cols()));
  return it->second;
}

Gradients backward(const Var& root, bool create_graph) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw ContractError("backward: root must be scalar, got " + root.value().shape_string());
  }
  Gradients result;
  if (!root.requires_grad()) return result;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.id());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const Var& p = node->parents[next++];
      if (p.requires_grad() && seen.insert(p.id()).second) stack.emplace_back(p.node(), 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  GradModeScope mode(create_graph);
  auto& adj = result.adjoints_;
  adj.emplace(root.id(), constant(Tensor::scalar(1.0)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& node = *it;
    auto found = adj.find(node.get());
    if (found == adj.end() || node->leaf || !node->backward) continue;
    const Var out(node);
    std::vector<Var> pg = node->backward(node->parents, out, found->second);
    for (std::size_t i = 0; i < node->parents.size(); ++i) {
      const Var& p = node->parents[i];
      if (!p.requires_grad() || i >= pg.size() || !pg[i].defined()) continue;
      auto [slot, inserted] = adj.try_emplace(p.id(), pg[i]);
      if (!inserted) slot->second = add(slot->second, pg[i]);
    }
  }
  return result;
}

std::vector<Var> grad(const Var& root, std::span<const Var> wrt, bool create_graph) {
  Gradients g = backward(root, create_graph);
  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& v : wrt) out.push_back(g.var(v));
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
  return make_op("add", zip(a.value(), b.value(), std::plus<>{}, "add"), {a, b},
                 [](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{g, g};
                 });
}

Var sub(const Var& a, const Var& b) {
  return make_op("sub", zip(a.value(), b.value(), std::minus<>{}, "sub"), {a, b},
                 [](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{g, neg(g)};
                 });
}

Var mul(const Var& a, const Var& b) {
  return make_op("mul", zip(a.value(), b.value(), std::multiplies<>{}, "mul"), {a, b},
                 [](const std::vector<Var>& p, const Var&, const Var& g) {
                   return std::vector<Var>{p[0].requires_grad() ? mul(g, p[1]) : Var{},
                                           p[1].requires_grad() ? mul(g, p[0]) : Var{}};
                 });
}

Var div(const Var& a, const Var& b) {
  return make_op("div", zip(a.value(), b.value(), std::divides<>{}, "div"), {a, b},
                 [](const std::vector<Var>& p, const Var& out, const Var& g) {
                   Var ga = div(g, p[1]);
                   return std::vector<Var>{ga, p[1].requires_grad() ? neg(mul(ga, out)) : Var{}};
                 });
}

Var neg(const Var& a) {
  return make_op("neg", map(a.value(), [](double v) { return -v; }), {a},
                 [](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{neg(g)};
                 });
}

Var scale(const Var& a, double s) {
  return make_op("scale", map(a.value(), [s](double v) { return v * s; }), {a},
                 [s](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{scale(g, s)};
                 });
}

Var add_scalar(const Var& a, double s) {
  return make_op("add_scalar", map(a.value(), [s](double v) { return v + s; }), {a},
                 [](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{g};
                 });
}

Var exp(const Var& a) {
  return make_op("exp", map(a.value(), [](double v) { return std::exp(v); }), {a},
                 [](const std::vector<Var>&, const Var& out, const Var& g) {
                   return std::vector<Var>{mul(g, out)};
                 });
}

Var log(const Var& a) {
  return make_op("log", map(a.value(), [](double v) { return std::log(v); }), {a},
                 [](const std::vector<Var>& p, const Var&, const Var& g) {
                   return std::vector<Var>{div(g, p[0])};
                 });
}

Var tanh(const Var& a) {
  return make_op("tanh", map(a.value(), [](double v) { return std::tanh(v); }), {a},
                 [](const std::vector<Var>&, const Var& out, const Var& g) {
                   return std::vector<Var>{mul(g, add_scalar(neg(square(out)), 1.0))};
                 });
}

Var sigmoid(const Var& a) {
  return make_op("sigmoid", map(a.value(), sigmoid_scalar), {a},
                 [](const std::vector<Var>&, const Var& out, const Var& g) {
                   return std::vector<Var>{mul(g, mul(out, add_scalar(neg(out), 1.0)))};
                 });
}

Var softplus(const Var& a) {
  return make_op("softplus", map(a.value(), softplus_scalar), {a},
                 [](const std::vector<Var>& p, const Var&, const Var& g) {
                   return std::vector<Var>{mul(g, sigmoid(p[0]))};
                 });
}

Var square(const Var& a) {
  return make_op("square", map(a.value(), [](double v) { return v * v; }), {a},
                 [](const std::vector<Var>& p, const Var&, const Var& g) {
                   return std::vector<Var>{mul(g, scale(p[0], 2.0))};
                 });
}

Var sqrt(const Var& a) {
  return make_op("sqrt", map(a.value(), [](double v) { return std::sqrt(v); }), {a},
                 [](const std::vector<Var>&, const Var& out, const Var& g) {
                   return std::vector<Var>{div(scale(g, 0.5), out)};
                 });
}

Var clamp(const Var& a, double lo, double hi) {
  Tensor mask = map(a.value(), [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
  Tensor val = map(a.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); });
  return make_op("clamp", std::move(val), {a},
                 [mask = std::move(mask)](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{mul(g, constant(mask))};
                 });
}

// ---------------------------------------------------------------------------
// Shape

Var broadcast_to(const Var& a, std::size_t rows, std::size_t cols) {
  const Tensor& v = a.value();
  if (v.rows() == rows && v.cols() == cols) return a;
  if ((v.rows() != rows && v.rows() != 1) || (v.cols() != cols && v.cols() != 1)) {
    throw DimensionError("broadcast: cannot broadcast " + v.shape_string() + " to " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out(i, j) = v(v.rows() == 1 ? 0 : i, v.cols() == 1 ? 0 : j);
  const std::size_t r0 = v.rows(), c0 = v.cols();
  return make_op("broadcast", std::move(out), {a},
                 [r0, c0](const std::vector<Var>&, const Var&, const Var& g) {
                   Var r = g;
                   if (r0 == 1 && r.rows() != 1) r = sum_rows(r);
                   if (c0 == 1 && r.cols() != 1) r = sum_cols(r);
                   return std::vector<Var>{r};
                 });
}

Var matmul(const Var& a, const Var& b) {
  return make_op("matmul", genlab::matmul(a.value(), b.value()), {a, b},
                 [](const std::vector<Var>& p, const Var&, const Var& g) {
                   return std::vector<Var>{
                       p[0].requires_grad() ? matmul(g, transpose(p[1])) : Var{},
                       p[1].requires_grad() ? matmul(transpose(p[0]), g) : Var{}};
                 });
}

Var transpose(const Var& a) {
  return make_op("transpose", genlab::transpose(a.value()), {a},
                 [](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{transpose(g)};
                 });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t r = a.rows(), c = a.cols();
  return make_op("sum", Tensor::scalar(s), {a},
                 [r, c](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{broadcast_to(g, r, c)};
                 });
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var sum_rows(const Var& a) {
  const Tensor& v = a.value();
  Tensor out(1, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(0, j) += v(i, j);
  const std::size_t r = v.rows(), c = v.cols();
  return make_op("sum_rows", std::move(out), {a},
                 [r, c](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{broadcast_to(g, r, c)};
                 });
}

Var sum_cols(const Var& a) {
  const Tensor& v = a.value();
  Tensor out(v.rows(), 1);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, 0) += v(i, j);
  const std::size_t r = v.rows(), c = v.cols();
  return make_op("sum_cols", std::move(out), {a},
                 [r, c](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{broadcast_to(g, r, c)};
                 });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  const Tensor& v = a.value();
  if (begin > end || end > v.cols()) throw DimensionError("slice_cols: range out of bounds");
  Tensor out(v.rows(), end - begin);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = v(i, j);
  const std::size_t total = v.cols();
  return make_op("slice_cols", std::move(out), {a},
                 [begin, total](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{pad_cols(g, begin, total)};
                 });
}

Var pad_cols(const Var& a, std::size_t begin, std::size_t total) {
  const Tensor& v = a.value();
  if (begin + v.cols() > total) throw DimensionError("pad_cols: block does not fit");
  Tensor out(v.rows(), total);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, begin + j) = v(i, j);
  const std::size_t end = begin + v.cols();
  return make_op("pad_cols", std::move(out), {a},
                 [begin, end](const std::vector<Var>&, const Var&, const Var& g) {
                   return std::vector<Var>{slice_cols(g, begin, end)};
                 });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw DimensionError("concat_cols: row count mismatch");
    offsets.push_back(total);
    total += p.cols();
  }
  offsets.push_back(total);
  Tensor out(rows, total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offsets[k] + j) = v(i, j);
  }
  return make_op("concat_cols", std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                 [offsets](const std::vector<Var>& p, const Var&, const Var& g) {
                   std::vector<Var> r;
                   r.reserve(p.size());
                   for (std::size_t k = 0; k < p.size(); ++k)
                     r.push_back(p[k].requires_grad() ? slice_cols(g, offsets[k], offsets[k + 1])
                                                      : Var{});
                   return r;
                 });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

// ---------------------------------------------------------------------------
// Operators with rank-2 broadcasting

namespace {

std::pair<Var, Var> broadcast_pair(const Var& a, const Var& b, const char* op) {
  const std::size_t ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  auto common = [op](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw DimensionError(std::string(op) + ": incompatible dimensions " + std::to_string(x) +
                         " and " + std::to_string(y));
  };
  const std::size_t r = common(ra, rb), c = common(ca, cb);
  return {broadcast_to(a, r, c), broadcast_to(b, r, c)};
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  auto [x, y] = broadcast_pair(a, b, "+");
  return add(x, y);
}
Var operator-(const Var& a, const Var& b) {
  auto [x, y] = broadcast_pair(a, b, "-");
  return sub(x, y);
}
Var operator*(const Var& a, const Var& b) {
  auto [x, y] = broadcast_pair(a, b, "*");
  return mul(x, y);
}
Var operator/(const Var& a, const Var& b) {
  auto [x, y] = broadcast_pair(a, b, "/");
  return div(x, y);
}
Var operator-(const Var& a) { return neg(a); }
Var operator+(const Var& a, double s) { return add_scalar(a, s); }
Var operator+(double s, const Var& a) { return add_scalar(a, s); }
Var operator-(const Var& a, double s) { return add_scalar(a, -s); }
Var operator-(double s, const Var& a) { return add_scalar(neg(a), s); }
Var operator*(const Var& a, double s) { return scale(a, s); }
Var operator*(double s, const Var& a) { return scale(a, s); }
Var operator/(const Var& a, double s) { return scale(a, 1.0 / s); }

// ---------------------------------------------------------------------------
// Finite differences

namespace {

// Evaluations keep recording so fn may take gradients internally.
double checked_eval(const std::function<double()>& f) {
  const double v = f();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite evaluation");
  return v;
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + 1e-12);
}

}  // namespace

double finite_diff_check(const std::function<Var(const Var&)>& fn, const Tensor& point,
                         double h) {
  require(h > 0.0, "finite_diff_check: step must be positive");
  Var x = parameter(point);
  Var y = fn(x);
  if (!std::isfinite(y.item())) throw NumericError("finite_diff_check: non-finite evaluation");
  const Tensor analytic = backward(y).of(x);
  double worst = 0.0;
  Tensor p = point;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    auto eval = [&](double v) {
      p[i] = v;
      return checked_eval([&] { return fn(parameter(p)).item(); });
    };
    const double fp = eval(orig + h);
    const double fm = eval(orig - h);
    p[i] = orig;
    worst = std::max(worst, rel_err(analytic[i], (fp - fm) / (2.0 * h)));
  }
  return worst;
}

double finite_diff_check(const std::function<Var()>& fn, std::span<const Var> params, double h) {
  require(h > 0.0, "finite_diff_check: step must be positive");
  Var y = fn();
  if (!std::isfinite(y.item())) throw NumericError("finite_diff_check: non-finite evaluation");
  Gradients g = backward(y);
  double worst = 0.0;
  for (const Var& prm : params) {
    const Tensor analytic = g.of(prm);
    const Tensor orig = prm.value();
    Tensor p = orig;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto eval = [&](double v) {
        p[i] = v;
        prm.assign(p);
        return checked_eval([&] { return fn().item(); });
      };
      const double fp = eval(orig[i] + h);
      const double fm = eval(orig[i] - h);
      p[i] = orig[i];
      prm.assign(orig);
      worst = std::max(worst, rel_err(analytic[i], (fp - fm) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace genlab::ad
