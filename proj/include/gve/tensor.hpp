#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gve::diff {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int shape_size(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

// Handle to a node in a define-by-run computation graph. Copies alias the
// same node; ops build new nodes whose backward closures accumulate into
// their parents. The graph is rebuilt every step, never cached.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v);
  static Tensor identity(int n);
  static Tensor leaf(Shape shape, std::vector<double> values);  // requires_grad

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int size() const { return static_cast<int>(node_->value.size()); }
  bool requires_grad() const { return node_->requires_grad; }

  double item() const;  // contract: scalar
  double at(int i) const { return node_->value[static_cast<size_t>(i)]; }
  double at(int r, int c) const;

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values() { return node_->value; }  // leaf edits only
  const std::vector<double>& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Primitive set (closed): matmul, add, mul, scale, relu, sigmoid, tanh,
// softmax, log, concat, slice, reshape, sum/mean, row_normalize. Everything
// else is composed from these.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor log(const Tensor& x);
Tensor softmax(const Tensor& x, int axis = -1);
// log(softmax(x)) computed in one stable pass; stays finite where the
// softmax itself underflows.
Tensor log_softmax(const Tensor& x, int axis = -1);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int start, int len);
Tensor reshape(const Tensor& x, Shape shape);
Tensor sum(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor mean_rows(const Tensor& x);      // {n,d} -> {d}
Tensor row_normalize(const Tensor& x);  // out rows sum to 1; rowsum must be > 0

struct LstmState {
  Tensor h, c;
};

// Standard gated recurrence, composed from the primitives above so its
// gradient falls out of the graph. w_ih is {4H,D}, w_hh {4H,H}, b {4H};
// gate order along the packed axis: input, forget, cell, output.
LstmState lstm_step(const Tensor& x, const Tensor& h, const Tensor& c,
                    const Tensor& w_ih, const Tensor& w_hh, const Tensor& b);

// Reverse topological accumulation from a scalar loss. Repeated calls
// without zeroing accumulate additively.
void backward(const Tensor& scalar_loss);

// Zero the gradients of every node reachable from root.
void zero_grad_graph(const Tensor& root);

// While one of these is alive on the thread, ops produce values only (no
// parents, no backward closures). Evaluation rollouts that never backprop
// use it to skip graph bookkeeping.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool active();

 private:
  bool prev_;
};

}  // namespace gve::diff
