#include "gve/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace gve::diff {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr new_node(Shape shape, std::vector<double> value) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  return n;
}

thread_local bool t_no_grad = false;

Tensor make_op(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
               std::function<void(Node&)> backward_fn) {
  auto n = new_node(std::move(shape), std::move(value));
  if (!t_no_grad) {
    for (const auto& p : parents) {
      if (p->requires_grad) {
        n->requires_grad = true;
        break;
      }
    }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

[[noreturn]] void dim_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

bool is_matrix(const Shape& s) { return s.size() == 2; }
bool is_vector(const Shape& s) { return s.size() == 1; }

void require_same_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) dim_error(op, a.shape(), b.shape());
}

NodePtr own(const Tensor& t) { return t.shared_node(); }

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape_size(shape) != static_cast<int>(values.size()))
    throw std::invalid_argument("constant: " + shape_str(shape) + " needs " +
                                std::to_string(shape_size(shape)) + " values, got " +
                                std::to_string(values.size()));
  return Tensor(new_node(std::move(shape), std::move(values)));
}

Tensor Tensor::zeros(Shape shape) {
  size_t n = static_cast<size_t>(shape_size(shape));
  return Tensor(new_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(Shape shape, double v) {
  size_t n = static_cast<size_t>(shape_size(shape));
  return Tensor(new_node(std::move(shape), std::vector<double>(n, v)));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::identity(int n) {
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;
  return constant({n, n}, std::move(v));
}

Tensor Tensor::leaf(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node()->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (size() != 1)
    throw std::logic_error("item: tensor is not scalar, shape " + shape_str(shape()));
  return node_->value[0];
}

double Tensor::at(int r, int c) const {
  return node_->value[static_cast<size_t>(r) * shape()[1] + c];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  int m, k, n;
  const bool a_vec = is_vector(sa), b_vec = is_vector(sb);
  if (is_matrix(sa) && is_matrix(sb)) {
    m = sa[0], k = sa[1], n = sb[1];
    if (sb[0] != k) dim_error("matmul", sa, sb);
  } else if (is_matrix(sa) && b_vec) {
    m = sa[0], k = sa[1], n = 1;
    if (sb[0] != k) dim_error("matmul", sa, sb);
  } else if (a_vec && is_matrix(sb)) {
    m = 1, k = sa[0], n = sb[1];
    if (sb[0] != k) dim_error("matmul", sa, sb);
  } else {
    dim_error("matmul", sa, sb);
    return {};
  }

  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  {
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        const double aip = av[static_cast<size_t>(i) * k + p];
        if (aip == 0.0) continue;
        const double* brow = &bv[static_cast<size_t>(p) * n];
        double* orow = &out[static_cast<size_t>(i) * n];
        for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
      }
  }

  Shape out_shape = a_vec ? Shape{n} : (b_vec ? Shape{m} : Shape{m, n});
  return make_op(std::move(out_shape), std::move(out), {own(a), own(b)},
                 [m, k, n](Node& self) {
                   Node& pa = *self.parents[0];
                   Node& pb = *self.parents[1];
                   const auto& g = self.grad;
                   if (pa.requires_grad) {
                     pa.ensure_grad();
                     // dA = dC * B^T
                     for (int i = 0; i < m; ++i)
                       for (int p = 0; p < k; ++p) {
                         double acc = 0.0;
                         const double* grow = &g[static_cast<size_t>(i) * n];
                         const double* brow = &pb.value[static_cast<size_t>(p) * n];
                         for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                         pa.grad[static_cast<size_t>(i) * k + p] += acc;
                       }
                   }
                   if (pb.requires_grad) {
                     pb.ensure_grad();
                     // dB = A^T * dC
                     for (int p = 0; p < k; ++p)
                       for (int i = 0; i < m; ++i) {
                         const double aip = pa.value[static_cast<size_t>(i) * k + p];
                         if (aip == 0.0) continue;
                         const double* grow = &g[static_cast<size_t>(i) * n];
                         double* brow = &pb.grad[static_cast<size_t>(p) * n];
                         for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
                       }
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_op(a.shape(), std::move(out), {own(a), own(b)}, [](Node& self) {
    for (int side = 0; side < 2; ++side) {
      Node& p = *self.parents[side];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_op(a.shape(), std::move(out), {own(a), own(b)}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= c;
  return make_op(a.shape(), std::move(out), {own(a)}, [c](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += c * self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return make_op(x.shape(), std::move(out), {own(x)}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.values());
  for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  return make_op(x.shape(), std::move(out), {own(x)}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      p.grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.values());
  for (double& v : out) v = std::tanh(v);
  return make_op(x.shape(), std::move(out), {own(x)}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double t = self.value[i];
      p.grad[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Tensor log(const Tensor& x) {
  std::vector<double> out(x.values());
  for (double& v : out) v = std::log(v);
  return make_op(x.shape(), std::move(out), {own(x)}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      p.grad[i] += self.grad[i] / p.value[i];
  });
}

namespace {

// Max-subtracted softmax over a contiguous stretch with stride 1.
void softmax_span(const double* in, double* out, int k) {
  double mx = in[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, in[i]);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[i] = std::exp(in[i] - mx);
    sum += out[i];
  }
  for (int i = 0; i < k; ++i) out[i] /= sum;
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
  const Shape& s = x.shape();
  int rows, k;
  if (is_vector(s)) {
    rows = 1;
    k = s[0];
  } else if (is_matrix(s) && (axis == -1 || axis == 1)) {
    rows = s[0];
    k = s[1];
  } else {
    throw std::invalid_argument("softmax: unsupported shape " + shape_str(s) +
                                " for axis " + std::to_string(axis));
  }
  std::vector<double> out(x.values().size());
  for (int r = 0; r < rows; ++r)
    softmax_span(&x.values()[static_cast<size_t>(r) * k], &out[static_cast<size_t>(r) * k], k);

  return make_op(s, std::move(out), {own(x)}, [rows, k](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const double* sv = &self.value[static_cast<size_t>(r) * k];
      const double* g = &self.grad[static_cast<size_t>(r) * k];
      double dot = 0.0;
      for (int i = 0; i < k; ++i) dot += g[i] * sv[i];
      double* pg = &p.grad[static_cast<size_t>(r) * k];
      for (int i = 0; i < k; ++i) pg[i] += sv[i] * (g[i] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& x, int axis) {
  const Shape& s = x.shape();
  int rows, k;
  if (is_vector(s)) {
    rows = 1;
    k = s[0];
  } else if (is_matrix(s) && (axis == -1 || axis == 1)) {
    rows = s[0];
    k = s[1];
  } else {
    throw std::invalid_argument("log_softmax: unsupported shape " + shape_str(s) +
                                " for axis " + std::to_string(axis));
  }
  std::vector<double> out(x.values().size());
  for (int r = 0; r < rows; ++r) {
    const double* in = &x.values()[static_cast<size_t>(r) * k];
    double* o = &out[static_cast<size_t>(r) * k];
    double mx = in[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, in[i]);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += std::exp(in[i] - mx);
    const double lse = mx + std::log(sum);
    for (int i = 0; i < k; ++i) o[i] = in[i] - lse;
  }
  return make_op(s, std::move(out), {own(x)}, [rows, k](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const double* lv = &self.value[static_cast<size_t>(r) * k];
      const double* g = &self.grad[static_cast<size_t>(r) * k];
      double gsum = 0.0;
      for (int i = 0; i < k; ++i) gsum += g[i];
      double* pg = &p.grad[static_cast<size_t>(r) * k];
      for (int i = 0; i < k; ++i) pg[i] += g[i] - std::exp(lv[i]) * gsum;
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts[0].shape();

  if (is_vector(first)) {
    if (axis != 0) throw std::invalid_argument("concat: vector inputs need axis 0");
    int total = 0;
    std::vector<NodePtr> parents;
    for (const auto& t : parts) {
      if (!is_vector(t.shape())) dim_error("concat", first, t.shape());
      total += t.shape()[0];
      parents.push_back(own(t));
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(total));
    for (const auto& t : parts)
      out.insert(out.end(), t.values().begin(), t.values().end());
    return make_op({total}, std::move(out), std::move(parents), [](Node& self) {
      size_t off = 0;
      for (auto& pp : self.parents) {
        Node& p = *pp;
        if (p.requires_grad) {
          p.ensure_grad();
          for (size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[off + i];
        }
        off += p.value.size();
      }
    });
  }

  if (!is_matrix(first)) throw std::invalid_argument("concat: rank > 2 unsupported");

  if (axis == 0) {
    int rows = 0;
    const int cols = first[1];
    std::vector<NodePtr> parents;
    std::vector<double> out;
    for (const auto& t : parts) {
      if (!is_matrix(t.shape()) || t.shape()[1] != cols) dim_error("concat", first, t.shape());
      rows += t.shape()[0];
      parents.push_back(own(t));
      out.insert(out.end(), t.values().begin(), t.values().end());
    }
    return make_op({rows, cols}, std::move(out), std::move(parents), [](Node& self) {
      size_t off = 0;
      for (auto& pp : self.parents) {
        Node& p = *pp;
        if (p.requires_grad) {
          p.ensure_grad();
          for (size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[off + i];
        }
        off += p.value.size();
      }
    });
  }

  if (axis == 1) {
    const int rows = first[0];
    int cols = 0;
    std::vector<NodePtr> parents;
    std::vector<int> widths;
    for (const auto& t : parts) {
      if (!is_matrix(t.shape()) || t.shape()[0] != rows) dim_error("concat", first, t.shape());
      widths.push_back(t.shape()[1]);
      cols += t.shape()[1];
      parents.push_back(own(t));
    }
    std::vector<double> out(static_cast<size_t>(rows) * cols);
    int col_off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
      const auto& v = parts[pi].values();
      const int w = widths[pi];
      for (int r = 0; r < rows; ++r)
        std::copy_n(&v[static_cast<size_t>(r) * w], w,
                    &out[static_cast<size_t>(r) * cols + col_off]);
      col_off += w;
    }
    return make_op({rows, cols}, std::move(out), std::move(parents),
                   [rows, cols, widths](Node& self) {
                     int col_off = 0;
                     for (size_t pi = 0; pi < self.parents.size(); ++pi) {
                       Node& p = *self.parents[pi];
                       const int w = widths[pi];
                       if (p.requires_grad) {
                         p.ensure_grad();
                         for (int r = 0; r < rows; ++r)
                           for (int j = 0; j < w; ++j)
                             p.grad[static_cast<size_t>(r) * w + j] +=
                                 self.grad[static_cast<size_t>(r) * cols + col_off + j];
                       }
                       col_off += w;
                     }
                   });
  }

  throw std::invalid_argument("concat: axis " + std::to_string(axis) + " unsupported");
}

Tensor slice(const Tensor& x, int axis, int start, int len) {
  const Shape& s = x.shape();
  auto check = [&](int extent) {
    if (start < 0 || len <= 0 || start + len > extent)
      throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                  std::to_string(start + len) + ") out of extent " +
                                  std::to_string(extent));
  };

  if (is_vector(s)) {
    if (axis != 0) throw std::invalid_argument("slice: vector input needs axis 0");
    check(s[0]);
    std::vector<double> out(x.values().begin() + start, x.values().begin() + start + len);
    return make_op({len}, std::move(out), {own(x)}, [start, len](Node& self) {
      Node& p = *self.parents[0];
      p.ensure_grad();
      for (int i = 0; i < len; ++i) p.grad[static_cast<size_t>(start + i)] += self.grad[i];
    });
  }

  if (!is_matrix(s)) throw std::invalid_argument("slice: rank > 2 unsupported");
  const int rows = s[0], cols = s[1];

  if (axis == 0) {
    check(rows);
    std::vector<double> out(x.values().begin() + static_cast<size_t>(start) * cols,
                            x.values().begin() + static_cast<size_t>(start + len) * cols);
    return make_op({len, cols}, std::move(out), {own(x)}, [start, len, cols](Node& self) {
      Node& p = *self.parents[0];
      p.ensure_grad();
      for (size_t i = 0; i < static_cast<size_t>(len) * cols; ++i)
        p.grad[static_cast<size_t>(start) * cols + i] += self.grad[i];
    });
  }

  if (axis == 1) {
    check(cols);
    std::vector<double> out(static_cast<size_t>(rows) * len);
    for (int r = 0; r < rows; ++r)
      std::copy_n(&x.values()[static_cast<size_t>(r) * cols + start], len,
                  &out[static_cast<size_t>(r) * len]);
    return make_op({rows, len}, std::move(out), {own(x)},
                   [rows, cols, start, len](Node& self) {
                     Node& p = *self.parents[0];
                     p.ensure_grad();
                     for (int r = 0; r < rows; ++r)
                       for (int j = 0; j < len; ++j)
                         p.grad[static_cast<size_t>(r) * cols + start + j] +=
                             self.grad[static_cast<size_t>(r) * len + j];
                   });
  }

  throw std::invalid_argument("slice: axis " + std::to_string(axis) + " unsupported");
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    dim_error("reshape", x.shape(), shape);
  return make_op(std::move(shape), x.values(), {own(x)}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_op({1}, {acc}, {own(x)}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (double& g : p.grad) g += self.grad[0];
  });
}

Tensor mean_all(const Tensor& x) { return scale(sum(x), 1.0 / x.size()); }

Tensor mean_rows(const Tensor& x) {
  const Shape& s = x.shape();
  if (!is_matrix(s)) throw std::invalid_argument("mean_rows: needs matrix, got " + shape_str(s));
  const int rows = s[0], cols = s[1];
  std::vector<double> out(static_cast<size_t>(cols), 0.0);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < cols; ++j) out[j] += x.values()[static_cast<size_t>(r) * cols + j];
  for (double& v : out) v /= rows;
  return make_op({cols}, std::move(out), {own(x)}, [rows, cols](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    const double inv = 1.0 / rows;
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < cols; ++j)
        p.grad[static_cast<size_t>(r) * cols + j] += self.grad[j] * inv;
  });
}

Tensor row_normalize(const Tensor& x) {
  const Shape& s = x.shape();
  if (!is_matrix(s))
    throw std::invalid_argument("row_normalize: needs matrix, got " + shape_str(s));
  const int rows = s[0], cols = s[1];
  std::vector<double> out(x.values());
  std::vector<double> rowsum(static_cast<size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) acc += out[static_cast<size_t>(r) * cols + j];
    if (acc <= 0.0)
      throw std::invalid_argument("row_normalize: row " + std::to_string(r) +
                                  " has non-positive sum");
    rowsum[static_cast<size_t>(r)] = acc;
    for (int j = 0; j < cols; ++j) out[static_cast<size_t>(r) * cols + j] /= acc;
  }
  return make_op(s, std::move(out), {own(x)}, [rows, cols, rowsum](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const double* g = &self.grad[static_cast<size_t>(r) * cols];
      const double* o = &self.value[static_cast<size_t>(r) * cols];
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += g[j] * o[j];
      const double inv = 1.0 / rowsum[static_cast<size_t>(r)];
      double* pg = &p.grad[static_cast<size_t>(r) * cols];
      for (int j = 0; j < cols; ++j) pg[j] += (g[j] - dot) * inv;
    }
  });
}

LstmState lstm_step(const Tensor& x, const Tensor& h, const Tensor& c,
                    const Tensor& w_ih, const Tensor& w_hh, const Tensor& b) {
  const int hidden = h.shape()[0];
  if (w_ih.shape()[0] != 4 * hidden || w_hh.shape()[0] != 4 * hidden ||
      w_hh.shape()[1] != hidden || b.shape()[0] != 4 * hidden ||
      w_ih.shape()[1] != x.shape()[0])
    throw std::invalid_argument("lstm_step: inconsistent dims, x " + shape_str(x.shape()) +
                                " h " + shape_str(h.shape()) + " w_ih " +
                                shape_str(w_ih.shape()) + " w_hh " + shape_str(w_hh.shape()));
  Tensor z = add(add(matmul(w_ih, x), matmul(w_hh, h)), b);
  Tensor i = sigmoid(slice(z, 0, 0, hidden));
  Tensor f = sigmoid(slice(z, 0, hidden, hidden));
  Tensor g = tanh(slice(z, 0, 2 * hidden, hidden));
  Tensor o = sigmoid(slice(z, 0, 3 * hidden, hidden));
  Tensor c_next = add(mul(f, c), mul(i, g));
  Tensor h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

namespace {

// Iterative post-order over the requires-grad subgraph.
std::vector<Node*> topo_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* next = node->parents[idx++].get();
      if (next->requires_grad && !visited.count(next)) {
        visited.insert(next);
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // children after their parents; reverse for backprop
}

}  // namespace

void backward(const Tensor& scalar_loss) {
  if (scalar_loss.size() != 1)
    throw std::logic_error("backward: loss must be scalar, shape " +
                           shape_str(scalar_loss.shape()));
  Node* root = scalar_loss.node();
  if (!root->requires_grad) return;
  auto order = topo_order(root);
  // Interior adjoints are scratch per pass; only leaf grads persist, so
  // repeated backward calls accumulate additively into parameters.
  for (Node* n : order)
    if (n->backward_fn && !n->grad.empty())
      std::fill(n->grad.begin(), n->grad.end(), 0.0);
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void zero_grad_graph(const Tensor& root) {
  if (!root.node()->requires_grad) return;
  for (Node* n : topo_order(root.node()))
    if (!n->grad.empty()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
}

NoGradGuard::NoGradGuard() : prev_(t_no_grad) { t_no_grad = true; }
NoGradGuard::~NoGradGuard() { t_no_grad = prev_; }
bool NoGradGuard::active() { return t_no_grad; }

}  // namespace gve::diff
