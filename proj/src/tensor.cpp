#include "acp/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace acp {

namespace {

std::atomic<std::uint64_t> g_node_counter{1};

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument("shape mismatch in " + op + ": " +
                              shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

std::shared_ptr<detail::Node> make_node(std::vector<std::size_t> shape,
                                        std::vector<std::shared_ptr<detail::Node>> inputs) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value.resize(shape_size(n->shape), 0.0);
  n->inputs = std::move(inputs);
  n->is_leaf = n->inputs.empty();
  n->id = g_node_counter.fetch_add(1);
  if (n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  return n;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(make_node(std::move(shape), {}));
}

Tensor Tensor::constant(std::vector<std::size_t> shape, double v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.node()->value.begin(), t.node()->value.end(), v);
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data) {
  Tensor t = zeros(std::move(shape));
  require(data.size() == t.size(), "Tensor::from data length != shape product");
  t.node()->value = std::move(data);
  return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::glorot(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t = zeros(shape);
  double fan_in = shape.size() >= 2 ? static_cast<double>(shape[0]) : 1.0;
  double fan_out = shape.size() >= 2 ? static_cast<double>(shape[1])
                                     : static_cast<double>(shape[0]);
  double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.node()->value) v = uniform(rng, -a, a);
  return t;
}

double Tensor::item() const {
  require(size() == 1, "item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), 0.0);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
    shape_error("matmul", a, b);
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node({m, n}, {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double x = av[i * k + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j)
        out->value[i * n + j] += x * bv[p * n + j];
    }
  out->backprop = [m, k, n](detail::Node& node) {
    auto& A = *node.inputs[0];
    auto& B = *node.inputs[1];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double g = node.grad[i * n + j];
        if (g == 0.0) continue;
        for (std::size_t p = 0; p < k; ++p) {
          A.grad[i * k + p] += g * B.value[p * n + j];
          B.grad[p * n + j] += g * A.value[i * k + p];
        }
      }
  };
  return Tensor(out);
}

namespace {

Tensor binary_elementwise(const std::string& name, const Tensor& a, const Tensor& b,
                          double (*fwd)(double, double),
                          void (*bwd)(double, double, double, double&, double&)) {
  if (a.shape() != b.shape()) shape_error(name, a, b);
  auto out = make_node(a.shape(), {a.node(), b.node()});
  for (std::size_t i = 0; i < a.size(); ++i)
    out->value[i] = fwd(a.values()[i], b.values()[i]);
  out->backprop = [bwd](detail::Node& node) {
    auto& A = *node.inputs[0];
    auto& B = *node.inputs[1];
    for (std::size_t i = 0; i < node.value.size(); ++i)
      bwd(A.value[i], B.value[i], node.grad[i], A.grad[i], B.grad[i]);
  };
  return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double g, double& ga, double& gb) {
        ga += g;
        gb += g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double g, double& ga, double& gb) {
        ga += g;
        gb -= g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& ga, double& gb) {
        ga += g * y;
        gb += g * x;
      });
}

namespace {

Tensor unary(const Tensor& a, double (*fwd)(double),
             double (*dydx_from_y)(double, double)) {
  auto out = make_node(a.shape(), {a.node()});
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = fwd(a.values()[i]);
  out->backprop = [dydx_from_y](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t i = 0; i < node.value.size(); ++i)
      A.grad[i] += node.grad[i] * dydx_from_y(A.value[i], node.value[i]);
  };
  return Tensor(out);
}

}  // namespace

Tensor affine(const Tensor& a, double scale, double shift) {
  auto out = make_node(a.shape(), {a.node()});
  for (std::size_t i = 0; i < a.size(); ++i)
    out->value[i] = scale * a.values()[i] + shift;
  out->backprop = [scale](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t i = 0; i < node.value.size(); ++i)
      A.grad[i] += node.grad[i] * scale;
  };
  return Tensor(out);
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

namespace {

void softmax_inplace(const double* in, double* out, std::size_t n) {
  double mx = *std::max_element(in, in + n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

Tensor softmax_impl(const Tensor& a, std::size_t rows, std::size_t cols) {
  auto out = make_node(a.shape(), {a.node()});
  for (std::size_t r = 0; r < rows; ++r)
    softmax_inplace(a.values().data() + r * cols, out->value.data() + r * cols, cols);
  out->backprop = [rows, cols](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = node.value.data() + r * cols;
      const double* dy = node.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t i = 0; i < cols; ++i) dot += y[i] * dy[i];
      for (std::size_t i = 0; i < cols; ++i)
        A.grad[r * cols + i] += y[i] * (dy[i] - dot);
    }
  };
  return Tensor(out);
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  require(a.shape().size() == 2, "softmax_rows needs a 2-D tensor");
  return softmax_impl(a, a.rows(), a.cols());
}

Tensor softmax_vec(const Tensor& a) {
  require(a.shape().size() == 1, "softmax_vec needs a 1-D tensor");
  return softmax_impl(a, 1, a.size());
}

Tensor log_softmax_vec(const Tensor& a) {
  require(a.shape().size() == 1, "log_softmax_vec needs a 1-D tensor");
  auto out = make_node(a.shape(), {a.node()});
  std::size_t n = a.size();
  double mx = *std::max_element(a.values().begin(), a.values().end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(a.values()[i] - mx);
  double lse = mx + std::log(sum);
  for (std::size_t i = 0; i < n; ++i) out->value[i] = a.values()[i] - lse;
  out->backprop = [n](detail::Node& node) {
    auto& A = *node.inputs[0];
    double gsum = std::accumulate(node.grad.begin(), node.grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      A.grad[i] += node.grad[i] - std::exp(node.value[i]) * gsum;
  };
  return Tensor(out);
}

Tensor concat_vecs(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_vecs on empty list");
  std::size_t total = 0;
  std::vector<std::shared_ptr<detail::Node>> inputs;
  for (const Tensor& p : parts) {
    require(p.shape().size() == 1, "concat_vecs needs 1-D tensors");
    total += p.size();
    inputs.push_back(p.node());
  }
  auto out = make_node({total}, std::move(inputs));
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.values().begin(), p.values().end(), out->value.begin() + off);
    off += p.size();
  }
  out->backprop = [](detail::Node& node) {
    std::size_t off = 0;
    for (auto& in : node.inputs) {
      for (std::size_t i = 0; i < in->value.size(); ++i)
        in->grad[i] += node.grad[off + i];
      off += in->value.size();
    }
  };
  return Tensor(out);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols on empty list");
  std::size_t rows = parts[0].rows(), total_cols = 0;
  std::vector<std::shared_ptr<detail::Node>> inputs;
  for (const Tensor& p : parts) {
    require(p.shape().size() == 2 && p.rows() == rows,
            "concat_cols row mismatch");
    total_cols += p.cols();
    inputs.push_back(p.node());
  }
  auto out = make_node({rows, total_cols}, std::move(inputs));
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(p.values().begin() + r * p.cols(),
                p.values().begin() + (r + 1) * p.cols(),
                out->value.begin() + r * total_cols + off);
    off += p.cols();
  }
  out->backprop = [rows, total_cols](detail::Node& node) {
    std::size_t off = 0;
    for (auto& in : node.inputs) {
      std::size_t c = in->shape[1];
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j)
          in->grad[r * c + j] += node.grad[r * total_cols + off + j];
      off += c;
    }
  };
  return Tensor(out);
}

Tensor stack_rows(const std::vector<Tensor>& rows_in) {
  require(!rows_in.empty(), "stack_rows on empty list");
  std::size_t d = rows_in[0].size();
  std::vector<std::shared_ptr<detail::Node>> inputs;
  for (const Tensor& r : rows_in) {
    require(r.shape().size() == 1 && r.size() == d, "stack_rows length mismatch");
    inputs.push_back(r.node());
  }
  auto out = make_node({rows_in.size(), d}, std::move(inputs));
  for (std::size_t r = 0; r < rows_in.size(); ++r)
    std::copy(rows_in[r].values().begin(), rows_in[r].values().end(),
              out->value.begin() + r * d);
  out->backprop = [d](detail::Node& node) {
    for (std::size_t r = 0; r < node.inputs.size(); ++r)
      for (std::size_t i = 0; i < d; ++i)
        node.inputs[r]->grad[i] += node.grad[r * d + i];
  };
  return Tensor(out);
}

Tensor slice_vec(const Tensor& a, std::size_t start, std::size_t len) {
  require(a.shape().size() == 1 && start + len <= a.size(),
          "slice_vec out of range");
  auto out = make_node({len}, {a.node()});
  std::copy(a.values().begin() + start, a.values().begin() + start + len,
            out->value.begin());
  out->backprop = [start, len](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t i = 0; i < len; ++i) A.grad[start + i] += node.grad[i];
  };
  return Tensor(out);
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  require(a.shape().size() == 2 && start + len <= a.cols(),
          "slice_cols out of range");
  std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_node({rows, len}, {a.node()});
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(a.values().begin() + r * cols + start,
              a.values().begin() + r * cols + start + len,
              out->value.begin() + r * len);
  out->backprop = [rows, cols, start, len](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < len; ++i)
        A.grad[r * cols + start + i] += node.grad[r * len + i];
  };
  return Tensor(out);
}

Tensor row(const Tensor& a, std::size_t r) {
  require(a.shape().size() == 2 && r < a.rows(), "row out of range");
  std::size_t cols = a.cols();
  auto out = make_node({cols}, {a.node()});
  std::copy(a.values().begin() + r * cols, a.values().begin() + (r + 1) * cols,
            out->value.begin());
  out->backprop = [r, cols](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t i = 0; i < cols; ++i) A.grad[r * cols + i] += node.grad[i];
  };
  return Tensor(out);
}

Tensor transpose(const Tensor& a) {
  require(a.shape().size() == 2, "transpose needs a 2-D tensor");
  std::size_t m = a.rows(), n = a.cols();
  auto out = make_node({n, m}, {a.node()});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out->value[j * m + i] = a.values()[i * n + j];
  out->backprop = [m, n](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        A.grad[i * n + j] += node.grad[j * m + i];
  };
  return Tensor(out);
}

Tensor sum_all(const Tensor& a) {
  auto out = make_node({1}, {a.node()});
  out->value[0] = std::accumulate(a.values().begin(), a.values().end(), 0.0);
  out->backprop = [](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (double& g : A.grad) g += node.grad[0];
  };
  return Tensor(out);
}

Tensor sum_axis0(const Tensor& a) {
  require(a.shape().size() == 2, "sum_axis0 needs a 2-D tensor");
  std::size_t m = a.rows(), n = a.cols();
  auto out = make_node({n}, {a.node()});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out->value[j] += a.values()[i * n + j];
  out->backprop = [m, n](detail::Node& node) {
    auto& A = *node.inputs[0];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += node.grad[j];
  };
  return Tensor(out);
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx) {
  require(table.shape().size() == 2, "gather_rows needs a 2-D table");
  std::size_t d = table.cols();
  for (std::size_t i : idx)
    require(i < table.rows(), "gather_rows index out of range");
  auto out = make_node({idx.size(), d}, {table.node()});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(table.values().begin() + idx[r] * d,
              table.values().begin() + (idx[r] + 1) * d, out->value.begin() + r * d);
  auto indices = idx;
  out->backprop = [indices, d](detail::Node& node) {
    auto& T = *node.inputs[0];
    for (std::size_t r = 0; r < indices.size(); ++r)
      for (std::size_t i = 0; i < d; ++i)
        T.grad[indices[r] * d + i] += node.grad[r * d + i];
  };
  return Tensor(out);
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps) {
  std::size_t rows = a.shape().size() == 2 ? a.rows() : 1;
  std::size_t d = a.shape().size() == 2 ? a.cols() : a.size();
  require(gain.shape().size() == 1 && gain.size() == d, "layer_norm gain size");
  require(bias.shape().size() == 1 && bias.size() == d, "layer_norm bias size");
  auto out = make_node(a.shape(), {a.node(), gain.node(), bias.node()});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * d;
    double mean = std::accumulate(x, x + d, 0.0) / static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= static_cast<double>(d);
    double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i)
      out->value[r * d + i] = gain.values()[i] * (x[i] - mean) * inv + bias.values()[i];
  }
  out->backprop = [rows, d, eps](detail::Node& node) {
    auto& A = *node.inputs[0];
    auto& G = *node.inputs[1];
    auto& B = *node.inputs[2];
    for (std::size_t r = 0; r < rows; ++r) {
      const double* x = A.value.data() + r * d;
      const double* dy = node.grad.data() + r * d;
      double mean = std::accumulate(x, x + d, 0.0) / static_cast<double>(d);
      double var = 0.0;
      for (std::size_t i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
      var /= static_cast<double>(d);
      double inv = 1.0 / std::sqrt(var + eps);
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      std::vector<double> xhat(d), dxhat(d);
      for (std::size_t i = 0; i < d; ++i) {
        xhat[i] = (x[i] - mean) * inv;
        dxhat[i] = dy[i] * G.value[i];
        mean_dxhat += dxhat[i];
        mean_dxhat_xhat += dxhat[i] * xhat[i];
        G.grad[i] += dy[i] * xhat[i];
        B.grad[i] += dy[i];
      }
      mean_dxhat /= static_cast<double>(d);
      mean_dxhat_xhat /= static_cast<double>(d);
      for (std::size_t i = 0; i < d; ++i)
        A.grad[r * d + i] += inv * (dxhat[i] - mean_dxhat - xhat[i] * mean_dxhat_xhat);
    }
  };
  return Tensor(out);
}

Tensor pairwise_bilinear_scores(const Tensor& q, const Tensor& k, const Tensor& a,
                                const Tensor& b) {
  require(q.shape().size() == 2 && k.shape().size() == 2, "scores: Q/K must be 2-D");
  std::size_t n = q.rows(), h = q.cols();
  require(k.rows() == n && k.cols() == h, "scores: K shape");
  require(a.shape().size() == 2 && a.rows() == n * n && a.cols() == h,
          "scores: A must be (n*n,h)");
  require(b.shape().size() == 2 && b.rows() == n * n && b.cols() == h,
          "scores: B must be (n*n,h)");
  auto out = make_node({n, n}, {q.node(), k.node(), a.node(), b.node()});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t p = i * n + j;
      double s = 0.0;
      for (std::size_t t = 0; t < h; ++t)
        s += (q.values()[i * h + t] + a.values()[p * h + t]) *
             (k.values()[j * h + t] + b.values()[p * h + t]);
      out->value[p] = s;
    }
  out->backprop = [n, h](detail::Node& node) {
    auto& Q = *node.inputs[0];
    auto& K = *node.inputs[1];
    auto& A = *node.inputs[2];
    auto& B = *node.inputs[3];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t p = i * n + j;
        double g = node.grad[p];
        if (g == 0.0) continue;
        for (std::size_t t = 0; t < h; ++t) {
          double qa = Q.value[i * h + t] + A.value[p * h + t];
          double kb = K.value[j * h + t] + B.value[p * h + t];
          Q.grad[i * h + t] += g * kb;
          A.grad[p * h + t] += g * kb;
          K.grad[j * h + t] += g * qa;
          B.grad[p * h + t] += g * qa;
        }
      }
  };
  return Tensor(out);
}

void backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1, "backward needs a scalar loss");
  // Iterative DFS topological sort.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (detail::Node* n : order)
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  loss.node()->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

void sgd_step(std::vector<Parameter>& params, double lr) {
  for (Parameter& p : params) {
    if (!p.trainable) continue;
    auto& v = p.tensor.mutable_values();
    auto& g = p.tensor.mutable_grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
  }
  zero_grads(params);
}

void adam_step(std::vector<Parameter>& params, AdamState& state, double lr) {
  if (state.m.empty()) {
    for (Parameter& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  ++state.t;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    if (!p.trainable) continue;
    auto& v = p.tensor.mutable_values();
    auto& g = p.tensor.mutable_grad();
    for (std::size_t i = 0; i < v.size(); ++i) {
      state.m[k][i] = state.beta1 * state.m[k][i] + (1.0 - state.beta1) * g[i];
      state.v[k][i] = state.beta2 * state.v[k][i] + (1.0 - state.beta2) * g[i] * g[i];
      double mhat = state.m[k][i] / bc1;
      double vhat = state.v[k][i] / bc2;
      v[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
  zero_grads(params);
}

void zero_grads(std::vector<Parameter>& params) {
  for (Parameter& p : params) p.tensor.zero_grad();
}

GradCheckReport grad_check(const std::function<Tensor()>& fn,
                           std::vector<Parameter>& params, double h, double tol,
                           std::size_t max_entries, std::uint64_t seed) {
  GradCheckReport report;
  zero_grads(params);
  Tensor loss = fn();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (Parameter& p : params) analytic.push_back(p.tensor.grad());

  Rng rng(seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    if (!p.trainable) continue;
    std::vector<std::size_t> entries(p.tensor.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (max_entries > 0 && entries.size() > max_entries) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(max_entries);
    }
    double worst = 0.0;
    auto& vals = p.tensor.mutable_values();
    for (std::size_t i : entries) {
      double orig = vals[i];
      vals[i] = orig + h;
      double up = fn().item();
      vals[i] = orig - h;
      double down = fn().item();
      vals[i] = orig;
      double numeric = (up - down) / (2.0 * h);
      // The floor absorbs central-difference roundoff (~eps*|f|/h) on
      // entries whose true gradient is essentially zero.
      double denom = std::max({std::abs(numeric), std::abs(analytic[k][i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic[k][i]) / denom);
    }
    report.entries.push_back({p.name, worst});
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  report.passed = report.max_rel_error < tol;
  zero_grads(params);
  return report;
}

}  // namespace acp
