#ifndef ACP_TENSOR_HPP_
#define ACP_TENSOR_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "acp/util.hpp"

namespace acp {

namespace detail {
struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;  // pulls node.grad into inputs' grads
  bool is_leaf = false;
  std::uint64_t id = 0;
};
}  // namespace detail

// Handle to a node of the computation tape. Dense row-major doubles,
// explicit shapes, no implicit broadcasting.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor constant(std::vector<std::size_t> shape, double v);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data);
  static Tensor scalar(double v);
  // Leaf with entries uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
  static Tensor glorot(std::vector<std::size_t> shape, Rng& rng);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return node_->shape.at(1); }
  double item() const;
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& mutable_grad() { return node_->grad; }
  void zero_grad();

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

struct Parameter {
  std::string name;
  Tensor tensor;  // leaf; gradient accumulates across backward calls
  bool trainable = true;
};

// Forward ops. Shapes are checked; mismatches throw with op name and shapes.
Tensor matmul(const Tensor& a, const Tensor& b);          // (m,k)x(k,n)
Tensor add(const Tensor& a, const Tensor& b);             // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);             // elementwise
Tensor affine(const Tensor& a, double scale, double shift);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);      // 2-D, softmax along each row
Tensor softmax_vec(const Tensor& a);       // 1-D
Tensor log_softmax_vec(const Tensor& a);   // 1-D, numerically stable
Tensor concat_vecs(const std::vector<Tensor>& parts);       // 1-D concat
Tensor concat_cols(const std::vector<Tensor>& parts);       // 2-D, along axis 1
Tensor stack_rows(const std::vector<Tensor>& rows);         // 1-D vecs -> matrix
Tensor slice_vec(const Tensor& a, std::size_t start, std::size_t len);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);
Tensor row(const Tensor& a, std::size_t r);                 // 2-D -> 1-D
Tensor transpose(const Tensor& a);
Tensor sum_all(const Tensor& a);                            // -> scalar
Tensor sum_axis0(const Tensor& a);                          // (n,d) -> (d)
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx);
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-6);                       // per row
// S[i,j] = (Q_i + A[i*n+j]) . (K_j + B[i*n+j]); Q,K are (n,h), A,B (n*n,h).
Tensor pairwise_bilinear_scores(const Tensor& q, const Tensor& k, const Tensor& a,
                                const Tensor& b);

// Reverse pass from a scalar loss. Gradients of leaf tensors accumulate;
// non-leaf gradients are scoped to this call.
void backward(const Tensor& loss);

void sgd_step(std::vector<Parameter>& params, double lr);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<std::vector<double>> m, v;
};
void adam_step(std::vector<Parameter>& params, AdamState& state, double lr);
void zero_grads(std::vector<Parameter>& params);

struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_error;
  };
  std::vector<Entry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Central finite differences on every entry of every trainable parameter
// (or a seeded sample of max_entries per parameter when set).
GradCheckReport grad_check(const std::function<Tensor()>& fn,
                           std::vector<Parameter>& params, double h, double tol,
                           std::size_t max_entries = 0, std::uint64_t seed = 0);

}  // namespace acp

#endif  // ACP_TENSOR_HPP_
