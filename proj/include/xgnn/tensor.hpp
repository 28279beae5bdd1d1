#pragma once

#include "xgnn/common.hpp"
#include "xgnn/graph.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace xgnn::ad {

struct Node {
  Matrix value;
  Matrix grad;  // 0x0 until a gradient arrives
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  /// Reads self.grad and accumulates vector-Jacobian products into inputs.
  std::function<void(Node& self)> backward;
};

/// Shared handle to a node of the autodiff graph. Copies alias the same node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Matrix value);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Matrix value);

  const Matrix& value() const { return node_->value; }
  /// Direct write access for optimisers and initialisers; bypasses the tape.
  Matrix& mutable_value() { return node_->value; }

  bool has_grad() const { return node_->grad.size() > 0; }
  /// Gradient, or zeros of the value's shape when none has arrived.
  Matrix grad() const;
  void zero_grad() { node_->grad.resize(0, 0); }

  bool requires_grad() const { return node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  const char* op() const { return node_->op; }
  double item() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables tape recording on this thread while alive (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Reverse-mode sweep from a 1x1 loss. Gradients accumulate on every
/// requires_grad tensor reachable from the loss; unreachable ones keep theirs.
void backward(const Tensor& loss);

// Primitives. Each checks shapes (InvalidArgument) and finiteness of its
// output (NumericError naming the primitive).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor spmm(std::shared_ptr<const SparseMatrix> a, const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// a + bias, bias is 1 x cols broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double s);
/// a * s where s is a 1x1 tensor.
Tensor scale_by(const Tensor& a, const Tensor& s);
/// Row i multiplied by the constant factors[i].
Tensor row_scale(const Tensor& a, std::shared_ptr<const Vector> factors);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor concat_cols(std::span<const Tensor> parts);

/// max(x, 0); the derivative at 0 is 0.
Tensor relu(const Tensor& a);
/// x for x > 0, slope * x otherwise; slope is a learnable 1x1 tensor.
Tensor prelu(const Tensor& a, const Tensor& slope);
Tensor tanh(const Tensor& a);
Tensor sqrt(const Tensor& a);

Tensor row_sum(const Tensor& a);
Tensor row_mean(const Tensor& a);
/// Per-row maximum over columns (n x 1); ties go to the lowest column.
Tensor row_max(const Tensor& a);
/// Each row divided by max(||row||_2, eps).
Tensor row_l2_normalize(const Tensor& a, double eps = 1e-12);
/// Column means over all rows (1 x cols).
Tensor mean_rows(const Tensor& a);
/// Column means over each node range (ranges.size() x cols). Empty ranges throw.
Tensor segment_mean(const Tensor& a, std::span<const NodeRange> ranges);
/// out[i] = elementwise max of a[j] over stored columns j of adjacency row i.
/// Empty rows give 0; ties go to the lowest neighbour index.
Tensor neighbor_max(std::shared_ptr<const SparseMatrix> adjacency, const Tensor& a);
Tensor gather_rows(const Tensor& a, std::span<const Index> rows);
Tensor sum(const Tensor& a);

struct BatchNorm {
  Tensor gamma;  // 1 x c, starts at 1
  Tensor beta;   // 1 x c, starts at 0
  Matrix running_mean;
  Matrix running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNorm(Index channels);
};

/// Training mode normalises with batch statistics (biased variance) and
/// updates the running estimates; evaluation mode is the fixed affine map
/// built from the running estimates.
Tensor batchnorm(const Tensor& x, BatchNorm& bn, bool training);

/// Mean over rows of logsumexp(z) - z[label]. Labels must lie in [0, cols).
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);
/// Mean absolute error over all entries.
Tensor mae(const Tensor& pred, const Matrix& target);

}  // namespace xgnn::ad
