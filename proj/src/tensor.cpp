#include "xgnn/tensor.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace xgnn::ad {
namespace {

thread_local bool grad_enabled = true;

Tensor make(const char* op, Matrix value, std::initializer_list<Tensor> inputs,
            std::function<void(Node&)> bw) {
  if (!value.allFinite()) throw NumericError(std::string("non-finite output from ") + op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (grad_enabled)
    for (const Tensor& in : inputs) needs = needs || in.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const Tensor& in : inputs) node->inputs.push_back(in.shared());
    node->backward = std::move(bw);
  }
  return Tensor(std::move(node));
}

template <class Expr>
void accumulate(Node& n, const Expr& g) {
  if (!n.requires_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

Node& in(Node& self, std::size_t k) { return *self.inputs[k]; }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}

void require_scalar(const char* op, const Tensor& s) {
  if (s.rows() != 1 || s.cols() != 1) throw InvalidArgument(std::string(op) + ": expects a 1x1 tensor");
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Matrix Tensor::grad() const {
  if (has_grad()) return node_->grad;
  return Matrix::Zero(rows(), cols());
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw InvalidArgument("item(): tensor is not 1x1");
  return node_->value(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

void backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw InvalidArgument("backward: loss must be 1x1");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  accumulate(*loss.node(), Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward || node->grad.size() == 0) continue;
    node->backward(*node);
    node->grad.resize(0, 0);  // interior gradients are transient
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                          std::to_string(b.rows()) + " differ");
  Matrix out = a.value() * b.value();
  return make("matmul", std::move(out), {a, b}, [](Node& self) {
    Node& x = in(self, 0);
    Node& w = in(self, 1);
    if (x.requires_grad) accumulate(x, self.grad * w.value.transpose());
    if (w.requires_grad) accumulate(w, x.value.transpose() * self.grad);
  });
}

Tensor spmm(std::shared_ptr<const SparseMatrix> a, const Tensor& x) {
  Matrix out = a->multiply(x.value());
  return make("spmm", std::move(out), {x},
              [a](Node& self) { accumulate(in(self, 0), a->multiply_transposed(self.grad)); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return make("add", a.value() + b.value(), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  return make("sub", a.value() - b.value(), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), -self.grad);
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw InvalidArgument("add_bias: bias must be 1x" + std::to_string(a.cols()));
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return make("add_bias", std::move(out), {a, bias}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad.colwise().sum());
  });
}

Tensor scale(const Tensor& a, double s) {
  return make("scale", a.value() * s, {a},
              [s](Node& self) { accumulate(in(self, 0), self.grad * s); });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  require_scalar("scale_by", s);
  return make("scale_by", a.value() * s.item(), {a, s}, [](Node& self) {
    Node& x = in(self, 0);
    Node& k = in(self, 1);
    accumulate(x, self.grad * k.value(0, 0));
    if (k.requires_grad)
      accumulate(k, Matrix::Constant(1, 1, self.grad.cwiseProduct(x.value).sum()));
  });
}

Tensor row_scale(const Tensor& a, std::shared_ptr<const Vector> factors) {
  if (factors->size() != a.rows()) throw InvalidArgument("row_scale: one factor per row required");
  Matrix out = factors->asDiagonal() * a.value();
  return make("row_scale", std::move(out), {a}, [factors](Node& self) {
    accumulate(in(self, 0), factors->asDiagonal() * self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  return make("mul", a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    Node& x = in(self, 0);
    Node& y = in(self, 1);
    if (x.requires_grad) accumulate(x, self.grad.cwiseProduct(y.value));
    if (y.requires_grad) accumulate(y, self.grad.cwiseProduct(x.value));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: nothing to concatenate");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) throw InvalidArgument("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Index> widths;
  Index at = 0;
  for (const Tensor& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    widths.push_back(p.cols());
    at += p.cols();
  }
  if (out.size() > 0 && !out.allFinite()) throw NumericError("non-finite output from concat_cols");
  auto node = std::make_shared<Node>();
  node->value = std::move(out);
  node->op = "concat_cols";
  bool needs = false;
  if (grad_enabled)
    for (const Tensor& p : parts) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const Tensor& p : parts) node->inputs.push_back(p.shared());
    node->backward = [widths](Node& self) {
      Index offset = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        accumulate(in(self, k), self.grad.middleCols(offset, widths[k]));
        offset += widths[k];
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor relu(const Tensor& a) {
  return make("relu", a.value().cwiseMax(0.0), {a}, [](Node& self) {
    Node& x = in(self, 0);
    accumulate(x, (x.value.array() > 0.0).select(self.grad, 0.0));
  });
}

Tensor prelu(const Tensor& a, const Tensor& slope) {
  require_scalar("prelu", slope);
  const double s = slope.item();
  Matrix out = (a.value().array() > 0.0).select(a.value(), s * a.value());
  return make("prelu", std::move(out), {a, slope}, [](Node& self) {
    Node& x = in(self, 0);
    Node& k = in(self, 1);
    const auto positive = x.value.array() > 0.0;
    if (x.requires_grad) accumulate(x, positive.select(self.grad, k.value(0, 0) * self.grad));
    if (k.requires_grad) {
      const double g = positive.select(0.0, self.grad.cwiseProduct(x.value)).sum();
      accumulate(k, Matrix::Constant(1, 1, g));
    }
  });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh().matrix();
  return make("tanh", std::move(out), {a}, [](Node& self) {
    accumulate(in(self, 0), self.grad.cwiseProduct(
                                (1.0 - self.value.array().square()).matrix()));
  });
}

Tensor sqrt(const Tensor& a) {
  Matrix out = a.value().cwiseSqrt();
  return make("sqrt", std::move(out), {a}, [](Node& self) {
    accumulate(in(self, 0), (self.grad.array() / (2.0 * self.value.array())).matrix());
  });
}

Tensor row_sum(const Tensor& a) {
  Matrix out = a.value().rowwise().sum();
  const Index cols = a.cols();
  return make("row_sum", std::move(out), {a}, [cols](Node& self) {
    accumulate(in(self, 0), self.grad.replicate(1, cols));
  });
}

Tensor row_mean(const Tensor& a) {
  if (a.cols() == 0) throw InvalidArgument("row_mean: no columns");
  Matrix out = a.value().rowwise().mean();
  const Index cols = a.cols();
  return make("row_mean", std::move(out), {a}, [cols](Node& self) {
    accumulate(in(self, 0), self.grad.replicate(1, cols) / static_cast<double>(cols));
  });
}

Tensor row_max(const Tensor& a) {
  if (a.cols() == 0) throw InvalidArgument("row_max: no columns");
  Matrix out(a.rows(), 1);
  std::vector<Index> arg(static_cast<std::size_t>(a.rows()));
  for (Index r = 0; r < a.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < a.cols(); ++c)
      if (a.value()(r, c) > a.value()(r, best)) best = c;
    arg[r] = best;
    out(r, 0) = a.value()(r, best);
  }
  return make("row_max", std::move(out), {a}, [arg = std::move(arg)](Node& self) {
    Node& x = in(self, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (Index r = 0; r < g.rows(); ++r) g(r, arg[r]) = self.grad(r, 0);
    accumulate(x, g);
  });
}

Tensor row_l2_normalize(const Tensor& a, double eps) {
  Vector denom = a.value().rowwise().norm().cwiseMax(eps);
  Matrix out = denom.cwiseInverse().asDiagonal() * a.value();
  return make("row_l2_normalize", std::move(out), {a}, [denom, eps](Node& self) {
    Node& x = in(self, 0);
    Matrix g(self.grad.rows(), self.grad.cols());
    for (Index r = 0; r < g.rows(); ++r) {
      if (denom(r) > eps) {
        const double proj = self.value.row(r).dot(self.grad.row(r));
        g.row(r) = (self.grad.row(r) - proj * self.value.row(r)) / denom(r);
      } else {
        g.row(r) = self.grad.row(r) / eps;
      }
    }
    accumulate(x, g);
  });
}

Tensor mean_rows(const Tensor& a) {
  if (a.rows() == 0) throw InvalidArgument("mean_rows: no rows");
  Matrix out = a.value().colwise().mean();
  const Index rows = a.rows();
  return make("mean_rows", std::move(out), {a}, [rows](Node& self) {
    accumulate(in(self, 0), self.grad.replicate(rows, 1) / static_cast<double>(rows));
  });
}

Tensor segment_mean(const Tensor& a, std::span<const NodeRange> ranges) {
  std::vector<NodeRange> spans(ranges.begin(), ranges.end());
  Matrix out(static_cast<Index>(spans.size()), a.cols());
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const NodeRange r = spans[k];
    if (r.size() <= 0 || r.begin < 0 || r.end > a.rows())
      throw InvalidArgument("segment_mean: empty or out-of-range segment " + std::to_string(k));
    out.row(static_cast<Index>(k)) = a.value().middleRows(r.begin, r.size()).colwise().mean();
  }
  return make("segment_mean", std::move(out), {a}, [spans = std::move(spans)](Node& self) {
    Node& x = in(self, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (std::size_t k = 0; k < spans.size(); ++k) {
      const NodeRange r = spans[k];
      g.middleRows(r.begin, r.size()).rowwise() +=
          self.grad.row(static_cast<Index>(k)) / static_cast<double>(r.size());
    }
    accumulate(x, g);
  });
}

Tensor neighbor_max(std::shared_ptr<const SparseMatrix> adjacency, const Tensor& a) {
  if (adjacency->cols() != a.rows())
    throw InvalidArgument("neighbor_max: adjacency width differs from row count");
  const Index n = adjacency->rows();
  const Index c = a.cols();
  Matrix out = Matrix::Zero(n, c);
  std::vector<Index> arg(static_cast<std::size_t>(n * c), -1);
  const auto& offsets = adjacency->row_offsets();
  const auto& cols = adjacency->col_indices();
  for (Index i = 0; i < n; ++i) {
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
      const Index j = cols[k];
      for (Index f = 0; f < c; ++f) {
        Index& best = arg[i * c + f];
        if (best < 0 || a.value()(j, f) > out(i, f)) {
          best = j;
          out(i, f) = a.value()(j, f);
        }
      }
    }
  }
  return make("neighbor_max", std::move(out), {a}, [arg = std::move(arg), c](Node& self) {
    Node& x = in(self, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (Index i = 0; i < self.grad.rows(); ++i)
      for (Index f = 0; f < c; ++f) {
        const Index j = arg[i * c + f];
        if (j >= 0) g(j, f) += self.grad(i, f);
      }
    accumulate(x, g);
  });
}

Tensor gather_rows(const Tensor& a, std::span<const Index> rows) {
  std::vector<Index> idx(rows.begin(), rows.end());
  Matrix out(static_cast<Index>(idx.size()), a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= a.rows()) throw InvalidArgument("gather_rows: row out of range");
    out.row(static_cast<Index>(k)) = a.value().row(idx[k]);
  }
  return make("gather_rows", std::move(out), {a}, [idx = std::move(idx)](Node& self) {
    Node& x = in(self, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) g.row(idx[k]) += self.grad.row(static_cast<Index>(k));
    accumulate(x, g);
  });
}

Tensor sum(const Tensor& a) {
  Matrix out = Matrix::Constant(1, 1, a.value().sum());
  return make("sum", std::move(out), {a}, [](Node& self) {
    Node& x = in(self, 0);
    accumulate(x, Matrix::Constant(x.value.rows(), x.value.cols(), self.grad(0, 0)));
  });
}

BatchNorm::BatchNorm(Index channels)
    : gamma(Tensor::parameter(Matrix::Ones(1, channels))),
      beta(Tensor::parameter(Matrix::Zero(1, channels))),
      running_mean(Matrix::Zero(1, channels)),
      running_var(Matrix::Ones(1, channels)) {}

Tensor batchnorm(const Tensor& x, BatchNorm& bn, bool training) {
  if (x.cols() != bn.gamma.cols()) throw InvalidArgument("batchnorm: channel count mismatch");
  if (!training) {
    Matrix inv_std = (bn.running_var.array() + bn.eps).rsqrt().matrix();
    Matrix xhat = (x.value().rowwise() - bn.running_mean.row(0)) * inv_std.row(0).asDiagonal();
    Matrix out = (xhat * bn.gamma.value().row(0).asDiagonal()).rowwise() + bn.beta.value().row(0);
    return make("batchnorm", std::move(out), {x, bn.gamma, bn.beta},
                [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                  Node& gamma = in(self, 1);
                  accumulate(in(self, 0),
                             self.grad * inv_std.cwiseProduct(gamma.value).row(0).asDiagonal());
                  if (gamma.requires_grad)
                    accumulate(gamma, self.grad.cwiseProduct(xhat).colwise().sum());
                  accumulate(in(self, 2), self.grad.colwise().sum());
                });
  }

  const Index n = x.rows();
  if (n == 0) throw InvalidArgument("batchnorm: empty batch");
  Matrix mean = x.value().colwise().mean();
  Matrix centered = x.value().rowwise() - mean.row(0);
  Matrix var = centered.array().square().colwise().mean().matrix();
  Matrix inv_std = (var.array() + bn.eps).rsqrt().matrix();
  Matrix xhat = centered * inv_std.row(0).asDiagonal();
  Matrix out = (xhat * bn.gamma.value().row(0).asDiagonal()).rowwise() + bn.beta.value().row(0);

  const double unbiased = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
  bn.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * mean;
  bn.running_var = (1.0 - bn.momentum) * bn.running_var + bn.momentum * unbiased * var;

  return make("batchnorm", std::move(out), {x, bn.gamma, bn.beta},
              [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                Node& in_x = in(self, 0);
                Node& gamma = in(self, 1);
                Node& beta = in(self, 2);
                const auto n = static_cast<double>(xhat.rows());
                if (in_x.requires_grad) {
                  const Matrix dxhat = self.grad * gamma.value.row(0).asDiagonal();
                  const Matrix sum_d = dxhat.colwise().sum();
                  const Matrix sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
                  Matrix g = (n * dxhat).rowwise() - sum_d.row(0);
                  g -= xhat * sum_dx.row(0).asDiagonal();
                  accumulate(in_x, g * (inv_std.row(0) / n).asDiagonal());
                }
                if (gamma.requires_grad)
                  accumulate(gamma, self.grad.cwiseProduct(xhat).colwise().sum());
                accumulate(beta, self.grad.colwise().sum());
              });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const Index n = logits.rows();
  const Index k = logits.cols();
  if (static_cast<Index>(labels.size()) != n)
    throw InvalidArgument("cross_entropy: one label per row required");
  if (n == 0) throw InvalidArgument("cross_entropy: empty batch");
  Matrix probs(n, k);
  double total = 0.0;
  std::vector<int> y(labels.begin(), labels.end());
  for (Index r = 0; r < n; ++r) {
    if (y[r] < 0 || y[r] >= k)
      throw InvalidArgument("cross_entropy: label " + std::to_string(y[r]) + " outside [0, " +
                            std::to_string(k) + ") at row " + std::to_string(r));
    const double top = logits.value().row(r).maxCoeff();
    const auto shifted = (logits.value().row(r).array() - top).exp();
    const double z = shifted.sum();
    probs.row(r) = shifted / z;
    total += top + std::log(z) - logits.value()(r, y[r]);
  }
  Matrix out = Matrix::Constant(1, 1, total / static_cast<double>(n));
  return make("cross_entropy", std::move(out), {logits},
              [probs = std::move(probs), y = std::move(y)](Node& self) {
                Matrix g = probs;
                for (Index r = 0; r < g.rows(); ++r) g(r, y[r]) -= 1.0;
                accumulate(in(self, 0), g * (self.grad(0, 0) / static_cast<double>(g.rows())));
              });
}

Tensor mae(const Tensor& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidArgument("mae: prediction and target shapes differ");
  if (pred.value().size() == 0) throw InvalidArgument("mae: empty prediction");
  Matrix diff = pred.value() - target;
  Matrix out = Matrix::Constant(1, 1, diff.cwiseAbs().mean());
  return make("mae", std::move(out), {pred}, [diff = std::move(diff)](Node& self) {
    const double scale = self.grad(0, 0) / static_cast<double>(diff.size());
    accumulate(in(self, 0), (diff.array().sign() * scale).matrix());
  });
}

}  // namespace xgnn::ad
