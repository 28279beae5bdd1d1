#pragma once

#include "xgnn/expander.hpp"
#include "xgnn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace xgnn {

enum class ParamRole { UpdateStep, Embedding, Head, NormAct };

const char* to_string(ParamRole role);

/// Trainable weight, optionally restricted to an expander mask. The value
/// seen by the model is always mask * weight, so gradients outside the mask
/// are exactly zero.
class Parameter {
 public:
  Parameter(std::string name, ParamRole role, Matrix value);
  Parameter(std::string name, ParamRole role, Matrix value, ExpanderMask mask);

  const std::string& name() const { return name_; }
  ParamRole role() const { return role_; }
  ad::Tensor& weight() { return weight_; }
  const ad::Tensor& weight() const { return weight_; }

  bool masked() const { return static_cast<bool>(mask_); }
  const ExpanderMask* mask() const { return mask_.get(); }
  /// Binary matrix of the weight's shape (only when masked).
  const Matrix& mask_matrix() const { return mask_tensor_.value(); }

  /// M * W on the tape, or W itself when unmasked.
  ad::Tensor effective() const;

  /// Trainable entries: in-mask entries for masked weights.
  Index count() const;

 private:
  std::string name_;
  ParamRole role_;
  ad::Tensor weight_;
  std::shared_ptr<const ExpanderMask> mask_;
  ad::Tensor mask_tensor_;
};

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty added to the gradient before the moment updates.
  double weight_decay = 0.0;
};

/// Adam with bias correction. Masked parameters have their gradient and
/// update projected onto the mask, so entries outside it never move.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void step();
  void zero_grad();

  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  std::int64_t steps() const { return steps_; }
  const Matrix& first_moment(std::size_t k) const { return m_[k]; }
  const Matrix& second_moment(std::size_t k) const { return v_[k]; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t steps_ = 0;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  Index worst_entry = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences with the given step, entry by entry over every tensor in
/// `inputs`. Error per entry is |analytic - numeric| / max(1, |analytic|, |numeric|).
/// `analytic_bias` is added to every analytic entry (fault injection for tests).
GradcheckResult gradcheck(const std::function<ad::Tensor()>& f, std::span<ad::Tensor> inputs,
                          double step = 1e-6, double analytic_bias = 0.0);

}  // namespace xgnn
