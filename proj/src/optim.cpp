#include "xgnn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace xgnn {

const char* to_string(ParamRole role) {
  switch (role) {
    case ParamRole::UpdateStep: return "update_step";
    case ParamRole::Embedding: return "embedding";
    case ParamRole::Head: return "head";
    case ParamRole::NormAct: return "norm_act";
  }
  return "?";
}

Parameter::Parameter(std::string name, ParamRole role, Matrix value)
    : name_(std::move(name)), role_(role), weight_(ad::Tensor::parameter(std::move(value))) {}

Parameter::Parameter(std::string name, ParamRole role, Matrix value, ExpanderMask mask)
    : Parameter(std::move(name), role, std::move(value)) {
  if (mask.rows() != weight_.rows() || mask.cols() != weight_.cols())
    throw InvalidArgument("Parameter " + name_ + ": mask shape differs from weight shape");
  mask_tensor_ = ad::Tensor::constant(mask.dense());
  weight_.mutable_value() = weight_.value().cwiseProduct(mask_tensor_.value());
  mask_ = std::make_shared<const ExpanderMask>(std::move(mask));
}

ad::Tensor Parameter::effective() const {
  return masked() ? ad::mul(weight_, mask_tensor_) : weight_;
}

Index Parameter::count() const { return masked() ? mask_->ones() : weight_.value().size(); }

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->weight().rows(), p->weight().cols()));
    v_.push_back(Matrix::Zero(p->weight().rows(), p->weight().cols()));
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->weight().zero_grad();
}

void Adam::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    Matrix& w = p.weight().mutable_value();
    Matrix g = p.weight().grad();
    if (options_.weight_decay != 0.0) g += options_.weight_decay * w;
    if (p.masked()) g = g.cwiseProduct(p.mask_matrix());
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * g;
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    Matrix update = ((m_[k] / c1).array() / ((v_[k] / c2).array().sqrt() + options_.eps)).matrix();
    if (p.masked()) update = update.cwiseProduct(p.mask_matrix());
    w -= options_.lr * update;
  }
}

GradcheckResult gradcheck(const std::function<ad::Tensor()>& f, std::span<ad::Tensor> inputs,
                          double step, double analytic_bias) {
  for (ad::Tensor& t : inputs) t.zero_grad();
  ad::backward(f());
  std::vector<Matrix> analytic;
  for (ad::Tensor& t : inputs) analytic.push_back(t.grad());

  GradcheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix& x = inputs[k].mutable_value();
    for (Index e = 0; e < x.size(); ++e) {
      const double saved = x.data()[e];
      double plus = 0.0;
      double minus = 0.0;
      {
        ad::NoGradGuard guard;
        x.data()[e] = saved + step;
        plus = f().item();
        x.data()[e] = saved - step;
        minus = f().item();
      }
      x.data()[e] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[k].data()[e] + analytic_bias;
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (err > result.max_rel_error) result = {err, k, e};
    }
  }
  for (ad::Tensor& t : inputs) t.zero_grad();
  return result;
}

}  // namespace xgnn
