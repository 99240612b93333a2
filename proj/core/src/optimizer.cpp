// SPDX-License-Identifier: Apache-2.0
#include "prosodet/optimizer.hpp"

#include <cmath>

#include "prosodet/errors.hpp"

namespace prosodet {

AdamW::AdamW(std::vector<GroupSpec> groups, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (groups.empty()) throw ConfigError("optimizer needs at least one parameter group");
  for (auto& spec : groups) {
    if (!(spec.lr > 0.0)) {
      throw ConfigError("learning rate must be positive in group '" + spec.name + "'");
    }
    if (spec.weight_decay < 0.0) {
      throw ConfigError("weight decay must be >= 0 in group '" + spec.name + "'");
    }
    Slot slot;
    slot.spec = std::move(spec);
    slot.m.reserve(slot.spec.params.size());
    slot.v.reserve(slot.spec.params.size());
    for (nn::Parameter* p : slot.spec.params) {
      slot.m.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
      slot.v.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
    }
    groups_.push_back(std::move(slot));
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& slot : groups_) {
    for (size_t i = 0; i < slot.spec.params.size(); ++i) {
      nn::Parameter& p = *slot.spec.params[i];
      if (p.grad.size() != p.value.size()) p.zero_grad();
      slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * p.grad;
      slot.v[i] = (beta2_ * slot.v[i].array() + (1.0 - beta2_) * p.grad.array().square()).matrix();
      const ad::Mat m_hat = slot.m[i] / bc1;
      const ad::Mat v_hat = slot.v[i] / bc2;
      p.value.array() -=
          slot.spec.lr * (m_hat.array() / (v_hat.array().sqrt() + eps_) +
                          slot.spec.weight_decay * p.value.array());
    }
  }
}

double AdamW::grad_norm() const {
  double ss = 0.0;
  for (const Slot& slot : groups_) {
    for (nn::Parameter* p : slot.spec.params) {
      if (p->grad.size() == p->value.size()) ss += p->grad.squaredNorm();
    }
  }
  return std::sqrt(ss);
}

}  // namespace prosodet
