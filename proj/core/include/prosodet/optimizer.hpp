// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_OPTIMIZER_HPP
#define PROSODET_OPTIMIZER_HPP

#include <string>
#include <vector>

#include "prosodet/nn.hpp"

namespace prosodet {

// Adam with decoupled weight decay. Parameters are grouped so the backbone,
// prosody head and classifier can run at their own learning rates.
class AdamW {
 public:
  struct GroupSpec {
    std::string name;
    std::vector<nn::Parameter*> params;
    double lr = 1e-3;
    double weight_decay = 0.0;
  };

  AdamW(std::vector<GroupSpec> groups, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);

  // Applies one update from the gradients accumulated in each parameter.
  void step();

  size_t group_count() const { return groups_.size(); }
  const GroupSpec& group(size_t i) const { return groups_[i].spec; }

  // L2 norm over all grouped gradients (diagnostic).
  double grad_norm() const;

 private:
  struct Slot {
    GroupSpec spec;
    std::vector<ad::Mat> m;
    std::vector<ad::Mat> v;
  };

  std::vector<Slot> groups_;
  double beta1_;
  double beta2_;
  double eps_;
  long long t_ = 0;
};

}  // namespace prosodet

#endif  // PROSODET_OPTIMIZER_HPP
