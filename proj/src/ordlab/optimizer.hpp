#pragma once

#include "ordlab/nn.hpp"

namespace ordlab {

// SGD with optional Nesterov momentum and L2 penalty. Update, with effective
// gradient g' = g + weight_decay * theta:
//   v <- mu * v + g'
//   theta <- theta - lr * (g' + mu * v)   (nesterov)
//   theta <- theta - lr * v               (otherwise)
template <class S>
class SgdOptimizer {
 public:
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  bool nesterov = true;

  void attach(ModelT<S>& model) {
    velocity.clear();
    for (auto* p : model.params()) velocity.emplace_back(p->shape());
  }

  void step(ModelT<S>& model) {
    auto params = model.params();
    auto grads = model.grads();
    if (velocity.size() != params.size())
      fail(ErrorKind::state, "optimizer not attached to this model");
    const S lr_s = static_cast<S>(lr);
    const S mu = static_cast<S>(momentum);
    const S wd = static_cast<S>(weight_decay);
    for (size_t t = 0; t < params.size(); ++t) {
      TensorT<S>& p = *params[t];
      const TensorT<S>& g = *grads[t];
      TensorT<S>& v = velocity[t];
      if (!v.same_shape(p)) fail(ErrorKind::state, "optimizer velocity shape mismatch");
      for (size_t i = 0; i < p.size(); ++i) {
        const S geff = g[i] + wd * p[i];
        v[i] = mu * v[i] + geff;
        p[i] -= nesterov ? lr_s * (geff + mu * v[i]) : lr_s * v[i];
      }
    }
  }

  std::vector<TensorT<S>> velocity;
};

using Sgd = SgdOptimizer<float>;
using SgdD = SgdOptimizer<double>;

}  // namespace ordlab
