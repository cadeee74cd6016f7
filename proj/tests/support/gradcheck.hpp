#pragma once

// Finite-difference oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "uavckm/nn.hpp"

namespace uavckm::oracle {

/// Relative error with a 1e-4 floor on the scale: gradients that vanish
/// analytically (e.g. a bias feeding batch norm) are compared absolutely.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / scale;
}

/// Worst relative error between `analytic` and central differences of
/// `loss` over every entry of `params`.
inline double max_fd_error(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& analytic,
                           const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = loss();
      p.data()[i] = saved - h;
      const double down = loss();
      p.data()[i] = saved;
      worst = std::max(worst, relative_error(analytic[t]->data()[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

struct ArchitectureCheck {
  double parameter_error{0.0};
  double input_error{0.0};
  bool has_batch_norm{false};
};

/// Random small network and batch; loss = sum(output .* weights).
inline ArchitectureCheck check_random_architecture(Rng& rng, bool force_batch_norm, Mode mode = Mode::train) {
  const std::size_t in = 2 + rng.index(4);
  const std::size_t depth = 1 + rng.index(3);
  std::vector<LayerSpec> specs;
  bool any_bn = false;
  for (std::size_t k = 0; k < depth; ++k) {
    LayerSpec s;
    s.units = 2 + rng.index(4);
    static constexpr Activation kActs[] = {Activation::tanh, Activation::sigmoid, Activation::identity,
                                           Activation::relu};
    s.activation = kActs[rng.index(4)];
    s.batch_norm = rng.uniform() < 0.5 || (force_batch_norm && k == 0);
    any_bn = any_bn || s.batch_norm;
    specs.push_back(s);
  }
  Network net = Network::build(in, specs, rng);
  for (auto* p : net.parameters()) {
    for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] += rng.uniform(-0.3, 0.3);
  }
  for (auto& l : net.layers()) {
    if (!l.batch_norm) continue;
    for (Eigen::Index i = 0; i < l.running_mean.size(); ++i) {
      l.running_mean.data()[i] = rng.uniform(-0.5, 0.5);
      l.running_var.data()[i] = rng.uniform(0.5, 2.0);
    }
  }
  const Eigen::Index batch = 3 + static_cast<Eigen::Index>(rng.index(5));
  Matrix x(batch, static_cast<Eigen::Index>(in));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.5, 1.5);
  Matrix w(batch, static_cast<Eigen::Index>(net.output_dim()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);

  auto loss = [&] { return net.forward(x, mode).cwiseProduct(w).sum(); };
  ForwardCache cache;
  net.forward(x, mode, &cache);
  const Gradients g = net.backward(cache, w);

  ArchitectureCheck out;
  out.has_batch_norm = any_bn;
  out.parameter_error = max_fd_error(net.parameters(), g.tensors(), loss);
  std::vector<Matrix*> inputs{&x};
  std::vector<const Matrix*> input_grads{&g.input};
  out.input_error = max_fd_error(inputs, input_grads, loss);
  return out;
}

}  // namespace uavckm::oracle
