#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "contact_replay/binary_io.hpp"
#include "contact_replay/rng.hpp"

namespace contact_replay {

enum class OutputActivation : std::uint8_t { identity = 0, tanh = 1 };

// Dense feed-forward network with ReLU hidden layers. All parameters live in
// one contiguous vector (per layer: column-major weight matrix, then bias) so
// the optimizer and target updates operate on flat storage.
//
// Batched calls take one sample per column.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output_activation);

  // Fan-in uniform initialization; the output layer uses +-output_scale.
  void init_uniform(Rng& rng, double output_scale = 3e-3);
  void set_zero();

  std::size_t input_size() const { return layer_sizes_.front(); }
  std::size_t output_size() const { return layer_sizes_.back(); }
  std::size_t layer_count() const { return layer_sizes_.size() - 1; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  OutputActivation output_activation() const { return output_activation_; }

  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  const Eigen::VectorXd& gradients() const { return grads_; }

  // Forward pass that caches activations for backward().
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input);
  Eigen::VectorXd forward(std::span<const double> input);

  // Forward pass without touching the cache.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& input) const;

  // Reverse-mode pass through the cached forward. Overwrites gradients()
  // with d(sum of output_grad . output)/d(params) and returns the gradient
  // with respect to the cached input.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& output_grad);

  bool same_architecture(const Mlp& other) const;

  void save(BinaryWriter& w) const;
  static Mlp load(BinaryReader& r);

 private:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activations
    Eigen::MatrixXd output;
  };

  Eigen::MatrixXd run(const Eigen::MatrixXd& input, Cache* cache) const;

  std::vector<std::size_t> layer_sizes_{1, 1};
  OutputActivation output_activation_ = OutputActivation::identity;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  Eigen::VectorXd params_;
  Eigen::VectorXd grads_;

  Cache cache_;
  bool has_cache_ = false;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t parameter_count, double lr);

  void save(BinaryWriter& w) const;
  static AdamState load(BinaryReader& r);
};

// Bias-corrected Adam update in place. A gradient containing NaN/Inf leaves
// parameters and moments untouched, bumps state.skipped and returns false.
bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);

// target <- tau * online + (1 - tau) * target
void soft_update(Mlp& target, const Mlp& online, double tau);

}  // namespace contact_replay
