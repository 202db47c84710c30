#include "contact_replay/nn.hpp"

#include <cmath>
#include <string>

#include "contact_replay/errors.hpp"

namespace contact_replay {

namespace {
constexpr std::string_view kMlpMagic = "CRMLP";
constexpr std::uint32_t kMlpFormatVersion = 1;
}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output_activation)
    : layer_sizes_(std::move(layer_sizes)), output_activation_(output_activation) {
  require(layer_sizes_.size() >= 2, "Mlp needs at least an input and an output size");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    require(layer_sizes_[l] > 0 && layer_sizes_[l + 1] > 0, "Mlp layer sizes must be positive");
    offsets_.push_back(total);
    total += layer_sizes_[l] * layer_sizes_[l + 1] + layer_sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  grads_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

void Mlp::init_uniform(Rng& rng, double output_scale) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const bool last = l + 1 == layer_count();
    const double bound = last ? output_scale : 1.0 / std::sqrt(static_cast<double>(layer_sizes_[l]));
    auto w = weight(l);
    auto b = bias(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -bound, bound);
    }
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = uniform(rng, -bound, bound);
  }
}

void Mlp::set_zero() { params_.setZero(); }

Eigen::Map<Eigen::MatrixXd> Mlp::weight(std::size_t layer) {
  return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(layer_sizes_[layer + 1]),
          static_cast<Eigen::Index>(layer_sizes_[layer])};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t layer) const {
  return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(layer_sizes_[layer + 1]),
          static_cast<Eigen::Index>(layer_sizes_[layer])};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(std::size_t layer) {
  return {params_.data() + offsets_[layer] + layer_sizes_[layer] * layer_sizes_[layer + 1],
          static_cast<Eigen::Index>(layer_sizes_[layer + 1])};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t layer) const {
  return {params_.data() + offsets_[layer] + layer_sizes_[layer] * layer_sizes_[layer + 1],
          static_cast<Eigen::Index>(layer_sizes_[layer + 1])};
}

Eigen::MatrixXd Mlp::run(const Eigen::MatrixXd& input, Cache* cache) const {
  require(static_cast<std::size_t>(input.rows()) == input_size(),
          "Mlp::forward: input has " + std::to_string(input.rows()) + " rows, expected " +
              std::to_string(input_size()));
  if (cache) {
    cache->inputs.resize(layer_count());
    cache->pre.resize(layer_count());
  }
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (cache) {
      cache->inputs[l] = std::move(a);
      cache->pre[l] = z;
    }
    const bool last = l + 1 == layer_count();
    if (!last) {
      a = z.cwiseMax(0.0);
    } else if (output_activation_ == OutputActivation::tanh) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  if (cache) cache->output = a;
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) {
  has_cache_ = false;
  Eigen::MatrixXd out = run(input, &cache_);
  has_cache_ = true;
  return out;
}

Eigen::VectorXd Mlp::forward(std::span<const double> input) {
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                                        static_cast<Eigen::Index>(input.size()));
  return forward(x).col(0);
}

Eigen::MatrixXd Mlp::predict(const Eigen::MatrixXd& input) const { return run(input, nullptr); }

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& output_grad) {
  require(has_cache_, "Mlp::backward called without a preceding forward");
  require(output_grad.rows() == cache_.output.rows() && output_grad.cols() == cache_.output.cols(),
          "Mlp::backward: gradient shape does not match the cached output");
  Eigen::MatrixXd g = output_grad;
  if (output_activation_ == OutputActivation::tanh) {
    g.array() *= 1.0 - cache_.output.array().square();
  }
  for (std::size_t l = layer_count(); l-- > 0;) {
    if (l + 1 != layer_count()) {
      g.array() *= (cache_.pre[l].array() > 0.0).cast<double>();
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(layer_sizes_[l + 1]);
    const Eigen::Index cols = static_cast<Eigen::Index>(layer_sizes_[l]);
    Eigen::Map<Eigen::MatrixXd> gw(grads_.data() + offsets_[l], rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grads_.data() + offsets_[l] + rows * cols, rows);
    gw.noalias() = g * cache_.inputs[l].transpose();
    gb = g.rowwise().sum();
    g = weight(l).transpose() * g;
  }
  return g;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return layer_sizes_ == other.layer_sizes_ && output_activation_ == other.output_activation_;
}

void Mlp::save(BinaryWriter& w) const {
  w.write_magic(kMlpMagic);
  w.write<std::uint32_t>(kMlpFormatVersion);
  w.write<std::uint8_t>(static_cast<std::uint8_t>(output_activation_));
  w.write<std::uint64_t>(layer_sizes_.size());
  for (std::size_t s : layer_sizes_) w.write<std::uint64_t>(s);
  // on disk each layer is its weight matrix in row-major order, then its bias
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(params_.size()));
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const auto wl = weight(l);
    for (Eigen::Index i = 0; i < wl.rows(); ++i)
      for (Eigen::Index j = 0; j < wl.cols(); ++j) flat.push_back(wl(i, j));
    const auto bl = bias(l);
    for (Eigen::Index i = 0; i < bl.size(); ++i) flat.push_back(bl(i));
  }
  w.write_doubles(flat.data(), flat.size());
}

Mlp Mlp::load(BinaryReader& r) {
  r.expect_magic(kMlpMagic, "network parameter block");
  const auto version = r.read<std::uint32_t>("network format_version");
  if (version != kMlpFormatVersion) {
    throw IoError("unsupported network format_version " + std::to_string(version));
  }
  const auto act = r.read<std::uint8_t>("output activation");
  if (act > 1) throw IoError("unknown output activation code " + std::to_string(act));
  const auto n = r.read<std::uint64_t>("layer count");
  if (n < 2 || n > 64) throw IoError("implausible layer count " + std::to_string(n));
  std::vector<std::size_t> sizes(n);
  for (auto& s : sizes) {
    s = r.read<std::uint64_t>("layer size");
    if (s == 0 || s > (1u << 20)) throw IoError("implausible layer size " + std::to_string(s));
  }
  Mlp net(sizes, static_cast<OutputActivation>(act));
  const auto params = r.read_vector("network parameters");
  if (params.size() != net.parameter_count()) {
    throw IoError("network parameter count " + std::to_string(params.size()) +
                  " does not match layer sizes (expected " +
                  std::to_string(net.parameter_count()) + ")");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto wl = net.weight(l);
    for (Eigen::Index i = 0; i < wl.rows(); ++i)
      for (Eigen::Index j = 0; j < wl.cols(); ++j) wl(i, j) = params[k++];
    auto bl = net.bias(l);
    for (Eigen::Index i = 0; i < bl.size(); ++i) bl(i) = params[k++];
  }
  return net;
}

AdamState::AdamState(std::size_t parameter_count, double lr)
    : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count))),
      learning_rate(lr) {}

void AdamState::save(BinaryWriter& w) const {
  w.write<std::uint64_t>(step);
  w.write<std::uint64_t>(skipped);
  w.write<double>(learning_rate);
  w.write<double>(beta1);
  w.write<double>(beta2);
  w.write<double>(epsilon);
  w.write_doubles(m.data(), static_cast<std::size_t>(m.size()));
  w.write_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

AdamState AdamState::load(BinaryReader& r) {
  AdamState s;
  s.step = r.read<std::uint64_t>("adam step");
  s.skipped = r.read<std::uint64_t>("adam skipped");
  s.learning_rate = r.read<double>("adam learning rate");
  s.beta1 = r.read<double>("adam beta1");
  s.beta2 = r.read<double>("adam beta2");
  s.epsilon = r.read<double>("adam epsilon");
  const auto m = r.read_vector("adam first moment");
  const auto v = r.read_vector("adam second moment");
  if (m.size() != v.size()) throw IoError("adam moment sizes differ");
  s.m = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  s.v = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return s;
}

bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state) {
  require(params.size() == grads.size(), "adam_step: gradient size mismatch");
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          "adam_step: moment size mismatch");
  if (!grads.allFinite()) {
    ++state.skipped;
    return false;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.learning_rate * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.epsilon);
  return true;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  require(target.same_architecture(online), "soft_update: architecture mismatch");
  require(tau >= 0.0 && tau <= 1.0, "soft_update: tau must lie in [0, 1]");
  target.parameters() = tau * online.parameters() + (1.0 - tau) * target.parameters();
}

}  // namespace contact_replay
