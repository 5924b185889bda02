#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "replayirl/rng.hpp"
#include "replayirl/serialize.hpp"

namespace replayirl::neural {

using Matrix = Eigen::MatrixXd;  // one column per sample
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { Identity, ReLU };

struct LayerShape {
  int in = 0;
  int out = 0;
  Activation act = Activation::Identity;
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Intermediate values of one forward pass, consumed by backward().
struct Tape {
  std::vector<LayerShape> shapes;
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

struct Gradient {
  Vector params;  // same layout as Network::params()
  Matrix input;   // cotangent w.r.t. the network input
};

// Dense feed-forward network over a flat parameter vector laid out per layer
// as [W (out x in, column-major), b (out)].
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<LayerShape> layers);

  // Hidden layers use ReLU, the output layer is linear. Weights are drawn
  // uniformly in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static Network mlp(int in, std::span<const int> hidden, int out, Rng& rng);

  static std::size_t param_count(std::span<const LayerShape> layers);

  Matrix forward(const Matrix& input, Tape* tape = nullptr) const;
  Vector forward(std::span<const double> input) const;
  Gradient backward(const Tape& tape, const Matrix& output_cotangent) const;

  const std::vector<LayerShape>& layers() const { return layers_; }
  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }

  void save(io::Writer& w) const;
  static Network load(io::Reader& r);

 private:
  std::vector<LayerShape> layers_;
  Vector params_;
};

struct AdamWConfig {
  double lr = 1e-4;
  double lr_decay = 0.9999;  // per optimizer step
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t n, AdamWConfig config);

  // Decoupled decay then the bias-corrected Adam step, both scaled by
  // lr * lr_decay^steps(). Throws NonFiniteGradient without touching params.
  void step(Vector& params, const Vector& gradient);

  double learning_rate() const;
  std::int64_t steps() const { return steps_; }
  const AdamWConfig& config() const { return config_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

  void save(io::Writer& w) const;
  static AdamW load(io::Reader& r);

 private:
  AdamWConfig config_;
  Vector m_;
  Vector v_;
  std::int64_t steps_ = 0;
};

// Central-difference estimate of grad f at x.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)
double max_relative_error(const Vector& analytic, const Vector& numeric, double floor = 1e-6);

// Standalone checkpoint of a single network and its optimizer.
void write_checkpoint(const std::filesystem::path& path, const Network& net, const AdamW& opt);
std::pair<Network, AdamW> read_checkpoint(const std::filesystem::path& path);

}  // namespace replayirl::neural
