#include "replayirl/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "replayirl/error.hpp"

namespace replayirl::neural {

namespace {

constexpr char kCheckpointTag[9] = "RIRLNET_";
constexpr std::uint32_t kCheckpointVersion = 1;

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

void apply_activation(Activation act, Matrix& m) {
  if (act == Activation::ReLU) m = m.cwiseMax(0.0);
}

}  // namespace

Network::Network(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(Errc::ShapeMismatch, "network needs at least one layer");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].in != layers_[i - 1].out) throw Error(Errc::ShapeMismatch, "layer dimensions do not chain");
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(param_count(layers_)));
}

std::size_t Network::param_count(std::span<const LayerShape> layers) {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.in * l.out + l.out);
  return n;
}

Network Network::mlp(int in, std::span<const int> hidden, int out, Rng& rng) {
  std::vector<LayerShape> layers;
  int prev = in;
  for (int h : hidden) {
    layers.push_back({prev, h, Activation::ReLU});
    prev = h;
  }
  layers.push_back({prev, out, Activation::Identity});
  Network net(std::move(layers));
  Eigen::Index off = 0;
  for (const auto& l : net.layers_) {
    const double bound = std::sqrt(6.0 / (l.in + l.out));
    for (int k = 0; k < l.in * l.out; ++k) net.params_(off + k) = rng.uniform(-bound, bound);
    off += l.in * l.out + l.out;
  }
  return net;
}

Matrix Network::forward(const Matrix& input, Tape* tape) const {
  if (input.rows() != input_dim()) throw Error(Errc::ShapeMismatch, "input dimension mismatch");
  if (tape != nullptr) {
    tape->shapes = layers_;
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix x = input;
  Eigen::Index off = 0;
  for (const auto& l : layers_) {
    ConstMap w(params_.data() + off, l.out, l.in);
    Eigen::Map<const Vector> b(params_.data() + off + l.in * l.out, l.out);
    Matrix z = w * x;
    z.colwise() += b;
    if (tape != nullptr) {
      tape->inputs.push_back(std::move(x));
      tape->pre.push_back(z);
    }
    apply_activation(l.act, z);
    x = std::move(z);
    off += l.in * l.out + l.out;
  }
  return x;
}

Vector Network::forward(std::span<const double> input) const {
  Eigen::Map<const Matrix> col(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return forward(Matrix(col));
}

Gradient Network::backward(const Tape& tape, const Matrix& output_cotangent) const {
  if (tape.shapes != layers_ || tape.pre.size() != layers_.size()) {
    throw Error(Errc::TapeMismatch, "tape was recorded on a different network");
  }
  if (output_cotangent.rows() != output_dim() || output_cotangent.cols() != tape.pre.back().cols()) {
    throw Error(Errc::TapeMismatch, "cotangent shape does not match tape");
  }
  Gradient g;
  g.params = Vector::Zero(params_.size());
  Matrix delta = output_cotangent;
  Eigen::Index off = static_cast<Eigen::Index>(param_count(layers_));
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    off -= l.in * l.out + l.out;
    if (l.act == Activation::ReLU) delta = (tape.pre[i].array() > 0.0).select(delta, 0.0);
    MutMap(g.params.data() + off, l.out, l.in).noalias() = delta * tape.inputs[i].transpose();
    Eigen::Map<Vector>(g.params.data() + off + l.in * l.out, l.out) = delta.rowwise().sum();
    ConstMap w(params_.data() + off, l.out, l.in);
    delta = w.transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

void Network::save(io::Writer& w) const {
  w.put<std::uint64_t>(layers_.size());
  for (const auto& l : layers_) {
    w.put<std::int32_t>(l.in);
    w.put<std::int32_t>(l.out);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(l.act));
  }
  w.put_vector(params_);
}

Network Network::load(io::Reader& r) {
  const auto n = r.get<std::uint64_t>();
  if (n == 0 || n > 64) throw Error(Errc::Io, "corrupt network header");
  std::vector<LayerShape> layers(n);
  for (auto& l : layers) {
    l.in = r.get<std::int32_t>();
    l.out = r.get<std::int32_t>();
    l.act = static_cast<Activation>(r.get<std::uint8_t>());
  }
  Network net(std::move(layers));
  Vector p = r.get_vector();
  if (p.size() != net.params_.size()) throw Error(Errc::ShapeMismatch, "parameter count does not match layers");
  net.params_ = std::move(p);
  return net;
}

AdamW::AdamW(std::size_t n, AdamWConfig config)
    : config_(config),
      m_(Vector::Zero(static_cast<Eigen::Index>(n))),
      v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

double AdamW::learning_rate() const { return config_.lr * std::pow(config_.lr_decay, static_cast<double>(steps_)); }

void AdamW::step(Vector& params, const Vector& gradient) {
  if (params.size() != m_.size() || gradient.size() != m_.size()) {
    throw Error(Errc::ShapeMismatch, "optimizer length mismatch");
  }
  if (!gradient.allFinite()) throw Error(Errc::NonFiniteGradient, "gradient contains NaN or Inf");
  const double lr = learning_rate();
  params -= (lr * config_.weight_decay) * params;
  ++steps_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * gradient;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.eps);
}

void AdamW::save(io::Writer& w) const {
  w.put(config_);
  w.put<std::int64_t>(steps_);
  w.put_vector(m_);
  w.put_vector(v_);
}

AdamW AdamW::load(io::Reader& r) {
  AdamW a;
  a.config_ = r.get<AdamWConfig>();
  a.steps_ = r.get<std::int64_t>();
  a.m_ = r.get_vector();
  a.v_ = r.get_vector();
  if (a.m_.size() != a.v_.size()) throw Error(Errc::Io, "corrupt optimizer state");
  return a;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double max_relative_error(const Vector& analytic, const Vector& numeric, double floor) {
  if (analytic.size() != numeric.size()) throw Error(Errc::ShapeMismatch, "gradient lengths differ");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric(i)), floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / denom);
  }
  return worst;
}

void write_checkpoint(const std::filesystem::path& path, const Network& net, const AdamW& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  io::Writer w(out);
  w.put_tag(kCheckpointTag, kCheckpointVersion);
  net.save(w);
  opt.save(w);
}

std::pair<Network, AdamW> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  io::Reader r(in);
  r.expect_tag(kCheckpointTag, kCheckpointVersion);
  Network net = Network::load(r);
  AdamW opt = AdamW::load(r);
  if (opt.first_moment().size() != net.params().size()) throw Error(Errc::ShapeMismatch, "optimizer/network mismatch");
  return {std::move(net), std::move(opt)};
}

}  // namespace replayirl::neural
