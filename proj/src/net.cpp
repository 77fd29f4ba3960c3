#include "lird/net.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "lird/checksum.hpp"

namespace lird::net {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::size_t NetParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t NetParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::size_t NetParams::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool NetParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void NetParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].bias.size() != layers[i].weight.rows()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": bias/weight mismatch");
    }
    if (i > 0 && layers[i].weight.cols() != layers[i - 1].weight.rows()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": dimensions do not chain");
    }
  }
  if (!all_finite()) throw std::invalid_argument("network has non-finite parameters");
}

Grads Grads::zeros_like(const NetParams& params) {
  Grads g;
  for (const auto& l : params.layers) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

bool Grads::all_finite() const {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (!weight[i].allFinite() || !bias[i].allFinite()) return false;
  }
  return true;
}

Grads& Grads::operator+=(const Grads& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Grads& Grads::operator*=(double s) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] *= s;
    bias[i] *= s;
  }
  return *this;
}

Architecture architecture_of(const NetParams& params) {
  Architecture arch;
  for (const auto& l : params.layers) {
    arch.push_back({static_cast<std::size_t>(l.weight.cols()),
                    static_cast<std::size_t>(l.weight.rows()), l.activation});
  }
  return arch;
}

NetParams make_mlp(const std::vector<std::size_t>& sizes, Activation hidden, Activation output,
                   Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output sizes");
  NetParams params;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(sizes[i]);
    const auto out = static_cast<Eigen::Index>(sizes[i + 1]);
    if (in == 0 || out == 0) throw std::invalid_argument("make_mlp: zero-width layer");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> init(-bound, bound);
    Layer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = init(rng);
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = init(rng);
    layer.activation = i + 2 == sizes.size() ? output : hidden;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace {

void activate(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::kTanh: {
      // Vectorised exp-based form; libm tanh dominated training profiles.
      // Near zero the series avoids the cancellation in 1 - 2/(e+1).
      const Eigen::ArrayXXd x = z.array();
      const Eigen::ArrayXXd e = (2.0 * x).exp();
      const Eigen::ArrayXXd x2 = x.square();
      const Eigen::ArrayXXd series = x * (1.0 - x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0)));
      z = (x.abs() < 5e-3).select(series, 1.0 - 2.0 / (e + 1.0));
      break;
    }
    case Activation::kRelu:
      z = z.array().max(0.0);
      break;
    case Activation::kIdentity:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the post-activation output `y`.
void activation_backward(Eigen::MatrixXd& grad, const Eigen::MatrixXd& y, Activation a) {
  switch (a) {
    case Activation::kTanh:
      grad.array() *= 1.0 - y.array().square();
      break;
    case Activation::kRelu:
      grad.array() *= (y.array() > 0.0).cast<double>();
      break;
    case Activation::kIdentity:
      break;
  }
}

}  // namespace

Trace forward_batch(const NetParams& params, const Eigen::MatrixXd& inputs) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (static_cast<std::size_t>(inputs.rows()) != params.input_dim()) {
    throw std::invalid_argument("forward: input dimension " + std::to_string(inputs.rows()) +
                                " != " + std::to_string(params.input_dim()));
  }
  Trace trace;
  trace.activations.reserve(params.layers.size() + 1);
  trace.activations.push_back(inputs);
  for (const auto& l : params.layers) {
    Eigen::MatrixXd z(l.weight.rows(), inputs.cols());
    z.noalias() = l.weight * trace.activations.back();
    z.colwise() += l.bias;
    activate(z, l.activation);
    trace.activations.push_back(std::move(z));
  }
  return trace;
}

Eigen::VectorXd forward(const NetParams& params, const Eigen::VectorXd& input) {
  return forward_batch(params, input).output().col(0);
}

BackwardResult backward(const NetParams& params, const Trace& trace,
                        const Eigen::MatrixXd& upstream, bool want_input_grad) {
  if (trace.activations.size() != params.layers.size() + 1) {
    throw std::invalid_argument("backward: trace does not match network");
  }
  if (upstream.rows() != trace.output().rows() || upstream.cols() != trace.output().cols()) {
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  }
  BackwardResult result;
  result.grads.weight.resize(params.layers.size());
  result.grads.bias.resize(params.layers.size());
  Eigen::MatrixXd grad = upstream;
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const auto& l = params.layers[i];
    activation_backward(grad, trace.activations[i + 1], l.activation);
    result.grads.weight[i] = grad * trace.activations[i].transpose();
    result.grads.bias[i] = grad.rowwise().sum();
    if (i > 0 || want_input_grad) grad = l.weight.transpose() * grad;
  }
  if (want_input_grad) result.input_grad = std::move(grad);
  return result;
}

BackwardResult backward(const NetParams& params, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& upstream) {
  return backward(params, forward_batch(params, input), upstream);
}

void apply_update(NetParams& params, const Grads& grads, double learning_rate) {
  if (grads.weight.size() != params.layers.size()) {
    throw std::invalid_argument("apply_update: gradient shape mismatch");
  }
  if (!grads.all_finite()) throw std::runtime_error("apply_update: non-finite gradient (divergence)");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    params.layers[i].weight -= learning_rate * grads.weight[i];
    params.layers[i].bias -= learning_rate * grads.bias[i];
  }
}

void soft_update(NetParams& target, const NetParams& source, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau outside [0,1]");
  if (architecture_of(target) != architecture_of(source)) {
    throw std::invalid_argument("soft_update: architectures differ");
  }
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& s = source.layers[i];
    t.weight = tau * s.weight + (1.0 - tau) * t.weight;
    t.bias = tau * s.bias + (1.0 - tau) * t.bias;
  }
}

Adam::Adam(const NetParams& params, double beta1, double beta2, double eps)
    : m_(Grads::zeros_like(params)), v_(Grads::zeros_like(params)),
      beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(NetParams& params, const Grads& grads, double learning_rate) {
  if (grads.weight.size() != params.layers.size()) {
    throw std::invalid_argument("Adam::step: gradient shape mismatch");
  }
  if (!grads.all_finite()) throw std::runtime_error("Adam::step: non-finite gradient (divergence)");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = learning_rate * std::sqrt(c2) / c1;
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= step * m.array() / (v.array().sqrt() + eps_);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, m_.weight[i], v_.weight[i], grads.weight[i]);
    update(params.layers[i].bias, m_.bias[i], v_.bias[i], grads.bias[i]);
  }
}

std::uint64_t checksum(const NetParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& l : params.layers) {
    const std::uint64_t shape[3] = {static_cast<std::uint64_t>(l.weight.rows()),
                                    static_cast<std::uint64_t>(l.weight.cols()),
                                    static_cast<std::uint64_t>(l.activation)};
    h = fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(shape),
                                             sizeof(shape)),
              h);
    h = fnv1a(std::span<const double>(l.weight.data(), static_cast<std::size_t>(l.weight.size())), h);
    h = fnv1a(std::span<const double>(l.bias.data(), static_cast<std::size_t>(l.bias.size())), h);
  }
  return h;
}

namespace {

constexpr std::string_view kCheckpointMagic = "lird-net v1";

void write_row(std::ostream& out, const double* data, Eigen::Index n, Eigen::Index stride) {
  char buf[64];
  for (Eigen::Index j = 0; j < n; ++j) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), data[j * stride]);
    if (j) out << ' ';
    out.write(buf, ptr - buf);
  }
  out << '\n';
}

double read_number(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("checkpoint " + path.string() + ": truncated");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw std::runtime_error("checkpoint " + path.string() + ": bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n';
  out << "tag " << checkpoint.tag << '\n';
  out << "seed " << checkpoint.seed << '\n';
  out << "layers " << checkpoint.params.layers.size() << '\n';
  for (const auto& l : checkpoint.params.layers) {
    out << "layer " << l.weight.cols() << ' ' << l.weight.rows() << ' ' << to_string(l.activation)
        << '\n';
  }
  for (const auto& l : checkpoint.params.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      write_row(out, l.weight.data() + r, l.weight.cols(), l.weight.rows());
    }
    write_row(out, l.bias.data(), l.bias.size(), 1);
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_tag,
                           const Architecture* expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw std::runtime_error("checkpoint " + path.string() + ": unsupported format or version");
  }
  Checkpoint ck;
  std::string key;
  std::size_t n_layers = 0;
  if (!(in >> key >> ck.tag) || key != "tag") throw std::runtime_error("checkpoint: missing tag");
  if (!(in >> key >> ck.seed) || key != "seed") throw std::runtime_error("checkpoint: missing seed");
  if (!(in >> key >> n_layers) || key != "layers") {
    throw std::runtime_error("checkpoint: missing layer count");
  }
  if (!expected_tag.empty() && ck.tag != expected_tag) {
    throw std::runtime_error("checkpoint " + path.string() + " is tagged '" + ck.tag +
                             "', expected '" + expected_tag + "'");
  }
  Architecture arch(n_layers);
  for (auto& spec : arch) {
    std::string act;
    if (!(in >> key >> spec.in >> spec.out >> act) || key != "layer") {
      throw std::runtime_error("checkpoint: bad layer descriptor");
    }
    spec.activation = parse_activation(act);
  }
  if (expected && *expected != arch) {
    throw std::runtime_error("checkpoint " + path.string() + ": architecture mismatch");
  }
  for (const auto& spec : arch) {
    Layer l;
    l.activation = spec.activation;
    l.weight.resize(static_cast<Eigen::Index>(spec.out), static_cast<Eigen::Index>(spec.in));
    l.bias.resize(static_cast<Eigen::Index>(spec.out));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = read_number(in, path);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = read_number(in, path);
    ck.params.layers.push_back(std::move(l));
  }
  ck.params.validate();
  return ck;
}

}  // namespace lird::net
