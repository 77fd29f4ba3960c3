#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lird/rng.hpp"

namespace lird::net {

enum class Activation : std::uint8_t { kTanh, kRelu, kIdentity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;
};

/// Dense feed-forward network. Layers chain: layer[i].weight.cols() equals
/// layer[i-1].weight.rows().
struct NetParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_params() const;
  bool all_finite() const;
  void validate() const;
};

/// Gradients, shape-congruent with the NetParams they were computed for.
struct Grads {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static Grads zeros_like(const NetParams& params);
  bool all_finite() const;
  Grads& operator+=(const Grads& other);
  Grads& operator*=(double s);
};

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kIdentity;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};
using Architecture = std::vector<LayerSpec>;

Architecture architecture_of(const NetParams& params);

/// `sizes` lists every layer width including input and output. Hidden layers
/// use `hidden`, the last layer uses `output`. Weights and biases are drawn
/// uniformly from +-1/sqrt(fan_in).
NetParams make_mlp(const std::vector<std::size_t>& sizes, Activation hidden, Activation output,
                   Rng& rng);

Eigen::VectorXd forward(const NetParams& params, const Eigen::VectorXd& input);

/// Post-activation outputs of every layer for a batch (columns are samples).
/// activations[0] is the input, activations.back() the network output.
struct Trace {
  std::vector<Eigen::MatrixXd> activations;
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

Trace forward_batch(const NetParams& params, const Eigen::MatrixXd& inputs);

struct BackwardResult {
  Grads grads;               // summed over the batch
  Eigen::MatrixXd input_grad;  // in x batch
};

/// Reverse-mode gradients of sum_b upstream(:,b) . output(:,b). The input
/// gradient is skipped (left empty) when `want_input_grad` is false.
BackwardResult backward(const NetParams& params, const Trace& trace,
                        const Eigen::MatrixXd& upstream, bool want_input_grad = true);
BackwardResult backward(const NetParams& params, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& upstream);

/// Plain SGD: params -= lr * grads. Throws std::runtime_error on non-finite grads.
void apply_update(NetParams& params, const Grads& grads, double learning_rate);

/// target <- tau * source + (1 - tau) * target.
void soft_update(NetParams& target, const NetParams& source, double tau);

/// Adam first-order optimiser, same update contract as apply_update.
class Adam {
 public:
  explicit Adam(const NetParams& params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(NetParams& params, const Grads& grads, double learning_rate);

 private:
  Grads m_, v_;
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

std::uint64_t checksum(const NetParams& params);

struct Checkpoint {
  std::string tag;
  std::uint64_t seed = 0;
  NetParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws std::runtime_error if the file's architecture differs from `expected`
/// (when given) or its tag differs from `expected_tag` (when non-empty).
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_tag = "",
                           const Architecture* expected = nullptr);

}  // namespace lird::net
