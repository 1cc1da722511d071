#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rewardlab/random.hpp"

namespace rewardlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised when a forward or backward pass produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int layer)
      : std::runtime_error(what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

// Fully connected network: tanh hidden layers, linear output. Parameters
// live in one flat vector, layer by layer: W (column-major, out x in), then b.
// Batches are column-major: one sample per column.
class Mlp {
 public:
  Mlp() = default;
  // All-zero parameters.
  explicit Mlp(std::vector<int> layer_sizes);

  // Orthogonal weights scaled by hidden_gain / output_gain, zero biases.
  static Mlp orthogonal(std::vector<int> layer_sizes, double hidden_gain, double output_gain,
                        Rng& rng);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index parameter_count() const { return params_.size(); }

  const Vector& parameters() const { return params_; }
  void set_parameters(const Vector& p);

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<Vector> bias(int layer);

  struct Tape {
    std::vector<Matrix> activations;  // input, then each layer's output
  };

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Tape& tape) const;

  // Gradient of a scalar loss w.r.t. the parameters, given dL/d(output).
  Vector backward(const Tape& tape, const Matrix& grad_output) const;

 private:
  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const;

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Vector params_;
};

// Adaptive moment optimizer with bias correction.
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(Eigen::Index num_params, AdamConfig config = {});

  // Throws std::invalid_argument on lr <= 0, NumericalError on a non-finite gradient.
  void step(Vector& params, const Vector& grad, double lr);

  long steps() const { return t_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

// Rescales grad in place so its L2 norm is at most max_norm.
void clip_gradient_norm(Vector& grad, double max_norm);

}  // namespace rewardlab
