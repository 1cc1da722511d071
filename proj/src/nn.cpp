#include "rewardlab/nn.hpp"

#include <cmath>

namespace rewardlab {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  std::size_t offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(offset);
    const auto in = static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l)]);
    const auto out = static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l) + 1]);
    offset += (in + 1) * out;
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
}

std::size_t Mlp::bias_offset(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return offsets_[l] + static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
}

Eigen::Map<const Matrix> Mlp::weight(int l) const {
  return {params_.data() + weight_offset(l), sizes_[static_cast<std::size_t>(l) + 1],
          sizes_[static_cast<std::size_t>(l)]};
}
Eigen::Map<const Vector> Mlp::bias(int l) const {
  return {params_.data() + bias_offset(l), sizes_[static_cast<std::size_t>(l) + 1]};
}
Eigen::Map<Matrix> Mlp::weight(int l) {
  return {params_.data() + weight_offset(l), sizes_[static_cast<std::size_t>(l) + 1],
          sizes_[static_cast<std::size_t>(l)]};
}
Eigen::Map<Vector> Mlp::bias(int l) {
  return {params_.data() + bias_offset(l), sizes_[static_cast<std::size_t>(l) + 1]};
}

Mlp Mlp::orthogonal(std::vector<int> layer_sizes, double hidden_gain, double output_gain, Rng& rng) {
  Mlp net(std::move(layer_sizes));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    const Eigen::Index rows = w.rows(), cols = w.cols();
    const bool tall = rows >= cols;
    Matrix a(tall ? rows : cols, tall ? cols : rows);
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    // Sign fix makes the draw uniform over orthogonal matrices.
    const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      if (r(j, j) < 0) q.col(j) *= -1.0;
    const double gain = l + 1 == net.num_layers() ? output_gain : hidden_gain;
    if (tall)
      w = gain * q;
    else
      w = gain * q.transpose();
  }
  return net;
}

void Mlp::set_parameters(const Vector& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("parameter vector has wrong length");
  params_ = p;
}

Vector Mlp::forward(const Vector& x) const {
  Matrix out = forward(Matrix(x));
  return out.col(0);
}

Matrix Mlp::forward(const Matrix& x) const {
  Tape tape;
  return forward(x, tape);
}

Matrix Mlp::forward(const Matrix& x, Tape& tape) const {
  if (x.rows() != input_dim())
    throw std::invalid_argument("input dimension " + std::to_string(x.rows()) + " != " +
                                std::to_string(input_dim()));
  if (!x.allFinite()) throw NumericalError("non-finite network input", 0);
  tape.activations.clear();
  tape.activations.reserve(static_cast<std::size_t>(num_layers()) + 1);
  tape.activations.push_back(x);
  for (int l = 0; l < num_layers(); ++l) {
    Matrix z = weight(l) * tape.activations.back();
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) z = z.array().tanh().matrix();
    if (!z.allFinite()) throw NumericalError("non-finite activation", l);
    tape.activations.push_back(std::move(z));
  }
  return tape.activations.back();
}

Vector Mlp::backward(const Tape& tape, const Matrix& grad_output) const {
  if (tape.activations.size() != static_cast<std::size_t>(num_layers()) + 1)
    throw std::invalid_argument("tape does not match network");
  const Matrix& out = tape.activations.back();
  if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols())
    throw std::invalid_argument("output gradient shape mismatch");
  Vector grad = Vector::Zero(params_.size());
  Matrix delta = grad_output;  // dL/dz for the current layer
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (!delta.allFinite()) throw NumericalError("non-finite gradient", l);
    const Matrix& input = tape.activations[static_cast<std::size_t>(l)];
    const auto rows = sizes_[static_cast<std::size_t>(l) + 1];
    const auto cols = sizes_[static_cast<std::size_t>(l)];
    Eigen::Map<Matrix>(grad.data() + weight_offset(l), rows, cols) = delta * input.transpose();
    Eigen::Map<Vector>(grad.data() + bias_offset(l), rows) = delta.rowwise().sum();
    if (l > 0) {
      Matrix upstream = weight(l).transpose() * delta;
      // input is tanh output of the previous layer: d tanh = 1 - h^2
      delta = upstream.array() * (1.0 - input.array().square());
    }
  }
  return grad;
}

Adam::Adam(Eigen::Index n, AdamConfig config)
    : config_(config), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

void Adam::step(Vector& params, const Vector& grad, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (grad.size() != m_.size() || params.size() != m_.size())
    throw std::invalid_argument("optimizer state size mismatch");
  if (!grad.allFinite()) throw NumericalError("non-finite gradient passed to optimizer", -1);
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
}

void clip_gradient_norm(Vector& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
}

}  // namespace rewardlab
