#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>

#include <Eigen/Core>

namespace thor2
{

struct MlpParams
{
  int hidden_units = 512;
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

/// One-hidden-layer perceptron: standardized input, ReLU hidden layer,
/// softmax output, cross-entropy loss trained with Adam. Training is fully
/// determined by the data and `seed`.
class Mlp
{
public:
  Mlp() = default;

  /// `inputs` holds one sample per row.
  static Mlp Train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int n_classes,
                   const MlpParams& params);

  Eigen::VectorXd Probabilities(const Eigen::VectorXd& input) const;

  int input_dim() const { return static_cast<int>(mean_.size()); }
  int n_classes() const { return static_cast<int>(b2_.size()); }
  int hidden_units() const { return static_cast<int>(b1_.size()); }

  void Write(std::ostream& out) const;
  static Mlp Read(std::istream& in);

private:
  Eigen::MatrixXf Forward(const Eigen::MatrixXf& standardized, Eigen::MatrixXf* hidden) const;

  Eigen::VectorXf mean_;
  Eigen::VectorXf inv_scale_;
  Eigen::MatrixXf w1_;  ///< hidden x input
  Eigen::VectorXf b1_;
  Eigen::MatrixXf w2_;  ///< classes x hidden
  Eigen::VectorXf b2_;
};

}  // namespace thor2
