#include "thor2/mlp.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "thor2/errors.hpp"

namespace thor2
{
namespace
{
// Distribution objects are implementation-defined; map raw engine output
// directly so a seed means the same thing everywhere.
double Uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void Shuffle(std::vector<int>& order, std::mt19937_64& rng)
{
  for (std::size_t i = order.size(); i > 1; --i)
  {
    std::swap(order[i - 1], order[rng() % i]);
  }
}

struct AdamState
{
  Eigen::MatrixXf m;
  Eigen::MatrixXf v;

  explicit AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXf::Zero(rows, cols)), v(Eigen::MatrixXf::Zero(rows, cols))
  {
  }

  template <typename Param, typename Grad>
  void Step(Param& param, const Grad& grad, float lr, float correction1, float correction2)
  {
    constexpr float kBeta1 = 0.9f;
    constexpr float kBeta2 = 0.999f;
    constexpr float kEps = 1e-8f;
    m = kBeta1 * m + (1.0f - kBeta1) * grad;
    v = kBeta2 * v + (1.0f - kBeta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + kEps);
  }
};

void SoftmaxColumns(Eigen::MatrixXf& z)
{
  for (Eigen::Index c = 0; c < z.cols(); ++c)
  {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    col /= col.sum();
  }
}
}  // namespace

Mlp Mlp::Train(const Eigen::MatrixXd& inputs, std::span<const int> labels, int n_classes,
               const MlpParams& params)
{
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  if (n == 0 || d == 0)
  {
    throw std::invalid_argument("Mlp::Train: empty training set");
  }
  if (static_cast<Eigen::Index>(labels.size()) != n)
  {
    throw std::invalid_argument("Mlp::Train: label count differs from sample count");
  }
  if (n_classes < 2 || params.hidden_units < 1 || params.batch_size < 1 || params.epochs < 0)
  {
    throw std::invalid_argument("Mlp::Train: invalid parameters");
  }
  for (const int y : labels)
  {
    if (y < 0 || y >= n_classes)
    {
      throw std::invalid_argument("Mlp::Train: label out of range");
    }
  }

  Mlp mlp;
  const Eigen::RowVectorXd mean = inputs.colwise().mean();
  const Eigen::RowVectorXd var =
      (inputs.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n);
  mlp.mean_ = mean.transpose().cast<float>();
  mlp.inv_scale_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j)
  {
    const double sd = std::sqrt(var(j));
    mlp.inv_scale_(j) = sd > 1e-12 ? static_cast<float>(1.0 / sd) : 1.0f;
  }
  const Eigen::MatrixXf x =
      ((inputs.cast<float>().rowwise() - mlp.mean_.transpose()).array().rowwise() *
       mlp.inv_scale_.transpose().array())
          .matrix()
          .transpose();  // d x n

  std::mt19937_64 rng(params.seed);
  const int h = params.hidden_units;
  auto init = [&rng](Eigen::MatrixXf& w, Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(cols));
    w.resize(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
    {
      for (Eigen::Index r = 0; r < rows; ++r)
      {
        w(r, c) = static_cast<float>((2.0 * Uniform01(rng) - 1.0) * limit);
      }
    }
  };
  init(mlp.w1_, h, d);
  init(mlp.w2_, n_classes, h);
  mlp.b1_ = Eigen::VectorXf::Zero(h);
  mlp.b2_ = Eigen::VectorXf::Zero(n_classes);

  AdamState s_w1(h, d), s_b1(h, 1), s_w2(n_classes, h), s_b2(n_classes, 1);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto lr = static_cast<float>(params.learning_rate);
  const auto decay = static_cast<float>(params.weight_decay);
  int step = 0;
  Eigen::MatrixXf xb, yb, hidden;
  for (int epoch = 0; epoch < params.epochs; ++epoch)
  {
    Shuffle(order, rng);
    for (Eigen::Index start = 0; start < n; start += params.batch_size)
    {
      const Eigen::Index b = std::min<Eigen::Index>(params.batch_size, n - start);
      xb.resize(d, b);
      yb = Eigen::MatrixXf::Zero(n_classes, b);
      for (Eigen::Index k = 0; k < b; ++k)
      {
        const int idx = order[static_cast<std::size_t>(start + k)];
        xb.col(k) = x.col(idx);
        yb(labels[static_cast<std::size_t>(idx)], k) = 1.0f;
      }
      const Eigen::MatrixXf p = mlp.Forward(xb, &hidden);
      const Eigen::MatrixXf dz = (p - yb) / static_cast<float>(b);
      const Eigen::MatrixXf g_w2 = dz * hidden.transpose() + decay * mlp.w2_;
      const Eigen::MatrixXf g_b2 = dz.rowwise().sum();
      Eigen::MatrixXf dh = mlp.w2_.transpose() * dz;
      dh.array() *= (hidden.array() > 0.0f).cast<float>();
      const Eigen::MatrixXf g_w1 = dh * xb.transpose() + decay * mlp.w1_;
      const Eigen::MatrixXf g_b1 = dh.rowwise().sum();

      ++step;
      const auto c1 = static_cast<float>(1.0 - std::pow(0.9, step));
      const auto c2 = static_cast<float>(1.0 - std::pow(0.999, step));
      s_w1.Step(mlp.w1_, g_w1, lr, c1, c2);
      s_b1.Step(mlp.b1_, g_b1, lr, c1, c2);
      s_w2.Step(mlp.w2_, g_w2, lr, c1, c2);
      s_b2.Step(mlp.b2_, g_b2, lr, c1, c2);
    }
  }
  return mlp;
}

Eigen::MatrixXf Mlp::Forward(const Eigen::MatrixXf& standardized, Eigen::MatrixXf* hidden) const
{
  Eigen::MatrixXf hid = (w1_ * standardized).colwise() + b1_;
  hid = hid.cwiseMax(0.0f);
  Eigen::MatrixXf z = (w2_ * hid).colwise() + b2_;
  SoftmaxColumns(z);
  if (hidden != nullptr)
  {
    *hidden = std::move(hid);
  }
  return z;
}

Eigen::VectorXd Mlp::Probabilities(const Eigen::VectorXd& input) const
{
  if (input.size() != mean_.size())
  {
    throw DataError("classifier input has " + std::to_string(input.size()) +
                    " features, expected " + std::to_string(mean_.size()));
  }
  const Eigen::MatrixXf x =
      ((input.cast<float>() - mean_).array() * inv_scale_.array()).matrix();
  const Eigen::MatrixXf p = Forward(x, nullptr);
  Eigen::VectorXd probs = p.col(0).cast<double>();
  probs /= probs.sum();
  return probs;
}

namespace
{
void PutMatrix(std::ostream& out, const Eigen::MatrixXf& m)
{
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
}

Eigen::MatrixXf GetMatrix(std::istream& in)
{
  std::int64_t dims[2] = {0, 0};
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims)) || dims[0] < 0 || dims[1] < 0 ||
      dims[0] * dims[1] > (std::int64_t{1} << 32))
  {
    throw DataError("classifier weights truncated or corrupt");
  }
  Eigen::MatrixXf m(dims[0], dims[1]);
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(float))))
  {
    throw DataError("classifier weights truncated");
  }
  return m;
}
}  // namespace

void Mlp::Write(std::ostream& out) const
{
  PutMatrix(out, mean_);
  PutMatrix(out, inv_scale_);
  PutMatrix(out, w1_);
  PutMatrix(out, b1_);
  PutMatrix(out, w2_);
  PutMatrix(out, b2_);
}

Mlp Mlp::Read(std::istream& in)
{
  Mlp mlp;
  mlp.mean_ = GetMatrix(in);
  mlp.inv_scale_ = GetMatrix(in);
  mlp.w1_ = GetMatrix(in);
  mlp.b1_ = GetMatrix(in);
  mlp.w2_ = GetMatrix(in);
  mlp.b2_ = GetMatrix(in);
  const auto d = mlp.mean_.size();
  const auto h = mlp.b1_.size();
  if (mlp.inv_scale_.size() != d || mlp.w1_.rows() != h || mlp.w1_.cols() != d ||
      mlp.w2_.cols() != h || mlp.w2_.rows() != mlp.b2_.size())
  {
    throw DataError("classifier weight shapes are inconsistent");
  }
  return mlp;
}

}  // namespace thor2
