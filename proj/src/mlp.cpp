#include "odt/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

std::string to_string(Activation a) { return a == Activation::tanh_fn ? "tanh" : "relu"; }
std::string to_string(OutputActivation a) { return a == OutputActivation::softmax ? "softmax" : "sigmoid"; }

std::string to_string(Initializer i) {
  switch (i) {
    case Initializer::glorot_uniform:
      return "glorot_uniform";
    case Initializer::uniform:
      return "uniform";
    case Initializer::normal:
      return "normal";
  }
  return "glorot_uniform";
}

std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "adadelta"; }

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh_fn;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown hidden activation: " + s);
}

OutputActivation output_activation_from_string(const std::string& s) {
  if (s == "softmax") return OutputActivation::softmax;
  if (s == "sigmoid") return OutputActivation::sigmoid;
  throw std::invalid_argument("unknown output activation: " + s);
}

Initializer initializer_from_string(const std::string& s) {
  if (s == "glorot_uniform") return Initializer::glorot_uniform;
  if (s == "uniform") return Initializer::uniform;
  if (s == "normal") return Initializer::normal;
  throw std::invalid_argument("unknown initializer: " + s);
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "adadelta") return Optimizer::adadelta;
  throw std::invalid_argument("unknown optimizer: " + s);
}

void validate_mlp_config(const MlpConfig& cfg) {
  if (cfg.hidden_layers < 1) throw std::invalid_argument("mlp: hidden_layers must be >= 1");
  if (cfg.neurons_per_hidden < 1) throw std::invalid_argument("mlp: neurons_per_hidden must be >= 1");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
    throw std::invalid_argument("mlp: dropout_rate must lie in [0, 1)");
  if (cfg.max_norm_constraint < 0.0) throw std::invalid_argument("mlp: max_norm_constraint must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("mlp: batch_size must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("mlp: epochs must be >= 1");
}

double resolved_learning_rate(const MlpConfig& cfg) {
  if (cfg.learning_rate >= 0.0) return cfg.learning_rate;
  return cfg.optimizer == Optimizer::adam ? 1e-3 : 1.0;
}

namespace {

constexpr std::uint64_t kInitStream = 0x6d6c70696e6974ULL;  // "mlpinit"
constexpr std::uint64_t kTrainStream = 0x6d6c70747261ULL;   // "mlptra"

std::vector<int> layer_widths(const MlpConfig& cfg, int input_dim) {
  std::vector<int> w{input_dim};
  for (int l = 0; l < cfg.hidden_layers; ++l) w.push_back(cfg.neurons_per_hidden);
  w.push_back(3);
  return w;
}

double draw_weight(Rng& rng, Initializer init, int fan_in, int fan_out) {
  switch (init) {
    case Initializer::glorot_uniform: {
      double limit = std::sqrt(6.0 / (fan_in + fan_out));
      return rng.uniform(-limit, limit);
    }
    case Initializer::uniform:
      return rng.uniform(-0.05, 0.05);
    case Initializer::normal:
      return rng.normal(0.0, 0.05);
  }
  return 0.0;
}

Matrix apply_hidden(Activation a, const Matrix& Z) {
  if (a == Activation::tanh_fn) return Z.array().tanh();
  return Z.array().max(0.0);
}

Matrix stable_sigmoid(const Matrix& Z) {
  return Z.unaryExpr([](double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
  });
}

Matrix softmax_rows(const Matrix& Z) {
  Matrix P(Z.rows(), Z.cols());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    double m = Z.row(i).maxCoeff();
    Eigen::RowVectorXd e = (Z.row(i).array() - m).exp();
    P.row(i) = e / e.sum();
  }
  return P;
}

struct ForwardCache {
  std::vector<Matrix> Z;      // pre-activations per layer
  std::vector<Matrix> A;      // A[0] = input; A[l+1] = post-activation (post-dropout)
  std::vector<Matrix> H;      // hidden activations before dropout (for tanh')
  std::vector<Matrix> masks;  // dropout keep masks, already scaled by 1/(1-p)
  Matrix scores;              // softmax probabilities or sigmoid scores
};

ForwardCache forward_pass(const MlpConfig& cfg, const MlpParams& p, const Matrix& X, Rng* dropout_rng) {
  const auto layers = static_cast<int>(p.W.size());
  if (X.cols() != p.W.front().rows())
    throw std::invalid_argument("mlp forward: input width " + std::to_string(X.cols()) +
                                " does not match first layer fan-in " + std::to_string(p.W.front().rows()));
  ForwardCache c;
  c.A.push_back(X);
  const bool do_dropout = dropout_rng != nullptr && cfg.dropout_rate > 0.0;
  for (int l = 0; l < layers; ++l) {
    Matrix Z = (c.A.back() * p.W[static_cast<std::size_t>(l)]).rowwise() +
               p.b[static_cast<std::size_t>(l)].transpose();
    if (l + 1 < layers) {
      Matrix H = apply_hidden(cfg.hidden_activation, Z);
      c.H.push_back(H);
      if (do_dropout) {
        const double keep = 1.0 - cfg.dropout_rate;
        Matrix mask(H.rows(), H.cols());
        for (Eigen::Index i = 0; i < mask.rows(); ++i)
          for (Eigen::Index j = 0; j < mask.cols(); ++j)
            mask(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        H = H.cwiseProduct(mask);
        c.masks.push_back(std::move(mask));
      }
      c.A.push_back(std::move(H));
    } else {
      c.scores = cfg.output_activation == OutputActivation::softmax ? softmax_rows(Z) : stable_sigmoid(Z);
      c.A.push_back(c.scores);
    }
    c.Z.push_back(std::move(Z));
  }
  return c;
}

double loss_from_logits(const MlpConfig& cfg, const Matrix& Zout, const Matrix& T) {
  const double B = static_cast<double>(Zout.rows());
  double total = 0.0;
  if (cfg.output_activation == OutputActivation::softmax) {
    for (Eigen::Index i = 0; i < Zout.rows(); ++i) {
      double m = Zout.row(i).maxCoeff();
      double lse = m + std::log((Zout.row(i).array() - m).exp().sum());
      for (Eigen::Index j = 0; j < Zout.cols(); ++j) total -= T(i, j) * (Zout(i, j) - lse);
    }
  } else {
    // softplus(z) - T z is the per-output binary cross-entropy, summed over outputs.
    for (Eigen::Index i = 0; i < Zout.rows(); ++i) {
      for (Eigen::Index j = 0; j < Zout.cols(); ++j) {
        double z = Zout(i, j);
        double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        total += softplus - T(i, j) * z;
      }
    }
  }
  return total / B;
}

std::pair<double, MlpGradients> backward_pass(const MlpConfig& cfg, const MlpParams& p, const ForwardCache& c,
                                              const Matrix& T) {
  const auto layers = static_cast<int>(p.W.size());
  const double B = static_cast<double>(T.rows());
  MlpGradients g;
  g.dW.resize(static_cast<std::size_t>(layers));
  g.db.resize(static_cast<std::size_t>(layers));

  double loss = loss_from_logits(cfg, c.Z.back(), T);
  Matrix dZ = (c.scores - T) / B;  // same closed form for softmax+CE and sigmoid+BCE
  for (int l = layers - 1; l >= 0; --l) {
    auto li = static_cast<std::size_t>(l);
    g.dW[li] = c.A[li].transpose() * dZ;
    g.db[li] = dZ.colwise().sum().transpose();
    if (l == 0) break;
    Matrix dA = dZ * p.W[li].transpose();
    if (!c.masks.empty()) dA = dA.cwiseProduct(c.masks[li - 1]);
    const Matrix& Zh = c.Z[li - 1];
    if (cfg.hidden_activation == Activation::tanh_fn) {
      dZ = dA.cwiseProduct(Matrix(1.0 - c.H[li - 1].array().square()));
    } else {
      dZ = dA.cwiseProduct(Matrix((Zh.array() > 0.0).cast<double>()));
    }
  }
  return {loss, std::move(g)};
}

}  // namespace

MlpParams init_params(const MlpConfig& cfg, int input_dim) {
  validate_mlp_config(cfg);
  if (input_dim < 1) throw std::invalid_argument("mlp: input_dim must be >= 1");
  auto widths = layer_widths(cfg, input_dim);
  Rng rng(derive_seed(cfg.seed, kInitStream, 0));
  MlpParams p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fi = widths[l], fo = widths[l + 1];
    Matrix W(fi, fo);
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = draw_weight(rng, cfg.initializer, fi, fo);
    p.W.push_back(std::move(W));
    p.b.push_back(Vector::Zero(fo));
  }
  return p;
}

Matrix forward_scores(const MlpConfig& cfg, const MlpParams& p, const Matrix& X) {
  return forward_pass(cfg, p, X, nullptr).scores;
}

double batch_loss(const MlpConfig& cfg, const MlpParams& p, const Matrix& X, const Matrix& T) {
  auto c = forward_pass(cfg, p, X, nullptr);
  return loss_from_logits(cfg, c.Z.back(), T);
}

std::pair<double, MlpGradients> loss_and_grad(const MlpConfig& cfg, const MlpParams& p, const Matrix& X,
                                              const Matrix& T) {
  auto c = forward_pass(cfg, p, X, nullptr);
  return backward_pass(cfg, p, c, T);
}

namespace {

struct OptimizerState {
  std::vector<Matrix> mW, vW;
  std::vector<Vector> mb, vb;
  long t = 0;

  explicit OptimizerState(const MlpParams& p) {
    for (const auto& W : p.W) {
      mW.push_back(Matrix::Zero(W.rows(), W.cols()));
      vW.push_back(Matrix::Zero(W.rows(), W.cols()));
    }
    for (const auto& b : p.b) {
      mb.push_back(Vector::Zero(b.size()));
      vb.push_back(Vector::Zero(b.size()));
    }
  }
};

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, long t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  m = b1 * m + (1.0 - b1) * grad;
  v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
  double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

template <typename T>
void adadelta_update(T& param, const T& grad, T& Eg, T& Ed, double lr) {
  constexpr double rho = 0.95, eps = 1e-6;
  Eg = (rho * Eg.array() + (1.0 - rho) * grad.array().square()).matrix();
  T delta = (-(Ed.array() + eps).sqrt() / (Eg.array() + eps).sqrt() * grad.array()).matrix();
  Ed = (rho * Ed.array() + (1.0 - rho) * delta.array().square()).matrix();
  param += lr * delta;
}

void constrain_max_norm(Matrix& W, double c) {
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    double norm = W.col(j).norm();
    if (norm > c) W.col(j) *= c / norm;
  }
}

}  // namespace

FittedMlp train_mlp(const Matrix& X, const std::vector<int>& y, const MlpConfig& cfg) {
  validate_mlp_config(cfg);
  const auto n = X.rows();
  if (n < 1) throw std::invalid_argument("mlp: empty training set");
  if (static_cast<Eigen::Index>(y.size()) != n) throw std::invalid_argument("mlp: label count mismatch");

  FittedMlp out;
  out.cfg = cfg;
  out.params = init_params(cfg, static_cast<int>(X.cols()));

  Matrix T = Matrix::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    int c = y[static_cast<std::size_t>(i)];
    if (c < 0 || c > 2) throw std::invalid_argument("mlp: label out of {0,1,2}");
    T(i, c) = 1.0;
  }

  const double lr = resolved_learning_rate(cfg);
  OptimizerState st(out.params);
  Rng rng(derive_seed(cfg.seed, kTrainStream, 0));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  const auto layers = out.params.W.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const auto bs = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Matrix Xb(bs, X.cols());
      Matrix Tb(bs, 3);
      for (Eigen::Index i = 0; i < bs; ++i) {
        int r = order[static_cast<std::size_t>(start + i)];
        Xb.row(i) = X.row(r);
        Tb.row(i) = T.row(r);
      }
      auto cache = forward_pass(cfg, out.params, Xb, &rng);
      auto [loss, grad] = backward_pass(cfg, out.params, cache, Tb);
      if (!std::isfinite(loss))
        throw std::runtime_error("mlp training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batches));
      epoch_loss += loss;
      ++batches;

      if (cfg.optimizer == Optimizer::adam) {
        ++st.t;
        for (std::size_t l = 0; l < layers; ++l) {
          adam_update(out.params.W[l], grad.dW[l], st.mW[l], st.vW[l], lr, st.t);
          adam_update(out.params.b[l], grad.db[l], st.mb[l], st.vb[l], lr, st.t);
        }
      } else {
        for (std::size_t l = 0; l < layers; ++l) {
          adadelta_update(out.params.W[l], grad.dW[l], st.mW[l], st.vW[l], lr);
          adadelta_update(out.params.b[l], grad.db[l], st.mb[l], st.vb[l], lr);
        }
      }
      if (cfg.max_norm_constraint > 0.0)
        for (auto& W : out.params.W) constrain_max_norm(W, cfg.max_norm_constraint);
    }
    out.loss_trace.push_back(epoch_loss / batches);
  }
  return out;
}

void MlpClassifier::fit(const LabeledDataset& d, std::uint64_t seed) {
  auto violations = training_violations(d);
  if (!violations.empty()) throw std::invalid_argument("mlp fit: invalid dataset: " + violations.front());
  cfg_.seed = seed;
  ScalerState scaler = fit_scaler(d, ScalingKind::minmax);
  Matrix X = apply_scaler(scaler, d.X);
  fitted_ = train_mlp(X, d.y, cfg_);
  fitted_.scaler = std::move(scaler);
  is_fit_ = true;
}

Vector3 MlpClassifier::predict_proba(const RowVector& x) const {
  if (!is_fit_) throw std::logic_error("predict on an unfitted mlp");
  RowVector q = apply_scaler(fitted_.scaler, x);
  Matrix scores = forward_scores(fitted_.cfg, fitted_.params, q);
  Vector3 s = scores.row(0).transpose();
  if (fitted_.cfg.output_activation == OutputActivation::softmax) return s;
  double total = s.sum();
  if (total <= 1e-300) return Vector3::Constant(1.0 / 3.0);  // all scores collapsed to zero
  return s / total;
}

}  // namespace odt
