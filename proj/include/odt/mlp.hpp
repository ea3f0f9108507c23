#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "odt/core.hpp"

namespace odt {

enum class Activation { tanh_fn, relu };
enum class OutputActivation { softmax, sigmoid };
enum class Initializer { glorot_uniform, uniform, normal };
enum class Optimizer { adam, adadelta };

std::string to_string(Activation a);
std::string to_string(OutputActivation a);
std::string to_string(Initializer i);
std::string to_string(Optimizer o);
Activation activation_from_string(const std::string& s);
OutputActivation output_activation_from_string(const std::string& s);
Initializer initializer_from_string(const std::string& s);
Optimizer optimizer_from_string(const std::string& s);

struct MlpConfig {
  int hidden_layers = 1;
  int neurons_per_hidden = 8;
  Activation hidden_activation = Activation::relu;
  OutputActivation output_activation = OutputActivation::softmax;
  Initializer initializer = Initializer::glorot_uniform;
  double dropout_rate = 0.0;       // inverted dropout on hidden activations
  double max_norm_constraint = 0.0;  // L2 cap per incoming-weight column; 0 = off
  int batch_size = 10;
  int epochs = 100;
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = -1.0;  // < 0 → optimizer default (adam 1e-3, adadelta 1.0)
  std::uint64_t seed = 0;
};

void validate_mlp_config(const MlpConfig& cfg);
double resolved_learning_rate(const MlpConfig& cfg);

// Layer l maps width in_l to out_l as act(A W + b); W is (in_l × out_l).
struct MlpParams {
  std::vector<Matrix> W;
  std::vector<Vector> b;
};

struct MlpGradients {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
};

MlpParams init_params(const MlpConfig& cfg, int input_dim);

/// Output scores per row: softmax probabilities, or per-class sigmoid scores
/// (not yet normalized). Deterministic; dropout is not applied here.
Matrix forward_scores(const MlpConfig& cfg, const MlpParams& p, const Matrix& X);

/// Batch-mean loss: categorical cross-entropy (softmax) or per-output binary
/// cross-entropy summed over the 3 outputs (sigmoid). T is one-hot (B × 3).
double batch_loss(const MlpConfig& cfg, const MlpParams& p, const Matrix& X, const Matrix& T);

/// Loss and exact analytic gradients of the batch-mean loss (no dropout).
std::pair<double, MlpGradients> loss_and_grad(const MlpConfig& cfg, const MlpParams& p, const Matrix& X,
                                              const Matrix& T);

struct FittedMlp {
  MlpConfig cfg;
  MlpParams params;
  ScalerState scaler;
  std::vector<double> loss_trace;  // mean minibatch loss per epoch
};

/// Trains on the given matrix (assumed already scaled when scaling applies).
/// Throws std::runtime_error naming epoch/batch when the loss turns non-finite.
FittedMlp train_mlp(const Matrix& X, const std::vector<int>& y, const MlpConfig& cfg);

class MlpClassifier : public Classifier {
 public:
  explicit MlpClassifier(MlpConfig cfg = {}) : cfg_(std::move(cfg)) {}

  void fit(const LabeledDataset& d, std::uint64_t seed) override;
  Vector3 predict_proba(const RowVector& x) const override;

  const FittedMlp& fitted() const { return fitted_; }
  const MlpConfig& config() const { return cfg_; }

  static MlpClassifier restore(FittedMlp f) {
    MlpClassifier c(f.cfg);
    c.fitted_ = std::move(f);
    c.is_fit_ = true;
    return c;
  }

 private:
  MlpConfig cfg_;
  FittedMlp fitted_;
  bool is_fit_ = false;
};

}  // namespace odt
