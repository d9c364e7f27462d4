#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "adsorbrl/rng.hpp"

namespace adsorbrl::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Parameter gradients, laid out like the network's layers.
struct Gradients {
  std::vector<Layer> layers;

  bool all_finite() const;
};

/// Fully connected net: ReLU on hidden layers, identity on the output.
/// A plain value type; copying it is the target-network snapshot.
class DenseNet {
 public:
  /// Zero-initialised parameters.
  explicit DenseNet(std::vector<int> dims);
  /// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
  DenseNet(std::vector<int> dims, Rng& rng);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t parameter_count() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Throws DomainError on an input of the wrong size.
  Vector forward(const Vector& x) const;
  /// Column-per-sample batch forward.
  Matrix forward_batch(const Matrix& x) const;

  /// Layer inputs recorded during a batch forward, for backward().
  struct Activations {
    std::vector<Matrix> inputs;
    Matrix output;
  };
  Activations forward_record(const Matrix& x) const;

  /// Gradients of a scalar loss L given dL/d(output); `grad_out` has one
  /// column per sample in `x` and contributions are summed over the batch.
  Gradients backward(const Matrix& x, const Matrix& grad_out) const;
  Gradients backward(const Activations& acts, const Matrix& grad_out) const;

  bool all_finite() const;

  /// CSV rows `layer_index,matrix_row,matrix_col,value`. The bias of output
  /// unit r is stored at matrix_col == fan_in, i.e. each layer is written as
  /// the augmented matrix [W | b]. Values use shortest round-trip form.
  void write_checkpoint(std::ostream& out) const;
  /// Throws DataError on malformed or incomplete input.
  static DenseNet read_checkpoint(std::istream& in);

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  void check_dims() const;
  Matrix affine(std::size_t layer, const Matrix& h) const;

  std::vector<int> dims_;
  std::vector<Layer> layers_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state for one network.
class Adam {
 public:
  Adam(const DenseNet& net, AdamConfig cfg = {});

  /// One bias-corrected update. Throws TrainingError if any gradient is
  /// non-finite; the network is left untouched in that case.
  void apply(DenseNet& net, const Gradients& grads);

  long step() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Layer> m_;
  std::vector<Layer> v_;
  long step_ = 0;
};

}  // namespace adsorbrl::nn
