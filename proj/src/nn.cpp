#include "adsorbrl/nn.hpp"

#include <Eigen/SparseCore>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>

#include "adsorbrl/error.hpp"
#include "csv.hpp"

namespace adsorbrl::nn {

bool Gradients::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

DenseNet::DenseNet(std::vector<int> dims) : dims_(std::move(dims)) {
  check_dims();
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i)
    layers_.push_back({Matrix::Zero(dims_[i + 1], dims_[i]), Vector::Zero(dims_[i + 1])});
}

DenseNet::DenseNet(std::vector<int> dims, Rng& rng) : DenseNet(std::move(dims)) {
  for (auto& l : layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    // Column-major fill order keeps initialisation independent of Eigen internals.
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = dist(rng);
  }
}

void DenseNet::check_dims() const {
  if (dims_.size() < 2) throw DomainError("a network needs at least input and output layers");
  for (int d : dims_)
    if (d < 1) throw DomainError("layer dimensions must be positive");
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector DenseNet::forward(const Vector& x) const {
  if (x.size() != input_dim())
    throw DomainError("input has " + std::to_string(x.size()) + " entries, network expects " +
                      std::to_string(input_dim()));
  Vector h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].weight * h + layers_[i].bias;
    if (i + 1 < layers_.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

// Network inputs are mostly multi-hot; a sparse product skips the zeros.
static bool mostly_zero(const Matrix& x) {
  return x.size() > 0 && static_cast<double>((x.array() != 0.0).count()) < 0.25 * static_cast<double>(x.size());
}

Matrix DenseNet::affine(std::size_t layer, const Matrix& h) const {
  const Layer& l = layers_[layer];
  Matrix z;
  if (layer == 0 && mostly_zero(h))
    z = l.weight * h.sparseView();
  else
    z = l.weight * h;
  z.colwise() += l.bias;
  return z;
}

Matrix DenseNet::forward_batch(const Matrix& x) const {
  if (x.rows() != input_dim())
    throw DomainError("batch rows " + std::to_string(x.rows()) + " != input dim " +
                      std::to_string(input_dim()));
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = affine(i, h);
    h = (i + 1 < layers_.size()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return h;
}

DenseNet::Activations DenseNet::forward_record(const Matrix& x) const {
  if (x.rows() != input_dim()) throw DomainError("forward: input dimension mismatch");
  Activations acts;
  acts.inputs.reserve(layers_.size());
  acts.inputs.push_back(x);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = affine(i, acts.inputs.back());
    if (i + 1 < layers_.size())
      acts.inputs.push_back(z.cwiseMax(0.0));
    else
      acts.output = std::move(z);
  }
  return acts;
}

Gradients DenseNet::backward(const Matrix& x, const Matrix& grad_out) const {
  return backward(forward_record(x), grad_out);
}

Gradients DenseNet::backward(const Activations& acts, const Matrix& grad_out) const {
  const auto& inputs = acts.inputs;
  if (inputs.size() != layers_.size() || inputs.front().rows() != input_dim())
    throw DomainError("backward: activations do not match the network");
  if (grad_out.rows() != output_dim() || grad_out.cols() != inputs.front().cols())
    throw DomainError("backward: output gradient shape mismatch");

  Gradients g;
  g.layers.resize(layers_.size());
  Matrix delta = grad_out;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k == 0 && mostly_zero(inputs[0]))
      g.layers[k].weight = delta * inputs[0].sparseView().transpose();
    else
      g.layers[k].weight = delta * inputs[k].transpose();
    g.layers[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    delta = layers_[k].weight.transpose() * delta;
    // ReLU derivative, taken as 0 at exactly 0.
    delta = delta.cwiseProduct((inputs[k].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

bool DenseNet::all_finite() const {
  for (const auto& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (a.dims_ != b.dims_) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i)
    if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias)
      return false;
  return true;
}

void DenseNet::write_checkpoint(std::ostream& out) const {
  out << "layer_index,matrix_row,matrix_col,value\n";
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        out << i << ',' << r << ',' << c << ',' << detail::format_double(l.weight(r, c)) << '\n';
      out << i << ',' << r << ',' << l.weight.cols() << ',' << detail::format_double(l.bias(r))
          << '\n';
    }
  }
}

DenseNet DenseNet::read_checkpoint(std::istream& in) {
  std::map<std::tuple<int, int, int>, double> values;
  std::map<int, std::pair<int, int>> extent;  // layer -> (rows, augmented cols)
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (header) {
      if (f.size() != 4 || f[0] != "layer_index")
        throw DataError("checkpoint header must be layer_index,matrix_row,matrix_col,value", line_no);
      header = false;
      continue;
    }
    if (f.size() != 4) throw DataError("expected 4 fields", line_no);
    const int li = detail::parse_int(f[0], line_no);
    const int r = detail::parse_int(f[1], line_no);
    const int c = detail::parse_int(f[2], line_no);
    if (li < 0 || r < 0 || c < 0) throw DataError("negative index", line_no);
    if (!values.emplace(std::make_tuple(li, r, c), detail::parse_double(f[3], line_no)).second)
      throw DataError("duplicate parameter entry", line_no);
    auto& e = extent[li];
    e.first = std::max(e.first, r + 1);
    e.second = std::max(e.second, c + 1);
  }
  if (extent.empty()) throw DataError("checkpoint contains no parameters");

  std::vector<int> dims;
  int expected_layer = 0;
  for (const auto& [li, e] : extent) {
    if (li != expected_layer++) throw DataError("checkpoint layer indices are not contiguous");
    const int fan_in = e.second - 1;
    if (fan_in < 1) throw DataError("checkpoint layer has no weights");
    if (dims.empty())
      dims.push_back(fan_in);
    else if (dims.back() != fan_in)
      throw DataError("checkpoint layer shapes do not chain");
    dims.push_back(e.first);
  }
  DenseNet net(dims);
  if (values.size() != net.parameter_count()) throw DataError("checkpoint is missing parameters");
  for (const auto& [key, v] : values) {
    const auto [li, r, c] = key;
    auto& l = net.layers_[static_cast<std::size_t>(li)];
    if (c == l.weight.cols())
      l.bias(r) = v;
    else
      l.weight(r, c) = v;
  }
  return net;
}

Adam::Adam(const DenseNet& net, AdamConfig cfg) : cfg_(cfg) {
  if (!(cfg_.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  for (const auto& l : net.layers()) {
    m_.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    v_.push_back(m_.back());
  }
}

void Adam::apply(DenseNet& net, const Gradients& grads) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || m_.size() != layers.size())
    throw DomainError("gradient layout does not match the network");
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (grads.layers[i].weight.rows() != layers[i].weight.rows() ||
        grads.layers[i].weight.cols() != layers[i].weight.cols() ||
        grads.layers[i].bias.size() != layers[i].bias.size())
      throw DomainError("gradient shape does not match layer " + std::to_string(i));
  if (!grads.all_finite()) throw TrainingError("non-finite gradient");

  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const double lr = cfg_.learning_rate;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, m_[i].weight, v_[i].weight, grads.layers[i].weight);
    update(layers[i].bias, m_[i].bias, v_[i].bias, grads.layers[i].bias);
  }
}

}  // namespace adsorbrl::nn
