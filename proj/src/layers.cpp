#include "puda/layers.hpp"

#include <cmath>

namespace puda {

namespace {

void uniform_fill(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void check_cols(const Matrix& input, Eigen::Index expected, const char* layer) {
  if (input.cols() != expected) {
    throw ShapeError(std::string(layer) + " expects " + std::to_string(expected) + " inputs, got " +
                     std::to_string(input.cols()));
  }
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(int in, int out, std::mt19937_64& rng) {
  if (in < 1 || out < 1) throw ConfigError("dense layer dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_.value.resize(out, in);
  bias_.value.resize(1, out);
  uniform_fill(weight_.value, bound, rng);
  uniform_fill(bias_.value, bound, rng);
  weight_.grad = Matrix::Zero(out, in);
  bias_.grad = Matrix::Zero(1, out);
}

Matrix Dense::forward(const Matrix& input) {
  input_ = input;
  return infer(input);
}

Matrix Dense::infer(const Matrix& input) const {
  check_cols(input, weight_.value.cols(), "dense layer");
  Matrix out = input * weight_.value.transpose();
  out.rowwise() += bias_.value.row(0);
  return out;
}

Matrix Dense::backward(const Matrix& grad_output) {
  weight_.grad.noalias() += grad_output.transpose() * input_;
  bias_.grad.row(0) += grad_output.colwise().sum();
  return grad_output * weight_.value;
}

nlohmann::json Dense::describe() const {
  return {{"type", "dense"}, {"in", weight_.value.cols()}, {"out", weight_.value.rows()}};
}

// ----------------------------------------------------------- Activation

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
  }
  return "relu";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  throw ConfigError("unknown activation: " + name);
}

Matrix Activation::forward(const Matrix& input) {
  output_ = infer(input);
  return output_;
}

Matrix Activation::infer(const Matrix& input) const {
  switch (kind_) {
    case ActivationKind::relu: return input.cwiseMax(0.0);
    case ActivationKind::tanh: return input.array().tanh().matrix();
    case ActivationKind::sigmoid: return (1.0 / (1.0 + (-input.array()).exp())).matrix();
  }
  return input;
}

Matrix Activation::backward(const Matrix& grad_output) {
  switch (kind_) {
    case ActivationKind::relu: return (output_.array() > 0.0).select(grad_output.array(), 0.0).matrix();
    case ActivationKind::tanh: return (grad_output.array() * (1.0 - output_.array().square())).matrix();
    case ActivationKind::sigmoid:
      return (grad_output.array() * output_.array() * (1.0 - output_.array())).matrix();
  }
  return grad_output;
}

nlohmann::json Activation::describe() const { return {{"type", "activation"}, {"kind", to_string(kind_)}}; }

// --------------------------------------------------------------- Conv2d

Conv2d::Conv2d(Shape input, int out_channels, int kernel, int stride, int padding, std::mt19937_64& rng)
    : input_(input), out_channels_(out_channels), kernel_(kernel), stride_(stride), padding_(padding) {
  if (out_channels < 1 || kernel < 1 || stride < 1 || padding < 0) throw ConfigError("invalid conv2d geometry");
  const Shape out = output_shape();
  if (out.height < 1 || out.width < 1) throw ConfigError("conv2d kernel larger than padded input");
  const int fan_in = input.channels * kernel * kernel;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  weight_.value.resize(out_channels, fan_in);
  bias_.value.resize(1, out_channels);
  uniform_fill(weight_.value, bound, rng);
  uniform_fill(bias_.value, bound, rng);
  weight_.grad = Matrix::Zero(out_channels, fan_in);
  bias_.grad = Matrix::Zero(1, out_channels);
}

Shape Conv2d::output_shape() const {
  return {out_channels_, (input_.height + 2 * padding_ - kernel_) / stride_ + 1,
          (input_.width + 2 * padding_ - kernel_) / stride_ + 1};
}

Matrix Conv2d::im2col(const double* image) const {
  const Shape out = output_shape();
  const int kk = kernel_ * kernel_;
  Matrix cols = Matrix::Zero(out.height * out.width, input_.channels * kk);
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      double* dst = cols.row(oy * out.width + ox).data();
      for (int ch = 0; ch < input_.channels; ++ch) {
        const double* plane = image + ch * input_.height * input_.width;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= input_.height) continue;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int ix = ox * stride_ - padding_ + kx;
            if (ix < 0 || ix >= input_.width) continue;
            dst[ch * kk + ky * kernel_ + kx] = plane[iy * input_.width + ix];
          }
        }
      }
    }
  }
  return cols;
}

void Conv2d::col2im(const Matrix& cols, double* image) const {
  const Shape out = output_shape();
  const int kk = kernel_ * kernel_;
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      const double* src = cols.row(oy * out.width + ox).data();
      for (int ch = 0; ch < input_.channels; ++ch) {
        double* plane = image + ch * input_.height * input_.width;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= input_.height) continue;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int ix = ox * stride_ - padding_ + kx;
            if (ix < 0 || ix >= input_.width) continue;
            plane[iy * input_.width + ix] += src[ch * kk + ky * kernel_ + kx];
          }
        }
      }
    }
  }
}

Matrix Conv2d::convolve(const Matrix& input, std::vector<Matrix>* cols_cache) const {
  check_cols(input, input_.size(), "conv2d layer");
  const Shape out_shape = output_shape();
  const int positions = out_shape.height * out_shape.width;
  Matrix out(input.rows(), out_shape.size());
  if (cols_cache) cols_cache->resize(static_cast<std::size_t>(input.rows()));
  for (Eigen::Index n = 0; n < input.rows(); ++n) {
    Matrix cols = im2col(input.row(n).data());
    Matrix response = cols * weight_.value.transpose();  // positions x out_channels
    response.rowwise() += bias_.value.row(0);
    Eigen::Map<Matrix>(out.row(n).data(), out_channels_, positions) = response.transpose();
    if (cols_cache) (*cols_cache)[static_cast<std::size_t>(n)] = std::move(cols);
  }
  return out;
}

Matrix Conv2d::forward(const Matrix& input) { return convolve(input, &cols_); }

Matrix Conv2d::infer(const Matrix& input) const { return convolve(input, nullptr); }

Matrix Conv2d::backward(const Matrix& grad_output) {
  const Shape out_shape = output_shape();
  const int positions = out_shape.height * out_shape.width;
  Matrix grad_input = Matrix::Zero(grad_output.rows(), input_.size());
  for (Eigen::Index n = 0; n < grad_output.rows(); ++n) {
    const Matrix g = Eigen::Map<const Matrix>(grad_output.row(n).data(), out_channels_, positions).transpose();
    const Matrix& cols = cols_[static_cast<std::size_t>(n)];
    weight_.grad.noalias() += g.transpose() * cols;
    bias_.grad.row(0) += g.colwise().sum();
    const Matrix grad_cols = g * weight_.value;
    col2im(grad_cols, grad_input.row(n).data());
  }
  return grad_input;
}

nlohmann::json Conv2d::describe() const {
  return {{"type", "conv2d"},
          {"input", {input_.channels, input_.height, input_.width}},
          {"out_channels", out_channels_},
          {"kernel", kernel_},
          {"stride", stride_},
          {"padding", padding_}};
}

// ----------------------------------------------------------- Sequential

Sequential::Sequential(const Sequential& other) : input_dim_(other.input_dim_) {
  layers_.reserve(other.layers_.size());
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Sequential::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

Matrix Sequential::forward(const Matrix& input) {
  Matrix x = input;
  for (auto& layer : layers_) x = layer->forward(x);
  return x;
}

Matrix Sequential::infer(const Matrix& input) const {
  Matrix x = input;
  for (const auto& layer : layers_) x = layer->infer(x);
  return x;
}

Matrix Sequential::backward(const Matrix& grad_output) {
  Matrix g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (auto* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> Sequential::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& layer : layers_) {
    const Layer& l = *layer;
    for (const auto* p : l.parameters()) out.push_back(p);
  }
  return out;
}

void Sequential::zero_grad() {
  for (auto* p : parameters()) p->grad.setZero();
}

nlohmann::json Sequential::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) layers.push_back(layer->describe());
  return {{"input_dim", input_dim_}, {"layers", layers}};
}

std::size_t parameter_count(const std::vector<const Parameter*>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

nlohmann::json parameters_to_json(const std::vector<const Parameter*>& params) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto* p : params) {
    out.push_back({{"rows", p->value.rows()},
                   {"cols", p->value.cols()},
                   {"values", std::vector<double>(p->value.data(), p->value.data() + p->value.size())}});
  }
  return out;
}

void parameters_from_json(const nlohmann::json& j, const std::vector<Parameter*>& params) {
  if (!j.is_array() || j.size() != params.size()) throw ConfigError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto rows = j[i].at("rows").get<Eigen::Index>();
    const auto cols = j[i].at("cols").get<Eigen::Index>();
    if (rows != p.value.rows() || cols != p.value.cols()) throw ConfigError("checkpoint parameter shape mismatch");
    const auto values = j[i].at("values").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != p.value.size()) throw ConfigError("checkpoint value count mismatch");
    std::copy(values.begin(), values.end(), p.value.data());
    p.grad.setZero();
  }
}

}  // namespace puda
