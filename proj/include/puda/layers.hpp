#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "puda/common.hpp"
#include "puda/datasets.hpp"

namespace puda {

struct Parameter {
  Matrix value;
  Matrix grad;
};

// A differentiable map over row batches. `forward` caches what `backward`
// needs; `infer` is the const, cache-free evaluation. `backward` adds into
// parameter gradients and returns the gradient wrt the input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Matrix forward(const Matrix& input) = 0;
  virtual Matrix infer(const Matrix& input) const = 0;
  virtual Matrix backward(const Matrix& grad_output) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<const Parameter*> parameters() const { return {}; }
  virtual int output_dim() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::json describe() const = 0;
};

class Dense final : public Layer {
 public:
  Dense(int in, int out, std::mt19937_64& rng);

  Matrix forward(const Matrix& input) override;
  Matrix infer(const Matrix& input) const override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  std::vector<const Parameter*> parameters() const override { return {&weight_, &bias_}; }
  int output_dim() const override { return static_cast<int>(weight_.value.rows()); }
  std::unique_ptr<Layer> clone() const override {
    auto copy = std::make_unique<Dense>(*this);
    copy->input_ = Matrix();
    return copy;
  }
  nlohmann::json describe() const override;

 private:
  Parameter weight_;  // out x in
  Parameter bias_;    // 1 x out
  Matrix input_;
};

enum class ActivationKind { relu, tanh, sigmoid };

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

class Activation final : public Layer {
 public:
  Activation(ActivationKind kind, int dim) : kind_(kind), dim_(dim) {}

  Matrix forward(const Matrix& input) override;
  Matrix infer(const Matrix& input) const override;
  Matrix backward(const Matrix& grad_output) override;
  int output_dim() const override { return dim_; }
  std::unique_ptr<Layer> clone() const override {
    auto copy = std::make_unique<Activation>(*this);
    copy->output_ = Matrix();
    return copy;
  }
  nlohmann::json describe() const override;

 private:
  ActivationKind kind_;
  int dim_;
  Matrix output_;
};

// Square-kernel 2-D convolution over channel-major rows, lowered to a
// matrix product per example (im2col).
class Conv2d final : public Layer {
 public:
  Conv2d(Shape input, int out_channels, int kernel, int stride, int padding, std::mt19937_64& rng);

  Matrix forward(const Matrix& input) override;
  Matrix infer(const Matrix& input) const override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  std::vector<const Parameter*> parameters() const override { return {&weight_, &bias_}; }
  int output_dim() const override { return output_shape().size(); }
  Shape output_shape() const;
  std::unique_ptr<Layer> clone() const override {
    auto copy = std::make_unique<Conv2d>(*this);
    copy->cols_.clear();
    return copy;
  }
  nlohmann::json describe() const override;

 private:
  Matrix im2col(const double* image) const;
  void col2im(const Matrix& cols, double* image) const;
  Matrix convolve(const Matrix& input, std::vector<Matrix>* cols_cache) const;

  Shape input_;
  int out_channels_;
  int kernel_;
  int stride_;
  int padding_;
  Parameter weight_;  // out_channels x (in_channels * k * k)
  Parameter bias_;    // 1 x out_channels
  std::vector<Matrix> cols_;
};

// Ordered stack of layers with value semantics. Copies carry parameters and
// gradients but not forward caches.
class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(int input_dim) : input_dim_(input_dim) {}
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer);

  Matrix forward(const Matrix& input);
  Matrix infer(const Matrix& input) const;
  Matrix backward(const Matrix& grad_output);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layers_.empty() ? input_dim_ : layers_.back()->output_dim(); }
  std::size_t size() const { return layers_.size(); }
  nlohmann::json describe() const;

 private:
  int input_dim_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
};

std::size_t parameter_count(const std::vector<const Parameter*>& params);

// Flattened parameter values, in `parameters()` order.
nlohmann::json parameters_to_json(const std::vector<const Parameter*>& params);
void parameters_from_json(const nlohmann::json& j, const std::vector<Parameter*>& params);

}  // namespace puda
