#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ltr3o::nn {

// NCHW activation tensor, double precision.
struct Blob {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  static Blob zeros(int n, int c, int h, int w) {
    Blob b;
    b.n = n;
    b.c = c;
    b.h = h;
    b.w = w;
    b.v.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
    return b;
  }
  std::size_t size() const { return v.size(); }
  double* at(int ni) { return v.data() + static_cast<std::size_t>(ni) * c * h * w; }
  const double* at(int ni) const { return v.data() + static_cast<std::size_t>(ni) * c * h * w; }
};

struct Shape {
  int c = 0, h = 0, w = 0;
};

// All trainable parameters live in one flat vector owned by the model;
// layers hold offsets into it. Gradients use an equally sized flat vector,
// which keeps per-sample gradient buffers and the optimizer trivial.
struct ParamInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class ParamBuilder {
 public:
  std::size_t add(const std::string& name, std::vector<int> shape);
  const std::vector<ParamInfo>& infos() const { return infos_; }
  std::size_t total() const { return total_; }

 private:
  std::vector<ParamInfo> infos_;
  std::size_t total_ = 0;
};

// Per-call scratch a layer saves in forward for use in backward. Layers
// keep no mutable state of their own, so one network can run many samples
// concurrently, each with its own tape.
struct Aux {
  std::vector<double> d;
  std::vector<int> i;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Shape out_shape(const Shape& in) const = 0;
  // in2 is non-null only for binary layers (Add).
  virtual void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
                       Aux& aux) const = 0;
  // din/din2 are freshly zeroed by the caller; grad accumulates.
  virtual void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                        const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                        double* grad) const = 0;
};

class Conv2d : public Layer {
 public:
  Conv2d(ParamBuilder& pb, const std::string& name, int in_c, int out_c, int k, int stride,
         int pad);
  std::string kind() const override { return "conv2d"; }
  Shape out_shape(const Shape& in) const override;
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;
  int in_c() const { return in_c_; }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  std::size_t w_off_, b_off_;
};

class InstanceNorm : public Layer {
 public:
  InstanceNorm(ParamBuilder& pb, const std::string& name, int channels);
  std::string kind() const override { return "instance_norm"; }
  Shape out_shape(const Shape& in) const override { return in; }
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;

 private:
  int channels_;
  std::size_t g_off_, b_off_;
};

class ReLU : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Shape out_shape(const Shape& in) const override { return in; }
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;
};

class AvgPool2 : public Layer {
 public:
  std::string kind() const override { return "avgpool2"; }
  Shape out_shape(const Shape& in) const override;
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;
};

class MaxPool : public Layer {
 public:
  MaxPool(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}
  std::string kind() const override { return "maxpool"; }
  Shape out_shape(const Shape& in) const override;
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;

 private:
  int k_, stride_, pad_;
};

class GlobalAvgPool : public Layer {
 public:
  std::string kind() const override { return "global_avgpool"; }
  Shape out_shape(const Shape& in) const override { return {in.c, 1, 1}; }
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;
};

class Linear : public Layer {
 public:
  Linear(ParamBuilder& pb, const std::string& name, int in_d, int out_d);
  std::string kind() const override { return "linear"; }
  Shape out_shape(const Shape&) const override { return {out_d_, 1, 1}; }
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;

 private:
  int in_d_, out_d_;
  std::size_t w_off_, b_off_;
};

class Add : public Layer {
 public:
  std::string kind() const override { return "add"; }
  Shape out_shape(const Shape& in) const override { return in; }
  void forward(const double* theta, const Blob& in, const Blob* in2, Blob& out,
               Aux& aux) const override;
  void backward(const double* theta, const Blob& in, const Blob* in2, const Blob& out,
                const Blob& dout, const Aux& aux, Blob& din, Blob* din2,
                double* grad) const override;
};

// Small DAG: node i reads blobs in_a[i] (and in_b[i] when >= 0) and writes
// blob i + 1; blob 0 is the network input. Skip connections are plain blob
// reuse, so residual nets need no nesting.
class GraphNet {
 public:
  int add(std::unique_ptr<Layer> layer, int input_a, int input_b = -1);
  int n_nodes() const { return static_cast<int>(layers_.size()); }
  // blob index produced by the last node
  int output_blob() const { return n_nodes(); }

  Shape infer_shape(const Shape& input) const;

  struct Tape {
    std::vector<Blob> blobs;
    std::vector<Aux> aux;
  };

  // Returns the output blob; keeps every intermediate in the tape.
  const Blob& forward(const double* theta, Blob input, Tape& tape) const;
  // dout matches the output blob; gradients accumulate into grad.
  void backward(const double* theta, const Tape& tape, const Blob& dout, double* grad,
                Blob* dinput = nullptr) const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<int> in_a_, in_b_;
};

}  // namespace ltr3o::nn
