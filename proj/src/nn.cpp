#include "ltr3o/nn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ltr3o/common.hpp"

namespace ltr3o::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

constexpr double kNormEps = 1e-5;

void im2col(const double* im, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo,
            double* col) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* dst = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) *
                                (static_cast<std::size_t>(Ho) * Wo);
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[oy * Wo + ox] = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                    ? im[(static_cast<std::size_t>(c) * H + iy) * W + ix]
                                    : 0.0;
          }
        }
      }
}

void col2im(const double* col, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo,
            double* im) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* src = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) *
                                      (static_cast<std::size_t>(Ho) * Wo);
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= W) continue;
            im[(static_cast<std::size_t>(c) * H + iy) * W + ix] += src[oy * Wo + ox];
          }
        }
      }
}

}  // namespace

std::size_t ParamBuilder::add(const std::string& name, std::vector<int> shape) {
  for (const auto& p : infos_)
    if (p.name == name) throw ValidationError("duplicate parameter name: " + name);
  std::size_t sz = 1;
  for (int d : shape) sz *= static_cast<std::size_t>(d);
  ParamInfo info{name, std::move(shape), total_, sz};
  infos_.push_back(std::move(info));
  total_ += sz;
  return infos_.back().offset;
}

Conv2d::Conv2d(ParamBuilder& pb, const std::string& name, int in_c, int out_c, int k, int stride,
               int pad)
    : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad) {
  w_off_ = pb.add(name + ".weight", {out_c, in_c, k, k});
  b_off_ = pb.add(name + ".bias", {out_c});
}

Shape Conv2d::out_shape(const Shape& in) const {
  if (in.c != in_c_) throw ValidationError("conv2d: channel mismatch");
  const int ho = (in.h + 2 * pad_ - k_) / stride_ + 1;
  const int wo = (in.w + 2 * pad_ - k_) / stride_ + 1;
  if (ho < 1 || wo < 1) throw ValidationError("conv2d: output would be empty");
  return {out_c_, ho, wo};
}

void Conv2d::forward(const double* theta, const Blob& in, const Blob*, Blob& out, Aux&) const {
  const Shape os = out_shape({in.c, in.h, in.w});
  out = Blob::zeros(in.n, os.c, os.h, os.w);
  const int kk = in_c_ * k_ * k_;
  const int hw = os.h * os.w;
  std::vector<double> colbuf(static_cast<std::size_t>(kk) * hw);
  CMapM W(theta + w_off_, out_c_, kk);
  CMapV b(theta + b_off_, out_c_);
  for (int n = 0; n < in.n; ++n) {
    im2col(in.at(n), in.c, in.h, in.w, k_, stride_, pad_, os.h, os.w, colbuf.data());
    CMapM col(colbuf.data(), kk, hw);
    MapM o(out.at(n), out_c_, hw);
    o.noalias() = W * col;
    o.colwise() += b;
  }
}

void Conv2d::backward(const double* theta, const Blob& in, const Blob*, const Blob& out,
                      const Blob& dout, const Aux&, Blob& din, Blob*, double* grad) const {
  const int kk = in_c_ * k_ * k_;
  const int hw = out.h * out.w;
  std::vector<double> colbuf(static_cast<std::size_t>(kk) * hw);
  std::vector<double> dcolbuf(static_cast<std::size_t>(kk) * hw);
  CMapM W(theta + w_off_, out_c_, kk);
  MapM dW(grad + w_off_, out_c_, kk);
  MapV db(grad + b_off_, out_c_);
  for (int n = 0; n < in.n; ++n) {
    im2col(in.at(n), in.c, in.h, in.w, k_, stride_, pad_, out.h, out.w, colbuf.data());
    CMapM col(colbuf.data(), kk, hw);
    CMapM dO(dout.at(n), out_c_, hw);
    dW.noalias() += dO * col.transpose();
    db.noalias() += dO.rowwise().sum();
    MapM dcol(dcolbuf.data(), kk, hw);
    dcol.noalias() = W.transpose() * dO;
    col2im(dcolbuf.data(), in.c, in.h, in.w, k_, stride_, pad_, out.h, out.w, din.at(n));
  }
}

InstanceNorm::InstanceNorm(ParamBuilder& pb, const std::string& name, int channels)
    : channels_(channels) {
  g_off_ = pb.add(name + ".gain", {channels});
  b_off_ = pb.add(name + ".bias", {channels});
}

void InstanceNorm::forward(const double* theta, const Blob& in, const Blob*, Blob& out,
                           Aux& aux) const {
  if (in.c != channels_) throw ValidationError("instance_norm: channel mismatch");
  out = Blob::zeros(in.n, in.c, in.h, in.w);
  const int m = in.h * in.w;
  aux.d.assign(static_cast<std::size_t>(in.n) * in.c * 2, 0.0);
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const double* x = in.at(n) + static_cast<std::size_t>(c) * m;
      double* y = out.at(n) + static_cast<std::size_t>(c) * m;
      double mu = 0.0;
      for (int i = 0; i < m; ++i) mu += x[i];
      mu /= m;
      double var = 0.0;
      for (int i = 0; i < m; ++i) var += (x[i] - mu) * (x[i] - mu);
      var /= m;
      const double inv = 1.0 / std::sqrt(var + kNormEps);
      const double g = theta[g_off_ + c], b = theta[b_off_ + c];
      for (int i = 0; i < m; ++i) y[i] = g * (x[i] - mu) * inv + b;
      aux.d[(static_cast<std::size_t>(n) * in.c + c) * 2] = mu;
      aux.d[(static_cast<std::size_t>(n) * in.c + c) * 2 + 1] = inv;
    }
}

void InstanceNorm::backward(const double* theta, const Blob& in, const Blob*, const Blob&,
                            const Blob& dout, const Aux& aux, Blob& din, Blob*,
                            double* grad) const {
  const int m = in.h * in.w;
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const double* x = in.at(n) + static_cast<std::size_t>(c) * m;
      const double* dy = dout.at(n) + static_cast<std::size_t>(c) * m;
      double* dx = din.at(n) + static_cast<std::size_t>(c) * m;
      const double mu = aux.d[(static_cast<std::size_t>(n) * in.c + c) * 2];
      const double inv = aux.d[(static_cast<std::size_t>(n) * in.c + c) * 2 + 1];
      const double g = theta[g_off_ + c];
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < m; ++i) {
        const double xh = (x[i] - mu) * inv;
        s1 += dy[i];
        s2 += dy[i] * xh;
      }
      grad[b_off_ + c] += s1;
      grad[g_off_ + c] += s2;
      const double gi = g * inv;
      for (int i = 0; i < m; ++i) {
        const double xh = (x[i] - mu) * inv;
        dx[i] += gi * (dy[i] - s1 / m - xh * s2 / m);
      }
    }
}

void ReLU::forward(const double*, const Blob& in, const Blob*, Blob& out, Aux&) const {
  out = in;
  for (double& v : out.v) v = std::max(v, 0.0);
}

void ReLU::backward(const double*, const Blob& in, const Blob*, const Blob&, const Blob& dout,
                    const Aux&, Blob& din, Blob*, double*) const {
  for (std::size_t i = 0; i < in.size(); ++i) din.v[i] += in.v[i] > 0.0 ? dout.v[i] : 0.0;
}

Shape AvgPool2::out_shape(const Shape& in) const {
  if (in.h % 2 != 0 || in.w % 2 != 0) throw ValidationError("avgpool2: dims must be even");
  return {in.c, in.h / 2, in.w / 2};
}

void AvgPool2::forward(const double*, const Blob& in, const Blob*, Blob& out, Aux&) const {
  const Shape os = out_shape({in.c, in.h, in.w});
  out = Blob::zeros(in.n, os.c, os.h, os.w);
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const double* x = in.at(n) + static_cast<std::size_t>(c) * in.h * in.w;
      double* y = out.at(n) + static_cast<std::size_t>(c) * os.h * os.w;
      for (int oy = 0; oy < os.h; ++oy)
        for (int ox = 0; ox < os.w; ++ox)
          y[oy * os.w + ox] = 0.25 * (x[2 * oy * in.w + 2 * ox] + x[2 * oy * in.w + 2 * ox + 1] +
                                      x[(2 * oy + 1) * in.w + 2 * ox] +
                                      x[(2 * oy + 1) * in.w + 2 * ox + 1]);
    }
}

void AvgPool2::backward(const double*, const Blob& in, const Blob*, const Blob& out,
                        const Blob& dout, const Aux&, Blob& din, Blob*, double*) const {
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      double* dx = din.at(n) + static_cast<std::size_t>(c) * in.h * in.w;
      const double* dy = dout.at(n) + static_cast<std::size_t>(c) * out.h * out.w;
      for (int oy = 0; oy < out.h; ++oy)
        for (int ox = 0; ox < out.w; ++ox) {
          const double d = 0.25 * dy[oy * out.w + ox];
          dx[2 * oy * in.w + 2 * ox] += d;
          dx[2 * oy * in.w + 2 * ox + 1] += d;
          dx[(2 * oy + 1) * in.w + 2 * ox] += d;
          dx[(2 * oy + 1) * in.w + 2 * ox + 1] += d;
        }
    }
}

Shape MaxPool::out_shape(const Shape& in) const {
  const int ho = (in.h + 2 * pad_ - k_) / stride_ + 1;
  const int wo = (in.w + 2 * pad_ - k_) / stride_ + 1;
  if (ho < 1 || wo < 1) throw ValidationError("maxpool: output would be empty");
  return {in.c, ho, wo};
}

void MaxPool::forward(const double*, const Blob& in, const Blob*, Blob& out, Aux& aux) const {
  const Shape os = out_shape({in.c, in.h, in.w});
  out = Blob::zeros(in.n, os.c, os.h, os.w);
  aux.i.assign(out.size(), 0);
  std::size_t oi = 0;
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const double* x = in.at(n) + static_cast<std::size_t>(c) * in.h * in.w;
      for (int oy = 0; oy < os.h; ++oy)
        for (int ox = 0; ox < os.w; ++ox, ++oi) {
          double best = -1e300;
          int arg = -1;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= in.w) continue;
              if (x[iy * in.w + ix] > best) {
                best = x[iy * in.w + ix];
                arg = iy * in.w + ix;
              }
            }
          }
          out.v[oi] = best;
          aux.i[oi] = arg;
        }
    }
}

void MaxPool::backward(const double*, const Blob& in, const Blob*, const Blob& out,
                       const Blob& dout, const Aux& aux, Blob& din, Blob*, double*) const {
  std::size_t oi = 0;
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      double* dx = din.at(n) + static_cast<std::size_t>(c) * in.h * in.w;
      for (int o = 0; o < out.h * out.w; ++o, ++oi) dx[aux.i[oi]] += dout.v[oi];
    }
}

void GlobalAvgPool::forward(const double*, const Blob& in, const Blob*, Blob& out, Aux&) const {
  out = Blob::zeros(in.n, in.c, 1, 1);
  const int m = in.h * in.w;
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const double* x = in.at(n) + static_cast<std::size_t>(c) * m;
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += x[i];
      out.at(n)[c] = s / m;
    }
}

void GlobalAvgPool::backward(const double*, const Blob& in, const Blob*, const Blob&,
                             const Blob& dout, const Aux&, Blob& din, Blob*, double*) const {
  const int m = in.h * in.w;
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const double d = dout.at(n)[c] / m;
      double* dx = din.at(n) + static_cast<std::size_t>(c) * m;
      for (int i = 0; i < m; ++i) dx[i] += d;
    }
}

Linear::Linear(ParamBuilder& pb, const std::string& name, int in_d, int out_d)
    : in_d_(in_d), out_d_(out_d) {
  w_off_ = pb.add(name + ".weight", {out_d, in_d});
  b_off_ = pb.add(name + ".bias", {out_d});
}

void Linear::forward(const double* theta, const Blob& in, const Blob*, Blob& out, Aux&) const {
  if (in.c * in.h * in.w != in_d_) throw ValidationError("linear: input size mismatch");
  out = Blob::zeros(in.n, out_d_, 1, 1);
  CMapM X(in.v.data(), in.n, in_d_);
  CMapM W(theta + w_off_, out_d_, in_d_);
  CMapV b(theta + b_off_, out_d_);
  MapM O(out.v.data(), in.n, out_d_);
  O.noalias() = X * W.transpose();
  O.rowwise() += b.transpose();
}

void Linear::backward(const double* theta, const Blob& in, const Blob*, const Blob&,
                      const Blob& dout, const Aux&, Blob& din, Blob*, double* grad) const {
  CMapM X(in.v.data(), in.n, in_d_);
  CMapM dO(dout.v.data(), in.n, out_d_);
  CMapM W(theta + w_off_, out_d_, in_d_);
  MapM dW(grad + w_off_, out_d_, in_d_);
  MapV db(grad + b_off_, out_d_);
  MapM dX(din.v.data(), in.n, in_d_);
  dW.noalias() += dO.transpose() * X;
  db.noalias() += dO.colwise().sum().transpose();
  dX.noalias() += dO * W;
}

void Add::forward(const double*, const Blob& in, const Blob* in2, Blob& out, Aux&) const {
  if (!in2 || in2->size() != in.size()) throw ValidationError("add: operand shapes differ");
  out = in;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += in2->v[i];
}

void Add::backward(const double*, const Blob&, const Blob*, const Blob&, const Blob& dout,
                   const Aux&, Blob& din, Blob* din2, double*) const {
  for (std::size_t i = 0; i < dout.size(); ++i) din.v[i] += dout.v[i];
  for (std::size_t i = 0; i < dout.size(); ++i) din2->v[i] += dout.v[i];
}

int GraphNet::add(std::unique_ptr<Layer> layer, int input_a, int input_b) {
  const int next_blob = n_nodes() + 1;
  if (input_a < 0 || input_a >= next_blob || input_b >= next_blob)
    throw ValidationError("graph: node input out of range");
  layers_.push_back(std::move(layer));
  in_a_.push_back(input_a);
  in_b_.push_back(input_b);
  return next_blob;
}

Shape GraphNet::infer_shape(const Shape& input) const {
  std::vector<Shape> shapes(static_cast<std::size_t>(n_nodes()) + 1);
  shapes[0] = input;
  for (int i = 0; i < n_nodes(); ++i)
    shapes[static_cast<std::size_t>(i) + 1] =
        layers_[static_cast<std::size_t>(i)]->out_shape(shapes[static_cast<std::size_t>(in_a_[i])]);
  return shapes.back();
}

const Blob& GraphNet::forward(const double* theta, Blob input, Tape& tape) const {
  tape.blobs.assign(static_cast<std::size_t>(n_nodes()) + 1, Blob{});
  tape.aux.assign(static_cast<std::size_t>(n_nodes()), Aux{});
  tape.blobs[0] = std::move(input);
  for (int i = 0; i < n_nodes(); ++i) {
    const Blob* b2 = in_b_[i] >= 0 ? &tape.blobs[static_cast<std::size_t>(in_b_[i])] : nullptr;
    layers_[static_cast<std::size_t>(i)]->forward(theta,
                                                  tape.blobs[static_cast<std::size_t>(in_a_[i])],
                                                  b2, tape.blobs[static_cast<std::size_t>(i) + 1],
                                                  tape.aux[static_cast<std::size_t>(i)]);
  }
  return tape.blobs.back();
}

void GraphNet::backward(const double* theta, const Tape& tape, const Blob& dout, double* grad,
                        Blob* dinput) const {
  std::vector<Blob> dblobs(static_cast<std::size_t>(n_nodes()) + 1);
  dblobs.back() = dout;
  for (int i = n_nodes() - 1; i >= 0; --i) {
    Blob& dy = dblobs[static_cast<std::size_t>(i) + 1];
    if (dy.size() == 0) continue;
    const Blob& a = tape.blobs[static_cast<std::size_t>(in_a_[i])];
    Blob& da = dblobs[static_cast<std::size_t>(in_a_[i])];
    if (da.size() == 0) da = Blob::zeros(a.n, a.c, a.h, a.w);
    Blob* db = nullptr;
    const Blob* b = nullptr;
    if (in_b_[i] >= 0) {
      b = &tape.blobs[static_cast<std::size_t>(in_b_[i])];
      Blob& dbr = dblobs[static_cast<std::size_t>(in_b_[i])];
      if (dbr.size() == 0) dbr = Blob::zeros(b->n, b->c, b->h, b->w);
      db = &dbr;
    }
    layers_[static_cast<std::size_t>(i)]->backward(
        theta, a, b, tape.blobs[static_cast<std::size_t>(i) + 1], dy,
        tape.aux[static_cast<std::size_t>(i)], da, db, grad);
    dy = Blob{};  // free as we go
  }
  if (dinput) *dinput = std::move(dblobs[0]);
}

}  // namespace ltr3o::nn
