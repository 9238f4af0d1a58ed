#include "layers.hpp"

#include <algorithm>
#include <cstring>

#include <Eigen/Core>

namespace platewaste::layers {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;

// col[(ci*3 + ky)*3 + kx][y*W + x] = in[ci][y + ky - 1][x + kx - 1], zero outside.
void im2col3(const double* in, int channels, int h, int w, double* col) {
  const std::size_t hw = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  for (int ci = 0; ci < channels; ++ci) {
    const double* src = in + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dx = kx - 1;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          double* dst = row + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          const double* s = src + static_cast<std::size_t>(sy) * w;
          std::fill(dst, dst + x0, 0.0);
          std::memcpy(dst + x0, s + x0 + dx, sizeof(double) * static_cast<std::size_t>(x1 - x0));
          std::fill(dst + x1, dst + w, 0.0);
        }
      }
    }
  }
}

void col2im3(const double* col, int channels, int h, int w, double* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  std::fill(out, out + hw * static_cast<std::size_t>(channels), 0.0);
  for (int ci = 0; ci < channels; ++ci) {
    double* dst = out + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* row = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dx = kx - 1;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const double* s = row + static_cast<std::size_t>(y) * w;
          double* d = dst + static_cast<std::size_t>(sy) * w;
          for (int x = x0; x < x1; ++x) d[x + dx] += s[x];
        }
      }
    }
  }
}

}  // namespace

void conv_forward(const Tensor4& in, const double* weight, const double* bias, int out_channels,
                  int kernel, Tensor4& out) {
  const int cin = in.c();
  const int h = in.h();
  const int w = in.w();
  const auto hw = static_cast<Eigen::Index>(in.plane());
  const int taps = kernel * kernel;
  out = Tensor4(in.n(), out_channels, h, w);
  CMapRow wm(weight, out_channels, static_cast<Eigen::Index>(cin) * taps);
  std::vector<double> col;
  if (kernel == 3) col.resize(static_cast<std::size_t>(cin) * 9 * static_cast<std::size_t>(hw));
  for (int b = 0; b < in.n(); ++b) {
    const double* src = in.sample(b);
    if (kernel == 3) {
      im2col3(src, cin, h, w, col.data());
      src = col.data();
    }
    CMapRow cm(src, static_cast<Eigen::Index>(cin) * taps, hw);
    MapRow om(out.sample(b), out_channels, hw);
    om.noalias() = wm * cm;
    for (int co = 0; co < out_channels; ++co) om.row(co).array() += bias[co];
  }
}

void conv_backward(const Tensor4& in, const double* weight, const Tensor4& grad_out, int kernel,
                   double* grad_weight, double* grad_bias, Tensor4* grad_in) {
  const int cin = in.c();
  const int cout = grad_out.c();
  const int h = in.h();
  const int w = in.w();
  const auto hw = static_cast<Eigen::Index>(in.plane());
  const int taps = kernel * kernel;
  const auto k = static_cast<Eigen::Index>(cin) * taps;
  CMapRow wm(weight, cout, k);
  MapRow gw(grad_weight, cout, k);
  std::vector<double> col;
  std::vector<double> dcol;
  if (kernel == 3) {
    col.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(hw));
    if (grad_in) dcol.resize(col.size());
  }
  if (grad_in) *grad_in = Tensor4(in.shape());
  for (int b = 0; b < in.n(); ++b) {
    const double* src = in.sample(b);
    if (kernel == 3) {
      im2col3(src, cin, h, w, col.data());
      src = col.data();
    }
    CMapRow cm(src, k, hw);
    CMapRow gm(grad_out.sample(b), cout, hw);
    gw.noalias() += gm * cm.transpose();
    for (int co = 0; co < cout; ++co) grad_bias[co] += gm.row(co).sum();
    if (grad_in) {
      if (kernel == 3) {
        MapRow dc(dcol.data(), k, hw);
        dc.noalias() = wm.transpose() * gm;
        col2im3(dcol.data(), cin, h, w, grad_in->sample(b));
      } else {
        MapRow di(grad_in->sample(b), k, hw);
        di.noalias() = wm.transpose() * gm;
      }
    }
  }
}

void up_forward(const Tensor4& in, const double* weight, const double* bias, int out_channels,
                Tensor4& out) {
  const int cin = in.c();
  const int h = in.h();
  const int w = in.w();
  const auto hw = static_cast<Eigen::Index>(in.plane());
  out = Tensor4(in.n(), out_channels, 2 * h, 2 * w);
  CMapRow wm(weight, cin, static_cast<Eigen::Index>(out_channels) * 4);
  RowMat tmp(static_cast<Eigen::Index>(out_channels) * 4, hw);
  for (int b = 0; b < in.n(); ++b) {
    CMapRow im(in.sample(b), cin, hw);
    tmp.noalias() = wm.transpose() * im;
    for (int co = 0; co < out_channels; ++co) {
      double* dst = out.channel(b, co);
      const int ow = 2 * w;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double* row = tmp.row(co * 4 + dy * 2 + dx).data();
          for (int y = 0; y < h; ++y) {
            double* d = dst + static_cast<std::size_t>(2 * y + dy) * ow + dx;
            const double* s = row + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) d[2 * x] = s[x] + bias[co];
          }
        }
      }
    }
  }
}

void up_backward(const Tensor4& in, const double* weight, const Tensor4& grad_out,
                 double* grad_weight, double* grad_bias, Tensor4& grad_in) {
  const int cin = in.c();
  const int cout = grad_out.c();
  const int h = in.h();
  const int w = in.w();
  const auto hw = static_cast<Eigen::Index>(in.plane());
  CMapRow wm(weight, cin, static_cast<Eigen::Index>(cout) * 4);
  MapRow gw(grad_weight, cin, static_cast<Eigen::Index>(cout) * 4);
  RowMat tmp(static_cast<Eigen::Index>(cout) * 4, hw);
  grad_in = Tensor4(in.shape());
  for (int b = 0; b < in.n(); ++b) {
    for (int co = 0; co < cout; ++co) {
      const double* src = grad_out.channel(b, co);
      const int ow = 2 * w;
      double bsum = 0.0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          double* row = tmp.row(co * 4 + dy * 2 + dx).data();
          for (int y = 0; y < h; ++y) {
            const double* s = src + static_cast<std::size_t>(2 * y + dy) * ow + dx;
            double* d = row + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
              d[x] = s[2 * x];
              bsum += s[2 * x];
            }
          }
        }
      }
      grad_bias[co] += bsum;
    }
    CMapRow im(in.sample(b), cin, hw);
    gw.noalias() += im * tmp.transpose();
    MapRow gi(grad_in.sample(b), cin, hw);
    gi.noalias() = wm * tmp;
  }
}

void maxpool_forward(const Tensor4& in, Tensor4& out, std::vector<std::uint8_t>& argmax) {
  const int oh = in.h() / 2;
  const int ow = in.w() / 2;
  out = Tensor4(in.n(), in.c(), oh, ow);
  argmax.assign(out.size(), 0);
  std::size_t k = 0;
  for (int b = 0; b < in.n(); ++b) {
    for (int c = 0; c < in.c(); ++c) {
      const double* src = in.channel(b, c);
      double* dst = out.channel(b, c);
      for (int y = 0; y < oh; ++y) {
        const double* r0 = src + static_cast<std::size_t>(2 * y) * in.w();
        const double* r1 = r0 + in.w();
        for (int x = 0; x < ow; ++x, ++k) {
          const double v[4] = {r0[2 * x], r0[2 * x + 1], r1[2 * x], r1[2 * x + 1]};
          std::uint8_t best = 0;
          for (std::uint8_t i = 1; i < 4; ++i) {
            if (v[i] > v[best]) best = i;
          }
          dst[static_cast<std::size_t>(y) * ow + x] = v[best];
          argmax[k] = best;
        }
      }
    }
  }
}

void maxpool_backward(const Tensor4& grad_out, const std::vector<std::uint8_t>& argmax,
                      Tensor4& grad_in) {
  const int oh = grad_out.h();
  const int ow = grad_out.w();
  grad_in = Tensor4(grad_out.n(), grad_out.c(), 2 * oh, 2 * ow);
  std::size_t k = 0;
  for (int b = 0; b < grad_out.n(); ++b) {
    for (int c = 0; c < grad_out.c(); ++c) {
      const double* src = grad_out.channel(b, c);
      double* dst = grad_in.channel(b, c);
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++k) {
          const int a = argmax[k];
          dst[static_cast<std::size_t>(2 * y + a / 2) * (2 * ow) + 2 * x + a % 2] =
              src[static_cast<std::size_t>(y) * ow + x];
        }
      }
    }
  }
}

void relu_inplace(Tensor4& t) {
  for (double& v : t.span()) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor4& activation, Tensor4& grad) {
  const auto a = activation.span();
  auto g = grad.span();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(a[i] > 0.0)) g[i] = 0.0;
  }
}

Tensor4 concat_channels(const std::vector<const Tensor4*>& parts) {
  const Shape4 first = parts.front()->shape();
  int channels = 0;
  for (const auto* p : parts) channels += p->c();
  Tensor4 out(first.n, channels, first.h, first.w);
  const std::size_t plane = out.plane();
  for (int b = 0; b < first.n; ++b) {
    double* dst = out.sample(b);
    for (const auto* p : parts) {
      const std::size_t len = plane * static_cast<std::size_t>(p->c());
      std::memcpy(dst, p->sample(b), sizeof(double) * len);
      dst += len;
    }
  }
  return out;
}

}  // namespace platewaste::layers
