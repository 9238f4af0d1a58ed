#pragma once

// Dense kernels behind Model. Weights are raw pointers into the model's flat
// parameter vector; layouts follow the (out, in, kh, kw) convention for
// convolutions and (in, out, 2, 2) for the transposed convolution.

#include <cstdint>
#include <vector>

#include "platewaste/tensor.hpp"

namespace platewaste::layers {

// 3x3 pad 1 or 1x1 pad 0, stride 1, with bias.
void conv_forward(const Tensor4& in, const double* weight, const double* bias, int out_channels,
                  int kernel, Tensor4& out);

// Accumulates into grad_weight / grad_bias; overwrites grad_in when non-null.
void conv_backward(const Tensor4& in, const double* weight, const Tensor4& grad_out, int kernel,
                   double* grad_weight, double* grad_bias, Tensor4* grad_in);

void up_forward(const Tensor4& in, const double* weight, const double* bias, int out_channels,
                Tensor4& out);
void up_backward(const Tensor4& in, const double* weight, const Tensor4& grad_out,
                 double* grad_weight, double* grad_bias, Tensor4& grad_in);

void maxpool_forward(const Tensor4& in, Tensor4& out, std::vector<std::uint8_t>& argmax);
void maxpool_backward(const Tensor4& grad_out, const std::vector<std::uint8_t>& argmax,
                      Tensor4& grad_in);

void relu_inplace(Tensor4& t);
// grad *= (activation > 0)
void relu_backward_inplace(const Tensor4& activation, Tensor4& grad);

// Channel concat of same-sized tensors.
Tensor4 concat_channels(const std::vector<const Tensor4*>& parts);

}  // namespace platewaste::layers
