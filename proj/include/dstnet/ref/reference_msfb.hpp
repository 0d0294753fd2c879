#pragma once

#include <utility>
#include <vector>

#include "dstnet/core/tensor.hpp"
#include "dstnet/net/msfb.hpp"

namespace dstnet::ref {

// Straight-line serial re-derivations of the multi-scale fusion block chain.
// Parameter structs are only read for their tensor values; every numeric step
// is spelled out in loops here.

std::pair<Tensor, Tensor> p3d_gradients(const Tensor& x, const GradientStencils& s);
Tensor p3d_block(const Tensor& x, const P3dKernels& k);
Tensor maff(const std::vector<Tensor>& branches, const MaffParams& p);
Tensor msfb_forward(const Tensor& x, const MsfbParams& p);

}  // namespace dstnet::ref
