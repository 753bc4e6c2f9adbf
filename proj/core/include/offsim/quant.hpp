#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offsim/tensor.hpp"

namespace offsim {

// Symmetric per-tensor quantization parameters (zero_point stays 0).
struct QuantParams {
    double scale = 1.0;  // > 0
    int zero_point = 0;  // in [-128, 127]
};

struct QuantTensor {
    TensorShape shape;
    std::vector<int8_t> data;
    QuantParams params;
};

inline constexpr double kQuantScaleEpsilon = 1e-8;

// Symmetric min-max calibration: scale = max(|min|,|max|)/127, zero_point = 0.
// All-zero tensors get the epsilon floor.
QuantParams calibrate(std::span<const float> values, double epsilon = kQuantScaleEpsilon);

int8_t quantize_value(float v, const QuantParams& params);
QuantTensor quantize(const Tensor& values, const QuantParams& params);
Tensor dequantize(const QuantTensor& q);

}  // namespace offsim
