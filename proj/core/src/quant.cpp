#include "offsim/quant.hpp"

#include <algorithm>
#include <cmath>

namespace offsim {

QuantParams calibrate(std::span<const float> values, double epsilon) {
    double absmax = 0.0;
    for (float v : values) absmax = std::max(absmax, static_cast<double>(std::fabs(v)));
    QuantParams params;
    params.scale = std::max(absmax / 127.0, epsilon);
    params.zero_point = 0;
    return params;
}

int8_t quantize_value(float v, const QuantParams& params) {
    const double q = std::round(static_cast<double>(v) / params.scale) + params.zero_point;
    return static_cast<int8_t>(std::clamp(q, -128.0, 127.0));
}

QuantTensor quantize(const Tensor& values, const QuantParams& params) {
    QuantTensor q;
    q.shape = values.shape;
    q.params = params;
    q.data.resize(values.data.size());
    for (size_t i = 0; i < values.data.size(); ++i) q.data[i] = quantize_value(values.data[i], params);
    return q;
}

Tensor dequantize(const QuantTensor& q) {
    Tensor t(q.shape);
    for (size_t i = 0; i < q.data.size(); ++i)
        t.data[i] = static_cast<float>(q.params.scale * (q.data[i] - q.params.zero_point));
    return t;
}

}  // namespace offsim
