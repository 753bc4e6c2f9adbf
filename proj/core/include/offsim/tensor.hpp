#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "offsim/model_graph.hpp"

namespace offsim {

// Dense float tensor in NCHW layout.
struct Tensor {
    TensorShape shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(TensorShape s) : shape(s), data(static_cast<size_t>(s.elements()), 0.0f) {}

    float& at(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data[static_cast<size_t>(((n * shape.channels + c) * shape.height + h) * shape.width + w)];
    }
    float at(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data[static_cast<size_t>(((n * shape.channels + c) * shape.height + h) * shape.width + w)];
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
};

}  // namespace offsim
