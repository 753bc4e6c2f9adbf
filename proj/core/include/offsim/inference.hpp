#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "offsim/dataset.hpp"
#include "offsim/model_graph.hpp"
#include "offsim/quant.hpp"
#include "offsim/tensor.hpp"

namespace offsim {

// Conv weights are [out_c, in_c, kh, kw]; fully-connected weights [out_c, in_c].
// Layers are bias-free.
using FloatWeights = std::map<int, Tensor>;

FloatWeights init_random_weights(const ModelGraph& graph, uint64_t seed);

// Training-free classifier fit: the final fully-connected row for class c is
// set to the (normalized) feature embedding of that class's example, turning
// the random feature extractor into a nearest-prototype readout. Requires the
// graph to end in a FullyConnected layer fed by the preceding layer.
void fit_prototype_readout(const ModelGraph& graph, FloatWeights& weights,
                           const std::vector<Tensor>& class_examples);

// Reference full-precision forward pass; returns the last layer's output.
Tensor float_forward(const ModelGraph& graph, const FloatWeights& weights, const Tensor& input);

struct QuantizedModel {
    std::map<int, QuantTensor> weights;
    std::map<int, QuantParams> activations;  // output params per layer id
    QuantParams input_params;
};

// Quantizes weights per tensor and calibrates activation ranges by running the
// calibration batch in float mode.
QuantizedModel quantize_model(const ModelGraph& graph, const FloatWeights& weights,
                              const std::vector<Tensor>& calibration_batch);

// 8-bit forward pass: int8 operands, 32-bit accumulators, per-layer rescale via
// the calibrated activation params, rectifier applied in the integer domain.
// Final logits are dequantized from the raw accumulator.
Tensor int8_forward(const ModelGraph& graph, const QuantizedModel& model, const Tensor& input);

struct EvalResult {
    double top1_accuracy = 0;  // percent
    int64_t num_samples = 0;
};

enum class EvalMode { Float, Int8 };

EvalResult eval_accuracy(const ModelGraph& graph, const FloatWeights& weights,
                         const QuantizedModel* quantized, const Dataset& dataset, EvalMode mode);

// Flat binary tensors plus a text manifest (layer id -> shape, dtype, scale).
void save_float_weights(const FloatWeights& weights, const std::string& path_prefix);
FloatWeights load_float_weights(const std::string& path_prefix);
void save_quantized_model(const QuantizedModel& model, const std::string& path_prefix);
QuantizedModel load_quantized_model(const std::string& path_prefix);

}  // namespace offsim
