#include "offsim/inference.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "offsim/errors.hpp"

namespace offsim {

namespace {

TensorShape weight_shape(const LayerSpec& layer) {
    if (layer.kind == LayerKind::Conv2D)
        return {layer.out_channels, layer.in_channels, layer.kernel_h, layer.kernel_w};
    return {layer.out_channels, layer.in_channels, 1, 1};
}

// Zero-padded copy of a single-image tensor.
template <typename T>
std::vector<T> pad_image(const T* src, const TensorShape& shape, int padding) {
    const int64_t ph = shape.height + 2 * padding;
    const int64_t pw = shape.width + 2 * padding;
    std::vector<T> padded(static_cast<size_t>(shape.channels * ph * pw), T{0});
    for (int64_t c = 0; c < shape.channels; ++c)
        for (int64_t y = 0; y < shape.height; ++y) {
            const T* row = src + (c * shape.height + y) * shape.width;
            T* dst = padded.data() + (c * ph + y + padding) * pw + padding;
            std::copy(row, row + shape.width, dst);
        }
    return padded;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeMismatchError(what);
}

}  // namespace

FloatWeights init_random_weights(const ModelGraph& graph, uint64_t seed) {
    std::mt19937_64 rng(seed);
    FloatWeights weights;
    for (const LayerSpec& layer : graph.layers) {
        if (!layer.has_weights()) continue;
        Tensor w(weight_shape(layer));
        const double fan_in = static_cast<double>(layer.in_channels) *
                              (layer.kind == LayerKind::Conv2D ? layer.kernel_h * layer.kernel_w : 1);
        const float limit = static_cast<float>(std::sqrt(6.0 / fan_in));
        std::uniform_real_distribution<float> dist(-limit, limit);
        for (float& v : w.data) v = dist(rng);
        weights.emplace(layer.id, std::move(w));
    }
    return weights;
}

// ---------------------------------------------------------------------------
// Float reference pass
// ---------------------------------------------------------------------------

namespace {

Tensor conv2d_float(const LayerSpec& layer, const Tensor& input, const Tensor& weights) {
    const TensorShape out_shape = *layer_output_shape(layer, input.shape);
    Tensor out(out_shape);
    const int64_t ph = input.shape.height + 2 * layer.padding;
    const int64_t pw = input.shape.width + 2 * layer.padding;
    const auto padded = pad_image(input.data.data(), input.shape, layer.padding);

    for (int64_t oc = 0; oc < out_shape.channels; ++oc)
        for (int64_t oy = 0; oy < out_shape.height; ++oy)
            for (int64_t ox = 0; ox < out_shape.width; ++ox) {
                float acc = 0.0f;
                for (int64_t ic = 0; ic < layer.in_channels; ++ic)
                    for (int64_t ky = 0; ky < layer.kernel_h; ++ky) {
                        const float* in_row = padded.data() +
                                              (ic * ph + oy * layer.stride + ky) * pw +
                                              ox * layer.stride;
                        const float* w_row =
                            weights.data.data() +
                            ((oc * layer.in_channels + ic) * layer.kernel_h + ky) * layer.kernel_w;
                        for (int64_t kx = 0; kx < layer.kernel_w; ++kx)
                            acc += in_row[kx] * w_row[kx];
                    }
                out.at(0, oc, oy, ox) = acc;
            }
    return out;
}

Tensor pool2d_float(const LayerSpec& layer, const Tensor& input) {
    const TensorShape out_shape = *layer_output_shape(layer, input.shape);
    Tensor out(out_shape);
    const int64_t ph = input.shape.height + 2 * layer.padding;
    const int64_t pw = input.shape.width + 2 * layer.padding;
    const auto padded = pad_image(input.data.data(), input.shape, layer.padding);
    const float window = static_cast<float>(layer.kernel_h * layer.kernel_w);

    for (int64_t c = 0; c < out_shape.channels; ++c)
        for (int64_t oy = 0; oy < out_shape.height; ++oy)
            for (int64_t ox = 0; ox < out_shape.width; ++ox) {
                float acc = 0.0f;
                for (int64_t ky = 0; ky < layer.kernel_h; ++ky) {
                    const float* row = padded.data() + (c * ph + oy * layer.stride + ky) * pw +
                                       ox * layer.stride;
                    for (int64_t kx = 0; kx < layer.kernel_w; ++kx) acc += row[kx];
                }
                out.at(0, c, oy, ox) = acc / window;
            }
    return out;
}

Tensor fc_float(const LayerSpec& layer, const Tensor& input, const Tensor& weights) {
    Tensor out(TensorShape{1, layer.out_channels, 1, 1});
    for (int64_t oc = 0; oc < layer.out_channels; ++oc) {
        float acc = 0.0f;
        const float* w_row = weights.data.data() + oc * layer.in_channels;
        for (int64_t ic = 0; ic < layer.in_channels; ++ic) acc += input.data[static_cast<size_t>(ic)] * w_row[ic];
        out.data[static_cast<size_t>(oc)] = acc;
    }
    return out;
}

}  // namespace

Tensor float_forward(const ModelGraph& graph, const FloatWeights& weights, const Tensor& input) {
    require(input.shape == graph.input_shape, "input tensor does not match the graph input shape");
    std::vector<Tensor> outputs(graph.layers.size());

    for (const LayerSpec& layer : graph.layers) {
        const Tensor& in =
            layer.predecessors.empty() ? input : outputs[static_cast<size_t>(layer.predecessors.front())];
        switch (layer.kind) {
            case LayerKind::Conv2D: {
                require(in.shape.channels == layer.in_channels, "conv input channel mismatch");
                outputs[static_cast<size_t>(layer.id)] = conv2d_float(layer, in, weights.at(layer.id));
                break;
            }
            case LayerKind::Pool2D:
                outputs[static_cast<size_t>(layer.id)] = pool2d_float(layer, in);
                break;
            case LayerKind::FullyConnected: {
                require(in.shape.height == 1 && in.shape.width == 1 &&
                            in.shape.channels == layer.in_channels,
                        "fully-connected input must be (1, C, 1, 1)");
                outputs[static_cast<size_t>(layer.id)] = fc_float(layer, in, weights.at(layer.id));
                break;
            }
            case LayerKind::Activation: {
                Tensor out = in;
                for (float& v : out.data) v = std::max(v, 0.0f);
                outputs[static_cast<size_t>(layer.id)] = std::move(out);
                break;
            }
            case LayerKind::ElementwiseAdd: {
                const Tensor& other = outputs[static_cast<size_t>(layer.predecessors.back())];
                require(other.shape == in.shape, "elementwise-add operand shape mismatch");
                Tensor out = in;
                for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += other.data[i];
                outputs[static_cast<size_t>(layer.id)] = std::move(out);
                break;
            }
        }
    }
    return outputs.back();
}

void fit_prototype_readout(const ModelGraph& graph, FloatWeights& weights,
                           const std::vector<Tensor>& class_examples) {
    const LayerSpec& fc = graph.layers.back();
    if (fc.kind != LayerKind::FullyConnected || fc.predecessors.size() != 1 ||
        fc.predecessors.front() != fc.id - 1)
        throw ConfigError("prototype readout needs a trailing fully-connected classifier");
    if (static_cast<int64_t>(class_examples.size()) != fc.out_channels)
        throw ConfigError("prototype readout needs one example per class");

    ModelGraph trunk = graph;
    trunk.layers.pop_back();

    // Cosine readout: rows are unit prototype embeddings. Rectified pooled
    // features share a large common component across classes, so the unit rows
    // are then centered on their mean; that shifts every logit by the same
    // sample-dependent offset (argmax unchanged) while keeping the logit range
    // near the class margins instead of dwarfing them.
    std::vector<Tensor> rows;
    rows.reserve(class_examples.size());
    Tensor mean(TensorShape{1, fc.in_channels, 1, 1});
    for (int64_t c = 0; c < fc.out_channels; ++c) {
        Tensor feature = float_forward(trunk, weights, class_examples[static_cast<size_t>(c)]);
        double norm = 0.0;
        for (float v : feature.data) norm += static_cast<double>(v) * v;
        const float inv = static_cast<float>(1.0 / std::max(std::sqrt(norm), 1e-6));
        for (int64_t i = 0; i < fc.in_channels; ++i) {
            feature.data[static_cast<size_t>(i)] *= inv;
            mean.data[static_cast<size_t>(i)] +=
                feature.data[static_cast<size_t>(i)] / static_cast<float>(fc.out_channels);
        }
        rows.push_back(std::move(feature));
    }

    Tensor readout(TensorShape{fc.out_channels, fc.in_channels, 1, 1});
    for (int64_t c = 0; c < fc.out_channels; ++c)
        for (int64_t i = 0; i < fc.in_channels; ++i)
            readout.data[static_cast<size_t>(c * fc.in_channels + i)] =
                rows[static_cast<size_t>(c)].data[static_cast<size_t>(i)] -
                mean.data[static_cast<size_t>(i)];
    weights[fc.id] = std::move(readout);
}

// ---------------------------------------------------------------------------
// Int8 pass
// ---------------------------------------------------------------------------

namespace {

// Accumulators run wider than 32 bits; debug builds flag any value a 32-bit
// accumulator would have saturated.
inline void check_acc(int64_t acc) {
    assert(acc <= std::numeric_limits<int32_t>::max() && acc >= std::numeric_limits<int32_t>::min());
    (void)acc;
}

int8_t requant(int64_t acc, double multiplier) {
    const double v = std::round(static_cast<double>(acc) * multiplier);
    return static_cast<int8_t>(std::clamp(v, -128.0, 127.0));
}

}  // namespace

Tensor int8_forward(const ModelGraph& graph, const QuantizedModel& model, const Tensor& input) {
    require(input.shape == graph.input_shape, "input tensor does not match the graph input shape");

    struct IntTensor {
        TensorShape shape;
        std::vector<int8_t> data;
        double scale = 1.0;
    };
    std::vector<IntTensor> outputs(graph.layers.size());

    IntTensor quant_input;
    quant_input.shape = input.shape;
    quant_input.scale = model.input_params.scale;
    quant_input.data.resize(input.data.size());
    for (size_t i = 0; i < input.data.size(); ++i)
        quant_input.data[i] = quantize_value(input.data[i], model.input_params);

    const int last_id = graph.layers.back().id;
    Tensor logits;

    for (const LayerSpec& layer : graph.layers) {
        const IntTensor& in = layer.predecessors.empty()
                                  ? quant_input
                                  : outputs[static_cast<size_t>(layer.predecessors.front())];
        IntTensor out;
        out.scale = model.activations.count(layer.id) ? model.activations.at(layer.id).scale
                                                      : in.scale;

        switch (layer.kind) {
            case LayerKind::Conv2D:
            case LayerKind::FullyConnected: {
                const QuantTensor& w = model.weights.at(layer.id);
                require(w.shape.batch == layer.out_channels && w.shape.channels == layer.in_channels,
                        "quantized weight shape mismatch");
                const TensorShape out_shape = *layer_output_shape(layer, in.shape);
                out.shape = out_shape;
                out.data.resize(static_cast<size_t>(out_shape.elements()));
                const double acc_scale = in.scale * w.params.scale;
                const bool is_last = layer.id == last_id;
                if (is_last) logits = Tensor(out_shape);
                const double multiplier = acc_scale / out.scale;

                const int64_t ph = in.shape.height + 2 * layer.padding;
                const int64_t pw = in.shape.width + 2 * layer.padding;
                const auto padded = pad_image(in.data.data(), in.shape, layer.padding);
                const int64_t kh = layer.kernel_h, kw = layer.kernel_w;

                for (int64_t oc = 0; oc < out_shape.channels; ++oc)
                    for (int64_t oy = 0; oy < out_shape.height; ++oy)
                        for (int64_t ox = 0; ox < out_shape.width; ++ox) {
                            int64_t acc = 0;
                            for (int64_t ic = 0; ic < layer.in_channels; ++ic)
                                for (int64_t ky = 0; ky < kh; ++ky) {
                                    const int8_t* in_row = padded.data() +
                                                           (ic * ph + oy * layer.stride + ky) * pw +
                                                           ox * layer.stride;
                                    const int8_t* w_row =
                                        w.data.data() + ((oc * layer.in_channels + ic) * kh + ky) * kw;
                                    for (int64_t kx = 0; kx < kw; ++kx)
                                        acc += static_cast<int32_t>(in_row[kx]) *
                                               static_cast<int32_t>(w_row[kx]);
                                }
                            check_acc(acc);
                            const size_t idx = static_cast<size_t>(
                                (oc * out_shape.height + oy) * out_shape.width + ox);
                            if (is_last)
                                logits.data[idx] = static_cast<float>(acc * acc_scale);
                            else
                                out.data[idx] = requant(acc, multiplier);
                        }
                break;
            }
            case LayerKind::Pool2D: {
                // Average pool accumulates in integers and requantizes to the
                // calibrated output scale; averaged values sit far below the
                // input range, so passing the input scale through would strand
                // them on a handful of integer steps.
                const TensorShape out_shape = *layer_output_shape(layer, in.shape);
                out.shape = out_shape;
                out.data.resize(static_cast<size_t>(out_shape.elements()));
                const int64_t ph = in.shape.height + 2 * layer.padding;
                const int64_t pw = in.shape.width + 2 * layer.padding;
                const auto padded = pad_image(in.data.data(), in.shape, layer.padding);
                const double window = static_cast<double>(layer.kernel_h * layer.kernel_w);
                const double multiplier = in.scale / (window * out.scale);

                for (int64_t c = 0; c < out_shape.channels; ++c)
                    for (int64_t oy = 0; oy < out_shape.height; ++oy)
                        for (int64_t ox = 0; ox < out_shape.width; ++ox) {
                            int64_t acc = 0;
                            for (int64_t ky = 0; ky < layer.kernel_h; ++ky) {
                                const int8_t* row = padded.data() +
                                                    (c * ph + oy * layer.stride + ky) * pw +
                                                    ox * layer.stride;
                                for (int64_t kx = 0; kx < layer.kernel_w; ++kx) acc += row[kx];
                            }
                            check_acc(acc);
                            out.data[static_cast<size_t>((c * out_shape.height + oy) * out_shape.width +
                                                         ox)] = requant(acc, multiplier);
                        }
                break;
            }
            case LayerKind::Activation: {
                out.shape = in.shape;
                out.scale = in.scale;  // rectifier output stays within the input range
                out.data.resize(in.data.size());
                for (size_t i = 0; i < in.data.size(); ++i)
                    out.data[i] = std::max<int8_t>(in.data[i], 0);
                break;
            }
            case LayerKind::ElementwiseAdd: {
                const IntTensor& other = outputs[static_cast<size_t>(layer.predecessors.back())];
                require(other.shape == in.shape, "elementwise-add operand shape mismatch");
                out.shape = in.shape;
                out.data.resize(in.data.size());
                const double ma = in.scale / out.scale;
                const double mb = other.scale / out.scale;
                for (size_t i = 0; i < in.data.size(); ++i) {
                    const double v = std::round(in.data[i] * ma + other.data[i] * mb);
                    out.data[i] = static_cast<int8_t>(std::clamp(v, -128.0, 127.0));
                }
                break;
            }
        }
        outputs[static_cast<size_t>(layer.id)] = std::move(out);
    }

    if (logits.data.empty()) {
        // Non-matmul sink: dequantize its int8 output.
        const IntTensor& out = outputs.back();
        logits = Tensor(out.shape);
        for (size_t i = 0; i < out.data.size(); ++i)
            logits.data[i] = static_cast<float>(out.data[i] * out.scale);
    }
    return logits;
}

QuantizedModel quantize_model(const ModelGraph& graph, const FloatWeights& weights,
                              const std::vector<Tensor>& calibration_batch) {
    if (calibration_batch.empty()) throw EmptyDataset("calibration batch is empty");

    QuantizedModel model;
    for (const auto& [id, w] : weights)
        model.weights.emplace(id, quantize(w, calibrate(w.data)));

    // Activation ranges come from float-mode runs over the calibration batch.
    std::vector<double> absmax(graph.layers.size(), 0.0);
    double input_absmax = 0.0;
    for (const Tensor& sample : calibration_batch) {
        for (float v : sample.data) input_absmax = std::max(input_absmax, std::fabs(static_cast<double>(v)));
        std::vector<Tensor> outputs(graph.layers.size());
        for (const LayerSpec& layer : graph.layers) {
            const Tensor& in = layer.predecessors.empty()
                                   ? sample
                                   : outputs[static_cast<size_t>(layer.predecessors.front())];
            Tensor out;
            switch (layer.kind) {
                case LayerKind::Conv2D: out = conv2d_float(layer, in, weights.at(layer.id)); break;
                case LayerKind::Pool2D: out = pool2d_float(layer, in); break;
                case LayerKind::FullyConnected: out = fc_float(layer, in, weights.at(layer.id)); break;
                case LayerKind::Activation: {
                    out = in;
                    for (float& v : out.data) v = std::max(v, 0.0f);
                    break;
                }
                case LayerKind::ElementwiseAdd: {
                    const Tensor& other = outputs[static_cast<size_t>(layer.predecessors.back())];
                    out = in;
                    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += other.data[i];
                    break;
                }
            }
            for (float v : out.data)
                absmax[static_cast<size_t>(layer.id)] =
                    std::max(absmax[static_cast<size_t>(layer.id)], std::fabs(static_cast<double>(v)));
            outputs[static_cast<size_t>(layer.id)] = std::move(out);
        }
    }

    model.input_params = {std::max(input_absmax / 127.0, kQuantScaleEpsilon), 0};
    for (const LayerSpec& layer : graph.layers)
        model.activations[layer.id] = {
            std::max(absmax[static_cast<size_t>(layer.id)] / 127.0, kQuantScaleEpsilon), 0};
    return model;
}

EvalResult eval_accuracy(const ModelGraph& graph, const FloatWeights& weights,
                         const QuantizedModel* quantized, const Dataset& dataset, EvalMode mode) {
    if (dataset.samples.empty()) throw EmptyDataset("evaluation dataset is empty");
    if (mode == EvalMode::Int8 && quantized == nullptr)
        throw ConfigError("int8 evaluation requires a quantized model");

    int64_t correct = 0;
    for (size_t i = 0; i < dataset.samples.size(); ++i) {
        const Tensor logits = mode == EvalMode::Float
                                  ? float_forward(graph, weights, dataset.samples[i])
                                  : int8_forward(graph, *quantized, dataset.samples[i]);
        const auto arg =
            std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin();
        if (static_cast<int>(arg) == dataset.labels[i]) ++correct;
    }
    EvalResult result;
    result.num_samples = static_cast<int64_t>(dataset.samples.size());
    result.top1_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(result.num_samples);
    return result;
}

// ---------------------------------------------------------------------------
// Weight file IO: flat binary tensors + text manifest
// ---------------------------------------------------------------------------

namespace {

void write_manifest_line(std::ofstream& out, int id, const char* dtype, const TensorShape& s,
                         double scale, int64_t offset, int64_t bytes) {
    char line[192];
    std::snprintf(line, sizeof line, "tensor %d %s %lld %lld %lld %lld %.17g %lld %lld\n", id, dtype,
                  static_cast<long long>(s.batch), static_cast<long long>(s.channels),
                  static_cast<long long>(s.height), static_cast<long long>(s.width), scale,
                  static_cast<long long>(offset), static_cast<long long>(bytes));
    out << line;
}

}  // namespace

void save_float_weights(const FloatWeights& weights, const std::string& path_prefix) {
    std::ofstream manifest(path_prefix + ".manifest", std::ios::binary);
    std::ofstream blob(path_prefix + ".bin", std::ios::binary);
    if (!manifest || !blob) throw IoError("cannot write weight files at " + path_prefix);
    manifest << "offsim-weights v1 f32\n";
    int64_t offset = 0;
    for (const auto& [id, w] : weights) {
        const int64_t bytes = static_cast<int64_t>(w.data.size() * sizeof(float));
        write_manifest_line(manifest, id, "f32", w.shape, 1.0, offset, bytes);
        blob.write(reinterpret_cast<const char*>(w.data.data()), bytes);
        offset += bytes;
    }
}

FloatWeights load_float_weights(const std::string& path_prefix) {
    std::ifstream manifest(path_prefix + ".manifest", std::ios::binary);
    std::ifstream blob(path_prefix + ".bin", std::ios::binary);
    if (!manifest || !blob) throw IoError("cannot open weight files at " + path_prefix);
    std::string header;
    std::getline(manifest, header);
    if (header != "offsim-weights v1 f32") throw ConfigError(path_prefix + ": unknown weight format");

    FloatWeights weights;
    std::string tag;
    while (manifest >> tag) {
        if (tag != "tensor") throw ConfigError(path_prefix + ": unexpected manifest entry " + tag);
        int id = 0;
        std::string dtype;
        TensorShape s;
        double scale = 1.0;
        int64_t offset = 0, bytes = 0;
        manifest >> id >> dtype >> s.batch >> s.channels >> s.height >> s.width >> scale >> offset >>
            bytes;
        Tensor w(s);
        blob.seekg(offset);
        blob.read(reinterpret_cast<char*>(w.data.data()), bytes);
        if (!blob) throw IoError(path_prefix + ": truncated weight blob");
        weights.emplace(id, std::move(w));
    }
    return weights;
}

void save_quantized_model(const QuantizedModel& model, const std::string& path_prefix) {
    std::ofstream manifest(path_prefix + ".manifest", std::ios::binary);
    std::ofstream blob(path_prefix + ".bin", std::ios::binary);
    if (!manifest || !blob) throw IoError("cannot write weight files at " + path_prefix);
    manifest << "offsim-weights v1 i8\n";
    char line[96];
    std::snprintf(line, sizeof line, "input %.17g\n", model.input_params.scale);
    manifest << line;
    for (const auto& [id, params] : model.activations) {
        std::snprintf(line, sizeof line, "act %d %.17g\n", id, params.scale);
        manifest << line;
    }
    int64_t offset = 0;
    for (const auto& [id, w] : model.weights) {
        const int64_t bytes = static_cast<int64_t>(w.data.size());
        write_manifest_line(manifest, id, "i8", w.shape, w.params.scale, offset, bytes);
        blob.write(reinterpret_cast<const char*>(w.data.data()), bytes);
        offset += bytes;
    }
}

QuantizedModel load_quantized_model(const std::string& path_prefix) {
    std::ifstream manifest(path_prefix + ".manifest", std::ios::binary);
    std::ifstream blob(path_prefix + ".bin", std::ios::binary);
    if (!manifest || !blob) throw IoError("cannot open weight files at " + path_prefix);
    std::string header;
    std::getline(manifest, header);
    if (header != "offsim-weights v1 i8") throw ConfigError(path_prefix + ": unknown weight format");

    QuantizedModel model;
    std::string tag;
    while (manifest >> tag) {
        if (tag == "input") {
            manifest >> model.input_params.scale;
        } else if (tag == "act") {
            int id = 0;
            double scale = 1.0;
            manifest >> id >> scale;
            model.activations[id] = {scale, 0};
        } else if (tag == "tensor") {
            int id = 0;
            std::string dtype;
            QuantTensor w;
            int64_t offset = 0, bytes = 0;
            manifest >> id >> dtype >> w.shape.batch >> w.shape.channels >> w.shape.height >>
                w.shape.width >> w.params.scale >> offset >> bytes;
            w.data.resize(static_cast<size_t>(bytes));
            blob.seekg(offset);
            blob.read(reinterpret_cast<char*>(w.data.data()), bytes);
            if (!blob) throw IoError(path_prefix + ": truncated weight blob");
            model.weights.emplace(id, std::move(w));
        } else {
            throw ConfigError(path_prefix + ": unexpected manifest entry " + tag);
        }
    }
    return model;
}

}  // namespace offsim
