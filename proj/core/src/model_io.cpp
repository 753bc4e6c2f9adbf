#include <fstream>
#include <sstream>

#include <json.hpp>

#include "offsim/errors.hpp"
#include "offsim/model_graph.hpp"

namespace offsim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

}  // namespace

std::string model_to_json(const ModelGraph& graph) {
    ordered_json j;
    j["input_shape"] = {graph.input_shape.batch, graph.input_shape.channels,
                        graph.input_shape.height, graph.input_shape.width};
    j["layers"] = ordered_json::array();
    for (const LayerSpec& layer : graph.layers) {
        ordered_json l;
        l["id"] = layer.id;
        l["kind"] = to_string(layer.kind);
        l["kernel"] = {layer.kernel_h, layer.kernel_w};
        l["stride"] = layer.stride;
        l["padding"] = layer.padding;
        l["in_channels"] = layer.in_channels;
        l["out_channels"] = layer.out_channels;
        l["pred"] = layer.predecessors;
        j["layers"].push_back(std::move(l));
    }
    return j.dump(2) + "\n";
}

ModelGraph model_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model json parse error: ") + e.what());
    }
    ModelGraph graph;
    try {
        const auto& shape = j.at("input_shape");
        graph.input_shape = {shape.at(0).get<int64_t>(), shape.at(1).get<int64_t>(),
                             shape.at(2).get<int64_t>(), shape.at(3).get<int64_t>()};
        for (const auto& l : j.at("layers")) {
            LayerSpec layer;
            layer.id = l.at("id").get<int>();
            const std::string kind = l.at("kind").get<std::string>();
            auto parsed = layer_kind_from_string(kind);
            if (!parsed) throw ConfigError("unknown layer kind '" + kind + "'");
            layer.kind = *parsed;
            layer.kernel_h = l.at("kernel").at(0).get<int>();
            layer.kernel_w = l.at("kernel").at(1).get<int>();
            layer.stride = l.at("stride").get<int>();
            layer.padding = l.at("padding").get<int>();
            layer.in_channels = l.at("in_channels").get<int64_t>();
            layer.out_channels = l.at("out_channels").get<int64_t>();
            layer.predecessors = l.at("pred").get<std::vector<int>>();
            graph.layers.push_back(std::move(layer));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model json: ") + e.what());
    }
    return graph;
}

ModelGraph load_model(const std::string& path) {
    ModelGraph graph = model_from_json(read_file(path));
    GraphVerdict verdict = validate_graph(graph);
    if (!verdict)
        throw ConfigError(path + ": invalid model (layer " + std::to_string(verdict.layer_id) +
                          ", " + std::string(to_string(verdict.fault)) + ": " + verdict.rule + ")");
    return graph;
}

void save_model(const ModelGraph& graph, const std::string& path) {
    write_file(path, model_to_json(graph));
}

}  // namespace offsim
