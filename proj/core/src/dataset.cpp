#include "offsim/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "offsim/errors.hpp"

namespace offsim {

Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<float> proto_dist(-1.0f, 1.0f);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(spec.noise_sigma));

    std::vector<Tensor> prototypes;
    prototypes.reserve(static_cast<size_t>(spec.num_classes));
    for (int c = 0; c < spec.num_classes; ++c) {
        Tensor proto(spec.sample_shape);
        for (float& v : proto.data) v = proto_dist(rng);
        prototypes.push_back(std::move(proto));
    }

    Dataset dataset;
    dataset.samples.reserve(static_cast<size_t>(spec.num_samples));
    dataset.labels.reserve(static_cast<size_t>(spec.num_samples));
    for (int i = 0; i < spec.num_samples; ++i) {
        const int label = i % spec.num_classes;
        Tensor sample = prototypes[static_cast<size_t>(label)];
        for (float& v : sample.data) v += noise(rng);
        dataset.samples.push_back(std::move(sample));
        dataset.labels.push_back(label);
    }
    return dataset;
}

void save_dataset_dir(const Dataset& dataset, const std::string& dir) {
    if (dataset.samples.empty()) throw EmptyDataset("refusing to save an empty dataset");
    std::filesystem::create_directories(dir);
    const TensorShape& shape = dataset.samples.front().shape;

    std::ofstream manifest(dir + "/dataset.txt", std::ios::binary);
    if (!manifest) throw IoError("cannot write " + dir + "/dataset.txt");
    manifest << "offsim-dataset v1\n";
    manifest << dataset.samples.size() << " " << shape.batch << " " << shape.channels << " "
             << shape.height << " " << shape.width << "\n";
    for (int label : dataset.labels) manifest << label << "\n";

    std::ofstream blob(dir + "/samples.bin", std::ios::binary);
    if (!blob) throw IoError("cannot write " + dir + "/samples.bin");
    for (const Tensor& sample : dataset.samples)
        blob.write(reinterpret_cast<const char*>(sample.data.data()),
                   static_cast<std::streamsize>(sample.data.size() * sizeof(float)));
}

Dataset load_dataset_dir(const std::string& dir) {
    std::ifstream manifest(dir + "/dataset.txt", std::ios::binary);
    if (!manifest) throw IoError("cannot open " + dir + "/dataset.txt");
    std::string header;
    std::getline(manifest, header);
    if (header != "offsim-dataset v1") throw ConfigError(dir + ": unknown dataset format");

    size_t count = 0;
    TensorShape shape;
    manifest >> count >> shape.batch >> shape.channels >> shape.height >> shape.width;

    Dataset dataset;
    dataset.labels.resize(count);
    for (size_t i = 0; i < count; ++i)
        if (!(manifest >> dataset.labels[i])) throw ConfigError(dir + ": truncated label list");

    std::ifstream blob(dir + "/samples.bin", std::ios::binary);
    if (!blob) throw IoError("cannot open " + dir + "/samples.bin");
    dataset.samples.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        Tensor sample(shape);
        blob.read(reinterpret_cast<char*>(sample.data.data()),
                  static_cast<std::streamsize>(sample.data.size() * sizeof(float)));
        if (!blob) throw IoError(dir + ": truncated samples.bin");
        dataset.samples.push_back(std::move(sample));
    }
    return dataset;
}

}  // namespace offsim
