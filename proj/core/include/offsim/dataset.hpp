#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offsim/tensor.hpp"

namespace offsim {

struct Dataset {
    std::vector<Tensor> samples;
    std::vector<int> labels;

    int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

struct SyntheticDatasetSpec {
    uint64_t seed = 7;
    int num_classes = 10;
    int num_samples = 1000;
    double noise_sigma = 0.35;
    TensorShape sample_shape{1, 3, 32, 32};
};

// Seeded class prototypes plus Gaussian noise; labels cycle through the
// classes so the set is balanced.
Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec);

// Directory layout: dataset.txt manifest (count, shape, labels) + samples.bin
// with raw float32 tensors.
void save_dataset_dir(const Dataset& dataset, const std::string& dir);
Dataset load_dataset_dir(const std::string& dir);

}  // namespace offsim
