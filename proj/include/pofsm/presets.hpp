#pragma once

#include <vector>

#include "pofsm/nn_spec.hpp"

namespace pofsm {

// Full-size classifier: five conv blocks (96/256/384/384/256, first stride 4,
// pads 0/2/1/1/1), LRN after conv1/conv2/conv5, 3x3 stride-2 max pooling,
// then fc 4096/4096/classes. On 227x227x3 the spatial trace is 55-27-13-6.
inline NetworkSpec reference_classifier(int num_classes) {
  NetworkSpec spec;
  spec.input = {227, 227, 3};
  spec.num_classes = num_classes;
  spec.init = {InitKind::kGaussian, 0.01};
  auto& L = spec.layers;
  L.push_back(LayerSpec::Conv(96, 11, 4, 0));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Lrn());
  L.push_back(LayerSpec::MaxPool(3, 2));
  L.push_back(LayerSpec::Conv(256, 5, 1, 2));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Lrn());
  L.push_back(LayerSpec::MaxPool(3, 2));
  L.push_back(LayerSpec::Conv(384, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Conv(384, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Conv(256, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Lrn());
  L.push_back(LayerSpec::MaxPool(3, 2));
  L.push_back(LayerSpec::Fc(4096));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Fc(4096));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Fc(num_classes));
  L.push_back(LayerSpec::Softmax());
  return spec;
}

// Same block structure shrunk to train on a single core: five 3x3 convs with
// the same LRN/pool placement, fc 64/64/classes. He init so the small stack
// actually moves under plain SGD.
inline NetworkSpec desk_classifier(int num_classes, int rows = 32, int cols = 32) {
  NetworkSpec spec;
  spec.input = {rows, cols, 3};
  spec.num_classes = num_classes;
  spec.init = {InitKind::kHeNormal, 0.0};
  auto& L = spec.layers;
  L.push_back(LayerSpec::Conv(8, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Lrn());
  L.push_back(LayerSpec::MaxPool(3, 2));
  L.push_back(LayerSpec::Conv(16, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Lrn());
  L.push_back(LayerSpec::MaxPool(3, 2));
  L.push_back(LayerSpec::Conv(16, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Conv(16, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Conv(16, 3, 1, 1));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Lrn());
  L.push_back(LayerSpec::MaxPool(3, 2));
  L.push_back(LayerSpec::Fc(64));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Fc(64));
  L.push_back(LayerSpec::Relu());
  L.push_back(LayerSpec::Fc(num_classes));
  L.push_back(LayerSpec::Softmax());
  return spec;
}

// Fully convolutional flow predictor: stride-1 pad-1 3x3 stack ending in a
// per-pixel softmax over `clusters` channels, output dims = input dims.
inline NetworkSpec desk_flow_net(int clusters, int rows = 32, int cols = 32,
                                 std::vector<int> hidden = {12, 16}) {
  NetworkSpec spec;
  spec.input = {rows, cols, 3};
  spec.num_classes = clusters;
  spec.init = {InitKind::kHeNormal, 0.0};
  for (int width : hidden) {
    spec.layers.push_back(LayerSpec::Conv(width, 3, 1, 1));
    spec.layers.push_back(LayerSpec::Relu());
  }
  spec.layers.push_back(LayerSpec::Conv(clusters, 3, 1, 1));
  spec.layers.push_back(LayerSpec::SpatialSoftmax());
  return spec;
}

}  // namespace pofsm
