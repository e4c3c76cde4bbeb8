#pragma once

#include <string>
#include <utility>
#include <vector>

namespace isingep {

struct Dataset {
  std::vector<std::vector<double>> images;  // pixels in [0,1] (MNIST) or {-1,+1} (patterns)
  std::vector<int> labels;
  int n_classes = 0;

  size_t size() const { return images.size(); }
};

// Big-endian IDX pair (magic 0x803 images / 0x801 labels); pixels divided by
// 255. Never touches the network: files are fetched out of band.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of load_idx for synthetic test fixtures; pixels re-quantized by
// round(v * 255).
void write_idx(const std::string& images_path, const std::string& labels_path,
               const Dataset& data, int rows, int cols);

// First `per_class` examples of every class, in file order.
Dataset take_per_class(const Dataset& full, int per_class);

// MNIST/k: first per_class_train per class from the train split, first
// per_class_test per class from the test split.
std::pair<Dataset, Dataset> make_subset(const Dataset& train_full, const Dataset& test_full,
                                        int per_class_train, int per_class_test);

// The two fixed 3x3 binary training patterns: class 0 is a vertical bar in
// the center column, class 1 a horizontal bar in the center row. A stand-in
// with the same flavor as the original task's (unpublished) pixel values.
Dataset patterns_3x3();

}  // namespace isingep
