#include "isingep/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace isingep {

namespace {

uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error(path + ": truncated header");
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

void write_be32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + images_path);
  if (read_be32(img, images_path) != 0x803u) {
    throw std::runtime_error(images_path + ": bad magic (expected 0x00000803)");
  }
  const uint32_t n = read_be32(img, images_path);
  const uint32_t rows = read_be32(img, images_path);
  const uint32_t cols = read_be32(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open " + labels_path);
  if (read_be32(lab, labels_path) != 0x801u) {
    throw std::runtime_error(labels_path + ": bad magic (expected 0x00000801)");
  }
  if (read_be32(lab, labels_path) != n) {
    throw std::runtime_error(labels_path + ": label count does not match image count");
  }

  Dataset data;
  const size_t pixels = static_cast<size_t>(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  for (uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw std::runtime_error(images_path + ": truncated image data");
    }
    std::vector<double> image(pixels);
    for (size_t k = 0; k < pixels; ++k) image[k] = buf[k] / 255.0;
    data.images.push_back(std::move(image));

    char label;
    if (!lab.get(label)) throw std::runtime_error(labels_path + ": truncated label data");
    data.labels.push_back(static_cast<unsigned char>(label));
  }
  data.n_classes = data.labels.empty() ? 0 : *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  return data;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const Dataset& data, int rows, int cols) {
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot write " + images_path);
  write_be32(img, 0x803u);
  write_be32(img, static_cast<uint32_t>(data.size()));
  write_be32(img, static_cast<uint32_t>(rows));
  write_be32(img, static_cast<uint32_t>(cols));
  for (const auto& image : data.images) {
    if (static_cast<int>(image.size()) != rows * cols) {
      throw std::invalid_argument("image size does not match rows*cols");
    }
    for (double v : image) img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot write " + labels_path);
  write_be32(lab, 0x801u);
  write_be32(lab, static_cast<uint32_t>(data.size()));
  for (int label : data.labels) lab.put(static_cast<char>(static_cast<unsigned char>(label)));
}

Dataset take_per_class(const Dataset& full, int per_class) {
  Dataset out;
  out.n_classes = full.n_classes;
  std::vector<int> taken(static_cast<size_t>(full.n_classes), 0);
  for (size_t i = 0; i < full.size(); ++i) {
    const int c = full.labels[i];
    if (taken[static_cast<size_t>(c)] < per_class) {
      out.images.push_back(full.images[i]);
      out.labels.push_back(c);
      ++taken[static_cast<size_t>(c)];
    }
  }
  for (int c = 0; c < full.n_classes; ++c) {
    if (taken[static_cast<size_t>(c)] < per_class) {
      throw std::runtime_error("class " + std::to_string(c) + " has only " +
                               std::to_string(taken[static_cast<size_t>(c)]) + " examples, need " +
                               std::to_string(per_class));
    }
  }
  return out;
}

std::pair<Dataset, Dataset> make_subset(const Dataset& train_full, const Dataset& test_full,
                                        int per_class_train, int per_class_test) {
  return {take_per_class(train_full, per_class_train), take_per_class(test_full, per_class_test)};
}

Dataset patterns_3x3() {
  Dataset data;
  data.n_classes = 2;
  data.images = {
      {-1, 1, -1, -1, 1, -1, -1, 1, -1},  // vertical center bar
      {-1, -1, -1, 1, 1, 1, -1, -1, -1},  // horizontal center bar
  };
  data.labels = {0, 1};
  return data;
}

}  // namespace isingep
