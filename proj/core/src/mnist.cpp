#include "lindyn/mnist.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "lindyn/errors.hpp"

namespace lindyn {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4))
    throw DataError("idx: short read in " + path);
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

Eigen::MatrixXd read_images(const std::string& path, int count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("idx: cannot open " + path);
  if (read_be32(in, path) != kImageMagic)
    throw DataError("idx: bad image magic in " + path);
  const int total = static_cast<int>(read_be32(in, path));
  const int rows = static_cast<int>(read_be32(in, path));
  const int cols = static_cast<int>(read_be32(in, path));
  if (count > total)
    throw DataError("idx: requested more images than " + path + " holds");
  const int dim = rows * cols;
  std::vector<unsigned char> buf(static_cast<std::size_t>(count) * dim);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size())))
    throw DataError("idx: short pixel read in " + path);
  Eigen::MatrixXd x(count, dim);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < dim; ++j)
      x(i, j) = buf[static_cast<std::size_t>(i) * dim + j] / 255.0;
  return x;
}

Eigen::VectorXi read_labels(const std::string& path, int count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("idx: cannot open " + path);
  if (read_be32(in, path) != kLabelMagic)
    throw DataError("idx: bad label magic in " + path);
  const int total = static_cast<int>(read_be32(in, path));
  if (count > total)
    throw DataError("idx: requested more labels than " + path + " holds");
  std::vector<unsigned char> buf(static_cast<std::size_t>(count));
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size())))
    throw DataError("idx: short label read in " + path);
  Eigen::VectorXi y(count);
  for (int i = 0; i < count; ++i) y(i) = buf[static_cast<std::size_t>(i)];
  return y;
}

}  // namespace

GrokDataset load_mnist(const std::string& dir, int n_train, int n_test) {
  if (n_train <= 0 || n_test <= 0)
    throw ShapeError("load_mnist: split sizes must be positive");
  GrokDataset data;
  data.x_train = read_images(dir + "/train-images-idx3-ubyte", n_train);
  data.y_train = read_labels(dir + "/train-labels-idx1-ubyte", n_train);
  data.x_test = read_images(dir + "/t10k-images-idx3-ubyte", n_test);
  data.y_test = read_labels(dir + "/t10k-labels-idx1-ubyte", n_test);
  data.classes = 10;
  data.source = "mnist";
  data.validate();
  return data;
}

GrokDataset load_grok_dataset(int n_train, int n_test, double margin,
                              std::uint64_t seed) {
  if (const char* dir = std::getenv("DATA_DIR")) {
    return load_mnist(dir, n_train, n_test);
  }
  std::fprintf(stderr,
               "DATA_DIR not set; using the synthetic cluster task instead of "
               "the digit files\n");
  return synthetic_task(/*d=*/64, /*classes=*/10, n_train, n_test, margin,
                        seed);
}

}  // namespace lindyn
