#pragma once

#include <cstdint>
#include <string>

#include "lindyn/grokking.hpp"

// IDX binary ingestion for the standard handwritten-digit files. Pixels are
// rescaled to [0, 1]; the first n_train training rows and n_test held-out
// rows are taken in file order.

namespace lindyn {

/// Reads train-images-idx3-ubyte / train-labels-idx1-ubyte and the t10k pair
/// from dir. Throws DataError on missing files, bad magic numbers
/// (0x00000803 images / 0x00000801 labels, big-endian), or short reads.
GrokDataset load_mnist(const std::string& dir, int n_train, int n_test);

/// load_mnist from the DATA_DIR environment variable when it is set;
/// otherwise falls back to synthetic_task(d=64, c=10, margin) with a notice
/// on stderr.
GrokDataset load_grok_dataset(int n_train, int n_test, double margin,
                              std::uint64_t seed);

}  // namespace lindyn
