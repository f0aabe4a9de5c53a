#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpool::data {

enum class Split { Train, Val };

/// Grayscale images normalized to [-1, 1], stored row-major per image.
struct Dataset {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;
  std::vector<int> labels;
  Split split = Split::Train;

  std::size_t size() const { return labels.size(); }
  std::span<const double> image(std::size_t i) const {
    const auto n = static_cast<std::size_t>(height) * width;
    return std::span<const double>(pixels).subspan(i * n, n);
  }
};

struct DatasetPair {
  Dataset train;
  Dataset val;
};

/// 2 * (p / 255) - 1.
double normalize_pixel(std::uint8_t p);
std::uint8_t denormalize_pixel(double v);

/// ZIP archive of .npy records with keys train_images, train_labels,
/// val_images, val_labels (uint8). Stored and deflated members are read.
DatasetPair load_array_archive(const std::filesystem::path& path);

/// IDX files: images magic 0x00000803, labels magic 0x00000801.
DatasetPair load_idx(const std::filesystem::path& train_images,
                     const std::filesystem::path& train_labels,
                     const std::filesystem::path& val_images,
                     const std::filesystem::path& val_labels);

/// CSV with header `label,p0,...,p{N-1}`; images must be square.
DatasetPair load_csv(const std::filesystem::path& train, const std::filesystem::path& val);

struct SyntheticSpec {
  std::uint64_t seed = 0;
  int train_size = 200;
  int val_size = 50;
  int side = 8;
  /// Half-width of the uniform pixel noise.
  double noise = 0.1;
  /// Half-width of the uniform blob-centre jitter, in pixels.
  double jitter = 0.5;
};

/// Two-class blob images: class 0 centred near (2, 2), class 1 near
/// (side-3, side-3). Deterministic in the seed; labels balanced.
DatasetPair generate_synthetic(const SyntheticSpec& spec);

/// Mean of the two class-1 core pixels thresholded at 0. Separates every
/// noiseless synthetic image.
int blob_threshold_label(std::span<const double> image, int side);

/// Resolves a dataset source string: `synthetic[:seed]`, a path ending in
/// .npz, `idx:ti,tl,vi,vl` or `csv:train,val`.
DatasetPair load_source(std::string_view source);

inline int output_extent(int n, int stride) { return (n - 2) / stride + 1; }

/// Valid 2x2 windows in row-major window order, each flattened row-major.
std::vector<std::array<double, 4>> extract_patches(std::span<const double> image, int height,
                                                   int width, int stride);

}  // namespace qpool::data
