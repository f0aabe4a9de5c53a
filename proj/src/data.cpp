#include "qpool/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "qpool/errors.hpp"
#include "zip_reader.hpp"

namespace qpool::data {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct U8Array {
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> values;
};

std::string header_value(const std::string& header, const std::string& key,
                         const std::string& record) {
  const auto at = header.find("'" + key + "'");
  if (at == std::string::npos) throw DataError(record + ": .npy header lacks '" + key + "'");
  const auto colon = header.find(':', at);
  auto start = header.find_first_not_of(' ', colon + 1);
  if (start == std::string::npos) throw DataError(record + ": malformed .npy header");
  std::size_t end;
  if (header[start] == '(') {
    end = header.find(')', start);
    if (end == std::string::npos) throw DataError(record + ": malformed shape tuple");
    return header.substr(start, end - start + 1);
  }
  if (header[start] == '\'') {
    end = header.find('\'', start + 1);
    return header.substr(start + 1, end - start - 1);
  }
  end = header.find_first_of(",}", start);
  return header.substr(start, end - start);
}

U8Array parse_npy(const std::vector<std::uint8_t>& bytes, const std::string& record) {
  static constexpr std::uint8_t kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  if (bytes.size() < 10 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw DataError(record + ": bad magic, not a .npy record");
  }
  const int major = bytes[6];
  std::size_t header_len;
  std::size_t offset;
  if (major == 1) {
    header_len = bytes[8] | (bytes[9] << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw DataError(record + ": truncated header");
    header_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (std::size_t{bytes[11]} << 24);
    offset = 12;
  } else {
    throw DataError(record + ": unsupported .npy version " + std::to_string(major));
  }
  if (offset + header_len > bytes.size()) throw DataError(record + ": truncated header");
  const std::string header(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                           bytes.begin() + static_cast<std::ptrdiff_t>(offset + header_len));

  const auto descr = header_value(header, "descr", record);
  if (descr != "|u1" && descr != "<u1" && descr != ">u1") {
    throw DataError(record + ": dtype " + descr + " is not unsigned 8-bit");
  }
  if (header_value(header, "fortran_order", record) != "False") {
    throw DataError(record + ": Fortran-ordered arrays are not supported");
  }
  U8Array arr;
  std::string tuple = header_value(header, "shape", record);
  std::replace_if(tuple.begin(), tuple.end(), [](char ch) { return ch == '(' || ch == ')' || ch == ','; },
                  ' ');
  std::istringstream dims(tuple);
  std::size_t dim;
  std::size_t count = 1;
  while (dims >> dim) {
    arr.shape.push_back(dim);
    count *= dim;
  }
  const auto data_start = offset + header_len;
  if (bytes.size() - data_start != count) {
    throw DataError(record + ": payload holds " + std::to_string(bytes.size() - data_start) +
                    " bytes, shape needs " + std::to_string(count));
  }
  arr.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_start), bytes.end());
  return arr;
}

Dataset assemble(const U8Array& images, const U8Array& labels, Split split,
                 const std::string& images_name, const std::string& labels_name) {
  if (images.shape.size() == 4) {
    throw DataError(images_name + ": multi-channel images are not supported (8-bit grayscale only)");
  }
  if (images.shape.size() != 3) throw DataError(images_name + ": expected shape (N, H, W)");
  const bool flat = labels.shape.size() == 1 || (labels.shape.size() == 2 && labels.shape[1] == 1);
  if (!flat) throw DataError(labels_name + ": expected shape (N,) or (N, 1)");
  if (labels.shape[0] != images.shape[0]) {
    throw DataError(labels_name + ": " + std::to_string(labels.shape[0]) + " labels for " +
                    std::to_string(images.shape[0]) + " images in " + images_name);
  }
  if (images.shape[1] < 2 || images.shape[2] < 2) throw DataError(images_name + ": images smaller than 2x2");

  Dataset ds;
  ds.split = split;
  ds.height = static_cast<int>(images.shape[1]);
  ds.width = static_cast<int>(images.shape[2]);
  ds.pixels.reserve(images.values.size());
  for (auto p : images.values) ds.pixels.push_back(normalize_pixel(p));
  ds.labels.reserve(labels.values.size());
  for (std::size_t i = 0; i < labels.values.size(); ++i) {
    const int y = labels.values[i];
    if (y != 0 && y != 1) {
      throw DataError(labels_name + ": label " + std::to_string(y) + " at index " + std::to_string(i) +
                      " is not binary");
    }
    ds.labels.push_back(y);
  }
  return ds;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         b[at + 3];
}

U8Array read_idx(const std::filesystem::path& path, std::uint32_t magic) {
  const auto bytes = read_file(path);
  const auto name = path.string();
  if (bytes.size() < 4 || be32(bytes, 0) != magic) throw DataError(name + ": bad IDX magic");
  const std::size_t ndim = magic & 0xFF;
  if (bytes.size() < 4 + 4 * ndim) throw DataError(name + ": truncated IDX header");
  U8Array arr;
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    arr.shape.push_back(be32(bytes, 4 + 4 * d));
    count *= arr.shape.back();
  }
  const auto start = 4 + 4 * ndim;
  if (bytes.size() - start != count) throw DataError(name + ": IDX payload size mismatch");
  arr.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.end());
  return arr;
}

Dataset read_csv(const std::filesystem::path& path, Split split) {
  std::ifstream in(path);
  const auto name = path.string();
  if (!in) throw DataError("cannot open " + name);
  std::string line;
  if (!std::getline(in, line) || line.rfind("label,p0", 0) != 0) {
    throw DataError(name + ": expected header 'label,p0,...'");
  }
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
  const auto pixels = columns - 1;
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(pixels))));
  if (side * side != pixels || side < 2) throw DataError(name + ": pixel columns do not form a square image");

  U8Array images;
  U8Array labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::istringstream fields(line);
    std::string cell;
    std::vector<int> values;
    while (std::getline(fields, cell, ',')) {
      try {
        values.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw DataError(name + ": row " + std::to_string(row) + " has non-integer cell '" + cell + "'");
      }
    }
    if (values.size() != columns) throw DataError(name + ": row " + std::to_string(row) + " has wrong arity");
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] < 0 || values[i] > 255) {
        throw DataError(name + ": row " + std::to_string(row) + " pixel out of 0..255");
      }
      images.values.push_back(static_cast<std::uint8_t>(values[i]));
    }
    if (values[0] < 0 || values[0] > 255) throw DataError(name + ": row " + std::to_string(row) + " bad label");
    labels.values.push_back(static_cast<std::uint8_t>(values[0]));
  }
  images.shape = {row, side, side};
  labels.shape = {row};
  return assemble(images, labels, split, name, name);
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
}

}  // namespace

double normalize_pixel(std::uint8_t p) { return 2.0 * (static_cast<double>(p) / 255.0) - 1.0; }

std::uint8_t denormalize_pixel(double v) {
  const double p = std::round((v + 1.0) / 2.0 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

DatasetPair load_array_archive(const std::filesystem::path& path) {
  const detail::ZipReader zip(read_file(path));
  const auto record = [&](const std::string& key) {
    const auto* e = zip.find(key + ".npy");
    if (e == nullptr) e = zip.find(key);
    if (e == nullptr) throw DataError(path.string() + ": missing record '" + key + "'");
    return parse_npy(zip.read(*e), key);
  };
  DatasetPair out;
  out.train = assemble(record("train_images"), record("train_labels"), Split::Train, "train_images",
                       "train_labels");
  out.val = assemble(record("val_images"), record("val_labels"), Split::Val, "val_images", "val_labels");
  return out;
}

DatasetPair load_idx(const std::filesystem::path& train_images, const std::filesystem::path& train_labels,
                     const std::filesystem::path& val_images, const std::filesystem::path& val_labels) {
  DatasetPair out;
  out.train = assemble(read_idx(train_images, 0x00000803), read_idx(train_labels, 0x00000801), Split::Train,
                       train_images.string(), train_labels.string());
  out.val = assemble(read_idx(val_images, 0x00000803), read_idx(val_labels, 0x00000801), Split::Val,
                     val_images.string(), val_labels.string());
  return out;
}

DatasetPair load_csv(const std::filesystem::path& train, const std::filesystem::path& val) {
  return {read_csv(train, Split::Train), read_csv(val, Split::Val)};
}

int blob_threshold_label(std::span<const double> image, int side) {
  const int c = side - 3;
  const double mean = 0.5 * (image[c * side + c] + image[c * side + c - 1]);
  return mean > -0.25 ? 1 : 0;
}

DatasetPair generate_synthetic(const SyntheticSpec& spec) {
  if (spec.side < 6) throw std::invalid_argument("synthetic images need side >= 6");
  if (spec.train_size < 1 || spec.val_size < 1) throw std::invalid_argument("synthetic split sizes must be >= 1");
  std::mt19937_64 gen(spec.seed);
  constexpr double kSigma = 1.2;
  constexpr double kPeak = 1.5;  // background -1, blob core about +0.5

  const auto make = [&](int n, Split split) {
    Dataset ds;
    ds.split = split;
    ds.height = spec.side;
    ds.width = spec.side;
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % 2;
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(gen() % static_cast<std::uint64_t>(i + 1));
      std::swap(labels[i], labels[j]);
    }
    for (int y : labels) {
      const double base = y == 0 ? 2.0 : spec.side - 3.0;
      const double cr = base + uniform(gen, -spec.jitter, spec.jitter);
      const double cc = base + uniform(gen, -spec.jitter, spec.jitter);
      for (int r = 0; r < spec.side; ++r) {
        for (int c = 0; c < spec.side; ++c) {
          const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
          double v = -1.0 + kPeak * std::exp(-d2 / (2 * kSigma * kSigma));
          if (spec.noise > 0.0) v += uniform(gen, -spec.noise, spec.noise);
          ds.pixels.push_back(std::clamp(v, -1.0, 1.0));
        }
      }
      ds.labels.push_back(y);
    }
    return ds;
  };

  DatasetPair out{make(spec.train_size, Split::Train), make(spec.val_size, Split::Val)};
  if (spec.noise == 0.0) {
    for (const auto* ds : {&out.train, &out.val}) {
      for (std::size_t i = 0; i < ds->size(); ++i) {
        if (blob_threshold_label(ds->image(i), spec.side) != ds->labels[i]) {
          throw std::logic_error("synthetic generator produced a non-separable image");
        }
      }
    }
  }
  return out;
}

DatasetPair load_source(std::string_view source) {
  if (source == "synthetic") return generate_synthetic({});
  if (source.rfind("synthetic:", 0) == 0) {
    SyntheticSpec spec;
    try {
      spec.seed = std::stoull(std::string(source.substr(10)));
    } catch (const std::exception&) {
      throw DataError("bad synthetic seed in '" + std::string(source) + "'");
    }
    return generate_synthetic(spec);
  }
  if (source.rfind("idx:", 0) == 0) {
    const auto parts = split_commas(source.substr(4));
    if (parts.size() != 4) throw DataError("idx source needs four comma-separated paths");
    return load_idx(parts[0], parts[1], parts[2], parts[3]);
  }
  if (source.rfind("csv:", 0) == 0) {
    const auto parts = split_commas(source.substr(4));
    if (parts.size() != 2) throw DataError("csv source needs train,val paths");
    return load_csv(parts[0], parts[1]);
  }
  const std::filesystem::path path(source);
  if (path.extension() == ".npz") return load_array_archive(path);
  throw DataError("unrecognized dataset source '" + std::string(source) + "'");
}

std::vector<std::array<double, 4>> extract_patches(std::span<const double> image, int height, int width,
                                                   int stride) {
  if (height < 2 || width < 2) throw std::invalid_argument("image smaller than the 2x2 kernel");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (image.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("image buffer does not match its dimensions");
  }
  const int oh = output_extent(height, stride);
  const int ow = output_extent(width, stride);
  std::vector<std::array<double, 4>> patches;
  patches.reserve(static_cast<std::size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      const int r = i * stride;
      const int c = j * stride;
      patches.push_back({image[r * width + c], image[r * width + c + 1], image[(r + 1) * width + c],
                         image[(r + 1) * width + c + 1]});
    }
  }
  return patches;
}

}  // namespace qpool::data
