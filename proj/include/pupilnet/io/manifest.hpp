#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "pupilnet/dataset.hpp"
#include "pupilnet/error.hpp"

namespace pupilnet::io {

/// CSV, one header line then `relative_image_path,x,y` per frame. Paths are
/// relative to the manifest's directory; labels use '.' as decimal point.
struct ManifestEntry {
  std::string image;  // relative path
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string dataset_id;
  std::filesystem::path root;
  std::vector<ManifestEntry> frames;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

class ManifestError : public Error {
 public:
  ManifestError(std::size_t line, const std::string& what) : Error(what), line_(line) {}
  /// 1-based line number of the offending entry, 0 if not line specific.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Dataset id: the file stem, or the parent directory name when the file is
/// called "manifest".
std::string dataset_id_for(const std::filesystem::path& manifest_path);

/// Parses and validates: every image must exist and every label must lie
/// inside [0, width - 1] x [0, height - 1] of its image.
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads every image of the manifest.
Dataset load_dataset(const DatasetManifest& manifest);

}  // namespace pupilnet::io
