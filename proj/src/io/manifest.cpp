#include "pupilnet/io/manifest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pupilnet/io/image_io.hpp"

namespace pupilnet::io {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_number(const std::string& field, std::size_t line, const char* what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty())
    throw ManifestError(line, "line " + std::to_string(line) + ": " + what + " '" + field + "' is not a number");
  return value;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string dataset_id_for(const std::filesystem::path& manifest_path) {
  const std::string stem = manifest_path.stem().string();
  if (stem == "manifest") {
    const auto parent = std::filesystem::absolute(manifest_path).parent_path().filename().string();
    if (!parent.empty()) return parent;
  }
  return stem;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(0, "cannot open manifest '" + path.string() + "'");
  DatasetManifest manifest;
  manifest.dataset_id = dataset_id_for(path);
  manifest.root = path.parent_path();

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 3)
      throw ManifestError(line_no, "line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                       std::to_string(fields.size()));
    ManifestEntry entry{fields[0], parse_number(fields[1], line_no, "x"), parse_number(fields[2], line_no, "y")};
    const auto image_path = manifest.root / entry.image;
    if (!std::filesystem::exists(image_path))
      throw ManifestError(line_no, "line " + std::to_string(line_no) + ": image '" + image_path.string() +
                                       "' does not exist");
    const ImageSize size = read_image_size(image_path);
    if (!(entry.x >= 0.0 && entry.x <= size.width - 1 && entry.y >= 0.0 && entry.y <= size.height - 1))
      throw ManifestError(line_no, "line " + std::to_string(line_no) + ": label (" + fields[1] + ", " + fields[2] +
                                       ") lies outside the " + std::to_string(size.width) + "x" +
                                       std::to_string(size.height) + " image");
    manifest.frames.push_back(std::move(entry));
  }
  if (manifest.frames.empty()) throw ManifestError(0, "empty manifest '" + path.string() + "'");
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ManifestError(0, "cannot write manifest '" + path.string() + "'");
  out << "image,x,y\n";
  for (const auto& e : manifest.frames) out << e.image << ',' << format_number(e.x) << ',' << format_number(e.y) << '\n';
  if (!out) throw ManifestError(0, "failed writing manifest '" + path.string() + "'");
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset dataset;
  dataset.id = manifest.dataset_id;
  dataset.frames.reserve(manifest.frames.size());
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const auto& e = manifest.frames[i];
    LabeledFrame frame;
    frame.image = load_image(manifest.root / e.image);
    frame.pupil = {e.x, e.y};
    frame.dataset_id = manifest.dataset_id;
    frame.frame_index = i;
    dataset.frames.push_back(std::move(frame));
  }
  return dataset;
}

}  // namespace pupilnet::io
