#include "ltr3o/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ltr3o/common.hpp"

namespace ltr3o {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

int parse_index(const std::string& s, const std::string& what, int row_no) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ValidationError("manifest row " + std::to_string(row_no) + ": " + what + " '" + s +
                          "' is not a nonnegative integer");
  return std::stoi(s);
}

constexpr const char* kHeader = "sample_id,subject_id,dataset_id,frames_dir,onset,apex,offset,label";

}  // namespace

std::vector<ManifestRow> load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open manifest: " + path.string());

  std::string line;
  if (!std::getline(f, line)) throw ValidationError("manifest is empty: " + path.string());
  if (trim(line) != kHeader)
    throw ValidationError("manifest header must be '" + std::string(kHeader) + "': " +
                          path.string());

  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  int row_no = 1;
  while (std::getline(f, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 8)
      throw ValidationError("manifest row " + std::to_string(row_no) + ": expected 8 fields, got " +
                            std::to_string(fields.size()));

    ManifestRow r;
    r.sample_id = fields[0];
    r.subject_id = fields[1];
    r.dataset_id = fields[2];
    r.label = fields[7];
    if (r.sample_id.empty() || r.subject_id.empty() || r.dataset_id.empty() || r.label.empty())
      throw ValidationError("manifest row " + std::to_string(row_no) + ": empty id or label field");
    if (!seen.insert(r.sample_id).second)
      throw ValidationError("manifest row " + std::to_string(row_no) + ": duplicate sample_id '" +
                            r.sample_id + "'");

    std::filesystem::path dir = fields[3];
    r.frames_dir = dir.is_absolute() ? dir : base / dir;
    r.onset = parse_index(fields[4], "onset", row_no);
    if (!fields[5].empty()) r.apex = parse_index(fields[5], "apex", row_no);
    r.offset = parse_index(fields[6], "offset", row_no);
    if (r.onset > r.offset)
      throw ValidationError("manifest row " + std::to_string(row_no) + ": onset " +
                            std::to_string(r.onset) + " > offset " + std::to_string(r.offset));
    if (r.apex && (*r.apex < r.onset || *r.apex > r.offset))
      throw ValidationError("manifest row " + std::to_string(row_no) + ": apex outside [onset, offset]");
    rows.push_back(std::move(r));
  }
  if (rows.empty())
    std::cerr << "warning: manifest has a header but no rows: " << path.string() << "\n";
  return rows;
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& path,
                                       const LabelSpace& labels) {
  std::vector<ManifestRow> rows = load_manifest(path);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!labels.contains(rows[i].label))
      throw ValidationError("manifest row " + std::to_string(i + 2) + ": label '" + rows[i].label +
                            "' not in label set " + labels.to_string());
  return rows;
}

LabelSpace manifest_label_space(const std::vector<ManifestRow>& rows) {
  std::set<std::string> names;
  for (const auto& r : rows) names.insert(r.label);
  if (names.empty()) throw ValidationError("manifest has no rows to derive labels from");
  return LabelSpace(std::vector<std::string>(names.begin(), names.end()));
}

std::vector<DatasetSummary> manifest_summary(const std::vector<ManifestRow>& rows) {
  std::map<std::string, std::pair<std::set<std::string>, std::set<std::string>>> by_ds;
  std::map<std::string, int> counts;
  for (const auto& r : rows) {
    by_ds[r.dataset_id].first.insert(r.subject_id);
    by_ds[r.dataset_id].second.insert(r.label);
    ++counts[r.dataset_id];
  }
  std::vector<DatasetSummary> out;
  for (const auto& [ds, sets] : by_ds)
    out.push_back({ds, counts[ds], static_cast<int>(sets.first.size()),
                   static_cast<int>(sets.second.size())});
  return out;
}

MESample load_sample(const ManifestRow& row, int image_size) {
  if (image_size < 8) throw ValidationError("load_sample: image_size too small");
  if (!std::filesystem::is_directory(row.frames_dir))
    throw ValidationError("sample '" + row.sample_id + "': frames_dir " +
                          row.frames_dir.string() + " is not a directory");

  static const std::set<std::string> kExts = {".png", ".jpg", ".jpeg", ".bmp",
                                              ".pgm", ".ppm", ".tif", ".tiff"};
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(row.frames_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (kExts.count(ext)) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  if (files.empty())
    throw ValidationError("sample '" + row.sample_id + "': no frame images in " +
                          row.frames_dir.string());
  if (row.offset >= static_cast<int>(files.size()))
    throw ValidationError("sample '" + row.sample_id + "': offset out of range (offset " +
                          std::to_string(row.offset) + ", " + std::to_string(files.size()) +
                          " frames on disk)");

  MESample s;
  s.sample_id = row.sample_id;
  s.subject_id = row.subject_id;
  s.dataset_id = row.dataset_id;
  s.onset_idx = row.onset;
  s.apex_idx = row.apex;
  s.offset_idx = row.offset;
  s.label = row.label;
  s.frames.reserve(files.size());
  for (const auto& p : files) s.frames.push_back(resize_bilinear(read_image8(p), image_size, image_size));
  validate_sample(s);
  return s;
}

}  // namespace ltr3o
