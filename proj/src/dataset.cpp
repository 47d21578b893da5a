#include "drmn/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "drmn/error.hpp"
#include "drmn/rng.hpp"
#include "binio.hpp"
#include "json.hpp"

namespace drmn {

namespace fs = std::filesystem;
using nlohmann::json;

bool Split::is_unseen(ClassId c) const {
  return std::find(unseen_classes.begin(), unseen_classes.end(), c) != unseen_classes.end();
}

bool Split::is_seen(ClassId c) const {
  return std::find(seen_classes.begin(), seen_classes.end(), c) != seen_classes.end();
}

namespace {

[[noreturn]] void invalid(ValidationCode code, const std::string& what) {
  throw ValidationError(code, std::string(validation_code_name(code)) + ": " + what);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

using binio::read_file;
using binio::write_file;

json parse_json_file(const fs::path& file) {
  const std::string text = read_file(file);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::format, file.filename().string() + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) {
    invalid(ValidationCode::missing_field, file.filename().string() + " lacks \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::format, file.filename().string() + ": field \"" + key + "\": " + e.what());
  }
}

std::string format_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_ids(const std::vector<ImageId>& ids, std::size_t n_images, const char* list) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= n_images) {
      invalid(ValidationCode::image_id_out_of_range,
              std::string(list) + "[" + std::to_string(i) + "] = " + std::to_string(ids[i]));
    }
  }
}

}  // namespace

void validate(const ZslDataset& ds) {
  const auto& sem = ds.semantics;
  if (sem.z.rank() != 2 || sem.n_attributes() < 1) {
    invalid(ValidationCode::no_attributes, "class semantic matrix needs at least one attribute");
  }
  if (sem.attribute_names.size() != sem.n_attributes()) {
    invalid(ValidationCode::missing_field, "attribute name count differs from attribute count");
  }
  const std::size_t n_classes = sem.n_classes();
  for (std::size_t c = 0; c < n_classes; ++c) {
    double norm2 = 0.0;
    for (double v : sem.z.row(c)) {
      if (!std::isfinite(v)) invalid(ValidationCode::non_finite_value, "class " + std::to_string(c) + " semantics");
      if (v < 0.0) invalid(ValidationCode::negative_semantic, "class " + std::to_string(c));
      norm2 += v * v;
    }
    if (!(norm2 > 0.0)) {
      invalid(ValidationCode::zero_norm_semantic, "zero-norm class semantic for class " + std::to_string(c));
    }
  }

  const auto& f = ds.features;
  if (f.levels.empty() || f.ref_level >= f.levels.size()) {
    invalid(ValidationCode::bad_ref_level, "ref level " + std::to_string(f.ref_level) + " with " +
                                               std::to_string(f.levels.size()) + " levels");
  }
  if (f.n_images != ds.labels.size()) {
    invalid(ValidationCode::label_count_mismatch, std::to_string(f.n_images) + " images but " +
                                                      std::to_string(ds.labels.size()) + " labels");
  }
  for (std::size_t l = 0; l < f.levels.size(); ++l) {
    const auto& lv = f.levels[l];
    if (lv.shape.numel() == 0 || lv.data.size() != f.n_images * lv.shape.numel()) {
      invalid(ValidationCode::level_shape_mismatch, "level " + std::to_string(l) + " payload size");
    }
    for (std::size_t i = 0; i < lv.data.size(); ++i) {
      if (!std::isfinite(lv.data[i])) {
        invalid(ValidationCode::non_finite_value,
                "level " + std::to_string(l) + " image " + std::to_string(i / lv.shape.numel()));
      }
    }
  }
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] >= n_classes) {
      invalid(ValidationCode::class_out_of_range, "label of image " + std::to_string(i));
    }
  }

  const auto& s = ds.split;
  for (const auto* list : {&s.seen_classes, &s.unseen_classes})
    for (ClassId c : *list)
      if (c >= n_classes) invalid(ValidationCode::class_out_of_range, "split class " + std::to_string(c));
  for (ClassId c : s.seen_classes) {
    if (s.is_unseen(c)) invalid(ValidationCode::seen_unseen_overlap, "class " + std::to_string(c));
  }

  check_ids(s.train_ids, ds.n_images(), "train_ids");
  check_ids(s.test_seen_ids, ds.n_images(), "test_seen_ids");
  check_ids(s.test_unseen_ids, ds.n_images(), "test_unseen_ids");

  std::set<ImageId> used;
  for (const auto* list : {&s.train_ids, &s.test_seen_ids, &s.test_unseen_ids})
    for (ImageId id : *list)
      if (!used.insert(id).second) invalid(ValidationCode::split_ids_overlap, "image " + std::to_string(id));

  for (const auto* list : {&s.train_ids, &s.test_seen_ids})
    for (ImageId id : *list)
      if (!s.is_seen(ds.labels[id])) {
        invalid(ValidationCode::split_label_mismatch, "image " + std::to_string(id) + " is not of a seen class");
      }
  for (ImageId id : s.test_unseen_ids)
    if (!s.is_unseen(ds.labels[id])) {
      invalid(ValidationCode::split_label_mismatch, "image " + std::to_string(id) + " is not of an unseen class");
    }
}

void write_feature_file(const fs::path& file, const FeatureLevel& level, std::size_t n_images) {
  std::string bytes(kFeatMagic, kFeatMagic + 8);
  put_u32(bytes, kFeatVersion);
  put_u32(bytes, static_cast<std::uint32_t>(n_images));
  put_u32(bytes, level.shape.channels);
  put_u32(bytes, level.shape.height);
  put_u32(bytes, level.shape.width);
  bytes.reserve(bytes.size() + level.data.size() * 4);
  for (float v : level.data) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  write_file(file, bytes);
}

FeatureLevel read_feature_file(const fs::path& file) {
  const std::string bytes = read_file(file);
  const std::string name = file.filename().string();
  if (bytes.size() < 28 || !std::equal(kFeatMagic, kFeatMagic + 8, bytes.begin())) {
    fail(Errc::format, name + ": bad magic");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (get_u32(p + 8) != kFeatVersion) fail(Errc::format, name + ": unsupported version");
  const std::size_t n = get_u32(p + 12);
  FeatureLevel lv{LevelShape{get_u32(p + 16), get_u32(p + 20), get_u32(p + 24)}, {}};
  const std::size_t count = n * lv.shape.numel();
  if (bytes.size() != 28 + count * 4) {
    invalid(ValidationCode::level_shape_mismatch,
            name + ": payload holds " + std::to_string((bytes.size() - 28) / 4) + " floats, header implies " +
                std::to_string(count));
  }
  lv.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) lv.data[i] = std::bit_cast<float>(get_u32(p + 28 + 4 * i));
  return lv;
}

void save_dataset(const ZslDataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  const auto& f = ds.features;
  json meta;
  meta["format_version"] = kFormatVersion;
  meta["n_images"] = f.n_images;
  meta["n_classes"] = ds.n_classes();
  meta["n_attributes"] = ds.n_attributes();
  meta["n_levels"] = f.levels.size();
  meta["ref_level"] = f.ref_level;
  json shapes = json::array();
  for (const auto& lv : f.levels) shapes.push_back({lv.shape.channels, lv.shape.height, lv.shape.width});
  meta["level_shapes"] = shapes;
  meta["attribute_names"] = ds.semantics.attribute_names;
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  for (std::size_t l = 0; l < f.levels.size(); ++l) {
    write_feature_file(dir / ("level_" + std::to_string(l) + ".feat"), f.levels[l], f.n_images);
  }

  std::string csv;
  for (std::size_t a = 0; a < ds.n_attributes(); ++a) {
    if (a) csv += ',';
    csv += ds.semantics.attribute_names[a];
  }
  csv += '\n';
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    for (std::size_t a = 0; a < ds.n_attributes(); ++a) {
      if (a) csv += ',';
      csv += format_decimal(ds.semantics.z.at(c, a));
    }
    csv += '\n';
  }
  write_file(dir / "class_attrs.csv", csv);

  json splits;
  splits["seen_classes"] = ds.split.seen_classes;
  splits["unseen_classes"] = ds.split.unseen_classes;
  splits["labels"] = ds.labels;
  splits["train_ids"] = ds.split.train_ids;
  splits["test_seen_ids"] = ds.split.test_seen_ids;
  splits["test_unseen_ids"] = ds.split.test_unseen_ids;
  write_file(dir / "splits.json", splits.dump() + "\n");
}

ZslDataset load_dataset(const fs::path& dir) {
  const fs::path meta_file = dir / "meta.json";
  const json meta = parse_json_file(meta_file);
  if (field<int>(meta, "format_version", meta_file) != kFormatVersion) {
    fail(Errc::format, "meta.json: unsupported format_version");
  }
  ZslDataset ds;
  const auto n_images = field<std::size_t>(meta, "n_images", meta_file);
  const auto n_classes = field<std::size_t>(meta, "n_classes", meta_file);
  const auto n_attributes = field<std::size_t>(meta, "n_attributes", meta_file);
  const auto n_levels = field<std::size_t>(meta, "n_levels", meta_file);
  const auto shapes = field<std::vector<std::vector<std::uint32_t>>>(meta, "level_shapes", meta_file);
  ds.features.ref_level = field<std::size_t>(meta, "ref_level", meta_file);
  ds.features.n_images = n_images;
  ds.semantics.attribute_names = field<std::vector<std::string>>(meta, "attribute_names", meta_file);
  if (shapes.size() != n_levels) {
    invalid(ValidationCode::level_shape_mismatch, "meta.json: level_shapes has " + std::to_string(shapes.size()) +
                                                      " entries, n_levels is " + std::to_string(n_levels));
  }

  for (std::size_t l = 0; l < n_levels; ++l) {
    const std::string name = "level_" + std::to_string(l) + ".feat";
    FeatureLevel lv = read_feature_file(dir / name);
    const auto& s = shapes[l];
    if (s.size() != 3 || LevelShape{s[0], s[1], s[2]} != lv.shape ||
        lv.data.size() != n_images * lv.shape.numel()) {
      invalid(ValidationCode::level_shape_mismatch, name + ": header disagrees with meta.json (level " +
                                                        std::to_string(l) + ")");
    }
    ds.features.levels.push_back(std::move(lv));
  }

  const fs::path csv_file = dir / "class_attrs.csv";
  std::istringstream csv(read_file(csv_file));
  std::string line;
  std::getline(csv, line);  // header
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        fail(Errc::format, "class_attrs.csv: row " + std::to_string(row) + " has a non-numeric cell");
      }
      values.push_back(v);
      ++cols;
    }
    if (cols != n_attributes) {
      invalid(ValidationCode::level_shape_mismatch, "class_attrs.csv: row " + std::to_string(row) + " has " +
                                                        std::to_string(cols) + " values");
    }
    ++row;
  }
  if (row != n_classes) {
    invalid(ValidationCode::class_out_of_range,
            "class_attrs.csv has " + std::to_string(row) + " rows, meta.json says " + std::to_string(n_classes));
  }
  if (n_attributes == 0) invalid(ValidationCode::no_attributes, "meta.json: n_attributes is 0");
  ds.semantics.z = Tensor({n_classes, n_attributes}, std::move(values));

  const fs::path split_file = dir / "splits.json";
  const json sp = parse_json_file(split_file);
  ds.labels = field<std::vector<ClassId>>(sp, "labels", split_file);
  ds.split.seen_classes = field<std::vector<ClassId>>(sp, "seen_classes", split_file);
  ds.split.unseen_classes = field<std::vector<ClassId>>(sp, "unseen_classes", split_file);
  ds.split.train_ids = field<std::vector<ImageId>>(sp, "train_ids", split_file);
  ds.split.test_seen_ids = field<std::vector<ImageId>>(sp, "test_seen_ids", split_file);
  ds.split.test_unseen_ids = field<std::vector<ImageId>>(sp, "test_unseen_ids", split_file);

  validate(ds);
  return ds;
}

std::vector<std::vector<ImageId>> batch_iter(std::span<const ImageId> ids, std::size_t batch_size,
                                             std::uint64_t seed, int epoch) {
  if (ids.empty()) fail(Errc::empty_input, "batch_iter over an empty id list");
  if (batch_size == 0) fail(Errc::config, "batch size must be at least 1");
  std::vector<ImageId> order(ids.begin(), ids.end());
  // Stream ids >= 1000 are reserved for epoch shuffles.
  Rng rng = Rng::stream(seed, 1000 + static_cast<std::uint64_t>(epoch));
  rng.shuffle(order);
  std::vector<std::vector<ImageId>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace drmn
