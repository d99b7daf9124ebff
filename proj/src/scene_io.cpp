#include "instseg/scene_io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace instseg {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need swaps");

namespace {

constexpr std::uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void u8(std::uint8_t v) { raw(&v, sizeof v); }
  void magic(const char m[4]) { buf_.append(m, 4); }

  void vec3_f32(const Vec3& v) {
    f32(static_cast<float>(v.x()));
    f32(static_cast<float>(v.y()));
    f32(static_cast<float>(v.z()));
  }

  const std::string& bytes() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string what)
      : data_(std::move(data)), what_(std::move(what)) {}

  void section(std::string name) { section_ = std::move(name); }

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  float f32() { return get<float>(); }
  double f64() { return get<double>(); }
  std::uint8_t u8() { return get<std::uint8_t>(); }

  Vec3 vec3_f32() {
    const double x = f32(), y = f32(), z = f32();
    return {x, y, z};
  }

  void expect_magic(const char m[4]) {
    if (data_.size() - pos_ < 4 || std::memcmp(data_.data() + pos_, m, 4) != 0)
      throw std::runtime_error(what_ + ": bad magic");
    pos_ += 4;
  }

  void expect_version(std::uint32_t version) {
    section("header");
    const std::uint32_t v = u32();
    if (v != version)
      throw std::runtime_error(what_ + ": unsupported format version " +
                               std::to_string(v));
  }

  void expect_end() const {
    if (pos_ != data_.size())
      throw std::runtime_error(what_ + ": trailing bytes after payload");
  }

 private:
  template <class T>
  T get() {
    if (data_.size() - pos_ < sizeof(T))
      throw std::runtime_error(what_ + ": truncated payload in section '" +
                               section_ + "'");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string data_;
  std::string what_;
  std::string section_ = "header";
  std::size_t pos_ = 0;
};

void write_bytes_atomic(const std::string& bytes,
                        const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void check_sorted_mask(const std::vector<std::int32_t>& ids,
                       const std::string& what) {
  if (ids.empty()) throw std::runtime_error(what + ": empty point list");
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] <= ids[i - 1])
      throw std::runtime_error(what + ": point ids not strictly increasing");
}

// Shortest representation that parses back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

}  // namespace

void write_scene(const Scene& scene, const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("SGSC");
  w.u32(kFormatVersion);
  w.u32(scene.cloud.has_colors() ? 1u : 0u);
  w.u64(scene.n_points());
  w.u32(static_cast<std::uint32_t>(scene.n_classes()));
  w.u32(static_cast<std::uint32_t>(scene.gt.n_instances()));

  for (const Vec3& p : scene.cloud.coords) w.vec3_f32(p);
  for (const Vec3& c : scene.cloud.colors) w.vec3_f32(c);
  for (Eigen::Index i = 0; i < scene.semantic.scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scene.semantic.scores.cols(); ++j)
      w.f32(static_cast<float>(scene.semantic.scores(i, j)));
  for (const Vec3& o : scene.offset.offsets) w.vec3_f32(o);
  for (std::int32_t v : scene.gt.semantic_labels) w.i32(v);
  for (std::int32_t v : scene.gt.instance_ids) w.i32(v);
  for (std::int32_t v : scene.gt.instance_classes) w.i32(v);

  write_bytes_atomic(w.bytes(), path);
}

Scene read_scene(const std::filesystem::path& path) {
  ByteReader r(read_all(path), "scene file " + path.string());
  r.expect_magic("SGSC");
  r.expect_version(kFormatVersion);
  const std::uint32_t flags = r.u32();
  const std::uint64_t n = r.u64();
  const std::uint32_t n_classes = r.u32();
  const std::uint32_t n_instances = r.u32();

  Scene scene;
  r.section("coords");
  scene.cloud.coords.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    scene.cloud.coords.push_back(r.vec3_f32());

  if ((flags & 1u) != 0) {
    r.section("colors");
    scene.cloud.colors.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
      scene.cloud.colors.push_back(r.vec3_f32());
  }

  r.section("semantic scores");
  scene.semantic.scores.resize(static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(n_classes));
  for (Eigen::Index i = 0; i < scene.semantic.scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scene.semantic.scores.cols(); ++j)
      scene.semantic.scores(i, j) = r.f32();

  r.section("offsets");
  scene.offset.offsets.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    scene.offset.offsets.push_back(r.vec3_f32());

  r.section("semantic labels");
  scene.gt.semantic_labels.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::int32_t v = r.i32();
    if (v < -1 || v >= static_cast<std::int32_t>(n_classes))
      throw std::runtime_error("scene file " + path.string() +
                               ": semantic label out of declared range");
    scene.gt.semantic_labels.push_back(v);
  }

  r.section("instance ids");
  scene.gt.instance_ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::int32_t v = r.i32();
    if (v < -1 || v >= static_cast<std::int32_t>(n_instances))
      throw std::runtime_error("scene file " + path.string() +
                               ": instance id out of declared range");
    scene.gt.instance_ids.push_back(v);
  }

  r.section("instance classes");
  scene.gt.instance_classes.reserve(n_instances);
  for (std::uint64_t k = 0; k < n_instances; ++k)
    scene.gt.instance_classes.push_back(r.i32());

  r.expect_end();

  scene.gt.instance_centers = compute_instance_centers(
      scene.cloud.coords, scene.gt.instance_ids,
      static_cast<int>(n_instances));
  return scene;
}

void write_proposals(std::span<const Proposal> proposals,
                     const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("SGPR");
  w.u32(kFormatVersion);
  w.u64(proposals.size());
  for (const Proposal& p : proposals) {
    w.i32(p.source_class);
    w.u64(p.point_ids.size());
    for (std::int32_t id : p.point_ids) w.i32(id);
  }
  write_bytes_atomic(w.bytes(), path);
}

std::vector<Proposal> read_proposals(const std::filesystem::path& path) {
  ByteReader r(read_all(path), "proposal file " + path.string());
  r.expect_magic("SGPR");
  r.expect_version(kFormatVersion);
  const std::uint64_t n = r.u64();
  std::vector<Proposal> out;
  out.reserve(n);
  r.section("proposals");
  for (std::uint64_t k = 0; k < n; ++k) {
    Proposal p;
    p.source_class = r.i32();
    const std::uint64_t count = r.u64();
    p.point_ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) p.point_ids.push_back(r.i32());
    check_sorted_mask(p.point_ids, "proposal file " + path.string());
    out.push_back(std::move(p));
  }
  r.expect_end();
  return out;
}

void write_instances(std::span<const RefinedInstance> instances,
                     const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("SGIN");
  w.u32(kFormatVersion);
  w.u64(instances.size());
  for (const RefinedInstance& ri : instances) {
    w.i32(ri.category);
    w.f64(ri.class_score);
    w.f64(ri.mask_score);
    w.f64(ri.confidence);
    for (int a = 0; a < 3; ++a) w.f64(ri.box.lo(a));
    for (int a = 0; a < 3; ++a) w.f64(ri.box.hi(a));
    w.u64(ri.mask.size());
    for (std::int32_t id : ri.mask) w.i32(id);
  }
  write_bytes_atomic(w.bytes(), path);
}

std::vector<RefinedInstance> read_instances(const std::filesystem::path& path) {
  ByteReader r(read_all(path), "instance file " + path.string());
  r.expect_magic("SGIN");
  r.expect_version(kFormatVersion);
  const std::uint64_t n = r.u64();
  std::vector<RefinedInstance> out;
  out.reserve(n);
  r.section("instances");
  for (std::uint64_t k = 0; k < n; ++k) {
    RefinedInstance ri;
    ri.category = r.i32();
    ri.class_score = r.f64();
    ri.mask_score = r.f64();
    ri.confidence = r.f64();
    for (int a = 0; a < 3; ++a) ri.box.lo(a) = r.f64();
    for (int a = 0; a < 3; ++a) ri.box.hi(a) = r.f64();
    const std::uint64_t count = r.u64();
    ri.mask.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) ri.mask.push_back(r.i32());
    check_sorted_mask(ri.mask, "instance file " + path.string());
    out.push_back(std::move(ri));
  }
  r.expect_end();
  return out;
}

void write_refinement(std::span<const ExternalRefinementRecord> records,
                      const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("SGRF");
  w.u32(kFormatVersion);
  w.u64(records.size());
  for (const ExternalRefinementRecord& rec : records) {
    w.i32(rec.category);
    w.f64(rec.class_score);
    w.f64(rec.mask_score);
    w.u64(rec.mask_flags.size());
    for (std::uint8_t f : rec.mask_flags) w.u8(f);
  }
  write_bytes_atomic(w.bytes(), path);
}

std::vector<RefinedInstance> load_external_refinement(
    const Scene& scene, std::span<const Proposal> proposals,
    const std::filesystem::path& path) {
  const std::string what = "refinement file " + path.string();
  ByteReader r(read_all(path), what);
  r.expect_magic("SGRF");
  r.expect_version(kFormatVersion);
  const std::uint64_t n = r.u64();
  if (n != proposals.size())
    throw std::runtime_error(what + ": record count " + std::to_string(n) +
                             " does not match proposal count " +
                             std::to_string(proposals.size()));

  std::vector<RefinedInstance> out;
  out.reserve(n);
  r.section("records");
  for (std::uint64_t k = 0; k < n; ++k) {
    const Proposal& proposal = proposals[k];
    RefinedInstance ri;
    ri.category = r.i32();
    ri.class_score = r.f64();
    ri.mask_score = r.f64();
    const std::uint64_t n_flags = r.u64();
    std::vector<std::uint8_t> flags(n_flags);
    for (std::uint64_t i = 0; i < n_flags; ++i) flags[i] = r.u8();

    const std::string rec = what + ", record " + std::to_string(k);
    if (ri.category < 0 || ri.category > scene.n_classes())
      throw std::runtime_error(rec + ": category out of range");
    if (!(ri.class_score >= 0.0 && ri.class_score <= 1.0))
      throw std::runtime_error(rec + ": class score outside [0, 1]");
    if (!(ri.mask_score >= 0.0 && ri.mask_score <= 1.0))
      throw std::runtime_error(rec + ": mask score outside [0, 1]");
    if (n_flags != proposal.point_ids.size())
      throw std::runtime_error(rec + ": mask flag count does not match proposal size");

    for (std::size_t i = 0; i < flags.size(); ++i)
      if (flags[i]) ri.mask.push_back(proposal.point_ids[i]);
    if (ri.mask.empty())
      throw std::runtime_error(rec + ": mask selects no proposal points");

    ri.confidence = ri.class_score * ri.mask_score;
    ri.box = extract_box(ri.mask, scene.cloud.coords);
    out.push_back(std::move(ri));
  }
  r.expect_end();
  return out;
}

SynthConfig read_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }

  SynthConfig config;
  config.n_instances = j.value("n_instances", config.n_instances);
  config.n_classes = j.value("n_classes", config.n_classes);
  if (j.contains("points_per_instance")) {
    const auto range = j.at("points_per_instance");
    config.min_points_per_instance = range.at(0).get<int>();
    config.max_points_per_instance = range.at(1).get<int>();
  }
  if (j.contains("instance_extent")) {
    const auto range = j.at("instance_extent");
    config.min_extent = range.at(0).get<double>();
    config.max_extent = range.at(1).get<double>();
  }
  config.min_separation = j.value("min_separation", config.min_separation);
  config.corruption_fraction =
      j.value("corruption_fraction", config.corruption_fraction);
  config.corrupted_true_score =
      j.value("corrupted_true_score", config.corrupted_true_score);
  config.corrupted_wrong_score =
      j.value("corrupted_wrong_score", config.corrupted_wrong_score);
  config.seed = j.value("seed", config.seed);
  config.bandwidth = j.value("bandwidth", config.bandwidth);
  return config;
}

std::string format_report_machine(const EvalReport& report) {
  std::ostringstream out;
  out << "ap\t" << fmt_double(report.ap) << "\n";
  out << "ap50\t" << fmt_double(report.ap50) << "\n";
  out << "ap25\t" << fmt_double(report.ap25) << "\n";
  out << "mcov\t" << fmt_double(report.mcov) << "\n";
  out << "mwcov\t" << fmt_double(report.mwcov) << "\n";
  out << "mprec50\t" << fmt_double(report.mprec50) << "\n";
  out << "mrec50\t" << fmt_double(report.mrec50) << "\n";
  out << "box_ap50\t" << fmt_double(report.box_ap50) << "\n";
  out << "box_ap25\t" << fmt_double(report.box_ap25) << "\n";
  for (const auto& [cls, entry] : report.per_class) {
    out << "class." << cls << ".ap\t" << fmt_double(entry.ap) << "\n";
    out << "class." << cls << ".ap50\t" << fmt_double(entry.ap50) << "\n";
    out << "class." << cls << ".ap25\t" << fmt_double(entry.ap25) << "\n";
  }
  out << "warnings\t" << report.warnings.size() << "\n";
  for (std::size_t i = 0; i < report.warnings.size(); ++i)
    out << "warning." << i << "\t" << report.warnings[i] << "\n";
  return std::move(out).str();
}

std::string format_report_human(const EvalReport& report) {
  char line[160];
  std::ostringstream out;
  out << "instance segmentation report\n";
  std::snprintf(line, sizeof line,
                "  AP      %8.4f   AP50  %8.4f   AP25  %8.4f\n", report.ap,
                report.ap50, report.ap25);
  out << line;
  std::snprintf(line, sizeof line,
                "  mCov    %8.4f   mWCov %8.4f   mPrec50 %6.4f   mRec50 %6.4f\n",
                report.mcov, report.mwcov, report.mprec50, report.mrec50);
  out << line;
  std::snprintf(line, sizeof line, "  boxAP50 %8.4f   boxAP25 %6.4f\n",
                report.box_ap50, report.box_ap25);
  out << line;
  out << "  per class (ap / ap50 / ap25):\n";
  for (const auto& [cls, entry] : report.per_class) {
    std::snprintf(line, sizeof line, "    class %3d  %6.4f / %6.4f / %6.4f\n",
                  cls, entry.ap, entry.ap50, entry.ap25);
    out << line;
  }
  for (const std::string& warning : report.warnings)
    out << "  warning: " << warning << "\n";
  return std::move(out).str();
}

void write_text_atomic(const std::string& text,
                       const std::filesystem::path& path) {
  write_bytes_atomic(text, path);
}

}  // namespace instseg
