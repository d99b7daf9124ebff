#include "instseg/scene.hpp"

#include <cmath>
#include <stdexcept>

namespace instseg {

namespace {

bool finite3(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

std::vector<Violation> validate_scene(const Scene& scene) {
  std::vector<Violation> out;
  const auto n = static_cast<std::int64_t>(scene.n_points());
  const int n_classes = scene.n_classes();
  const int n_instances = scene.gt.n_instances();

  for (std::int64_t i = 0; i < n; ++i) {
    if (!finite3(scene.cloud.coords[static_cast<std::size_t>(i)]))
      out.push_back({"coords", i, "non-finite coordinate"});
  }

  if (scene.cloud.has_colors()) {
    if (static_cast<std::int64_t>(scene.cloud.colors.size()) != n) {
      out.push_back({"colors", -1, "length differs from point count"});
    } else {
      for (std::int64_t i = 0; i < n; ++i) {
        const Vec3& c = scene.cloud.colors[static_cast<std::size_t>(i)];
        if (!finite3(c) || c.minCoeff() < 0.0 || c.maxCoeff() > 1.0)
          out.push_back({"colors", i, "component outside [0, 1]"});
      }
    }
  }

  if (scene.semantic.scores.rows() != n) {
    out.push_back({"semantic.scores", -1, "row count differs from point count"});
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      double sum = 0.0;
      bool in_range = true;
      for (int j = 0; j < n_classes; ++j) {
        const double s = scene.semantic.scores(i, j);
        if (!(s >= 0.0 && s <= 1.0)) in_range = false;
        sum += s;
      }
      if (!in_range)
        out.push_back({"semantic.scores", i, "entry outside [0, 1]"});
      else if (std::abs(sum - 1.0) > 1e-6)
        out.push_back({"semantic.scores", i, "row does not sum to 1"});
    }
  }

  if (static_cast<std::int64_t>(scene.offset.size()) != n) {
    out.push_back({"offsets", -1, "length differs from point count"});
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      if (!finite3(scene.offset.offsets[static_cast<std::size_t>(i)]))
        out.push_back({"offsets", i, "non-finite offset"});
    }
  }

  if (static_cast<std::int64_t>(scene.gt.semantic_labels.size()) != n)
    out.push_back({"gt.semantic_labels", -1, "length differs from point count"});
  if (static_cast<std::int64_t>(scene.gt.instance_ids.size()) != n)
    out.push_back({"gt.instance_ids", -1, "length differs from point count"});
  if (scene.gt.instance_centers.size() != scene.gt.instance_classes.size())
    out.push_back({"gt.instance_centers", -1, "length differs from instance count"});

  const bool labels_sized =
      static_cast<std::int64_t>(scene.gt.semantic_labels.size()) == n &&
      static_cast<std::int64_t>(scene.gt.instance_ids.size()) == n;

  for (int k = 0; k < n_instances; ++k) {
    const std::int32_t cls = scene.gt.instance_classes[static_cast<std::size_t>(k)];
    if (cls < 0 || cls >= n_classes)
      out.push_back({"gt.instance_classes", k, "class out of range"});
  }

  if (labels_sized) {
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int32_t label = scene.gt.semantic_labels[static_cast<std::size_t>(i)];
      const std::int32_t inst = scene.gt.instance_ids[static_cast<std::size_t>(i)];
      if (label < -1 || label >= n_classes)
        out.push_back({"gt.semantic_labels", i, "label out of range"});
      if (inst < -1 || inst >= n_instances)
        out.push_back({"gt.instance_ids", i, "instance id out of range"});
      else if (inst >= 0 &&
               label != scene.gt.instance_classes[static_cast<std::size_t>(inst)])
        out.push_back(
            {"gt.semantic_labels", i,
             "label disagrees with the class of the point's instance"});
    }

    if (scene.gt.instance_centers.size() == scene.gt.instance_classes.size() &&
        n_instances > 0) {
      const std::vector<Vec3> recomputed = compute_instance_centers(
          scene.cloud.coords, scene.gt.instance_ids, n_instances);
      for (int k = 0; k < n_instances; ++k) {
        const Vec3 diff =
            recomputed[static_cast<std::size_t>(k)] -
            scene.gt.instance_centers[static_cast<std::size_t>(k)];
        if (diff.cwiseAbs().maxCoeff() > 1e-6)
          out.push_back({"gt.instance_centers", k,
                         "center is not the mean of the instance's points"});
      }
    }
  }

  return out;
}

std::vector<Vec3> shift_points(std::span<const Vec3> coords,
                               std::span<const Vec3> offsets) {
  if (coords.size() != offsets.size())
    throw std::invalid_argument("shift_points: coords/offsets length mismatch");
  std::vector<Vec3> out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) out[i] = coords[i] + offsets[i];
  return out;
}

std::vector<std::int32_t> hard_labels(const SemanticField& field) {
  const auto n = field.scores.rows();
  const int c = field.n_classes();
  std::vector<std::int32_t> out(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_score = field.scores(i, 0);
    for (int j = 1; j < c; ++j) {
      const double s = field.scores(i, j);
      if (s > best_score) {  // strict: ties keep the lowest class index
        best_score = s;
        best = j;
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<Vec3> compute_instance_centers(
    std::span<const Vec3> coords, std::span<const std::int32_t> instance_ids,
    int n_instances) {
  std::vector<Vec3> sums(static_cast<std::size_t>(n_instances), Vec3::Zero());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_instances), 0);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const std::int32_t k = instance_ids[i];
    if (k < 0) continue;
    sums[static_cast<std::size_t>(k)] += coords[i];
    ++counts[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < n_instances; ++k) {
    if (counts[static_cast<std::size_t>(k)] > 0)
      sums[static_cast<std::size_t>(k)] /=
          static_cast<double>(counts[static_cast<std::size_t>(k)]);
  }
  return sums;
}

std::vector<std::vector<std::int32_t>> instance_point_sets(
    const GroundTruth& gt) {
  std::vector<std::vector<std::int32_t>> sets(
      static_cast<std::size_t>(gt.n_instances()));
  for (std::size_t i = 0; i < gt.instance_ids.size(); ++i) {
    const std::int32_t k = gt.instance_ids[i];
    if (k >= 0)
      sets[static_cast<std::size_t>(k)].push_back(static_cast<std::int32_t>(i));
  }
  return sets;  // ids arrive in increasing order, already sorted
}

OffsetTargets offset_targets(const Scene& scene) {
  OffsetTargets out;
  const std::size_t n = scene.n_points();
  out.targets.assign(n, Vec3::Zero());
  out.foreground.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t k = scene.gt.instance_ids[i];
    if (k < 0) continue;
    out.foreground[i] = 1;
    out.targets[i] =
        scene.gt.instance_centers[static_cast<std::size_t>(k)] -
        scene.cloud.coords[i];
  }
  return out;
}

}  // namespace instseg
