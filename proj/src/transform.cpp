#include "invaug/transform.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace invaug {

namespace {

struct KindInfo {
  TransformKind kind;
  const char* name;
  bool has_magnitude;
  double lo;
  double hi;
};

constexpr std::array<KindInfo, 7> kKindTable = {{
    {TransformKind::Identity, "identity", false, 0.0, 0.0},
    {TransformKind::Rotate, "rotate", true, -135.0, 135.0},
    {TransformKind::Scale, "scale", true, 0.5, 2.0},
    {TransformKind::ReflectX, "reflect_x", false, 0.0, 0.0},
    {TransformKind::ReflectY, "reflect_y", false, 0.0, 0.0},
    {TransformKind::TranslateX, "translate_x", true, -1.0, 1.0},
    {TransformKind::TranslateY, "translate_y", true, -1.0, 1.0},
}};

const KindInfo& info(TransformKind kind) {
  for (const auto& entry : kKindTable) {
    if (entry.kind == kind) return entry;
  }
  throw std::invalid_argument("unknown transform kind");
}

}  // namespace

bool kind_has_magnitude(TransformKind kind) { return info(kind).has_magnitude; }

std::pair<double, double> kind_magnitude_range(TransformKind kind) {
  const KindInfo& entry = info(kind);
  if (!entry.has_magnitude)
    throw std::invalid_argument(std::string(entry.name) +
                                " has no magnitude range");
  return {entry.lo, entry.hi};
}

std::string kind_name(TransformKind kind) { return info(kind).name; }

TransformKind kind_from_name(const std::string& name) {
  for (const auto& entry : kKindTable) {
    if (name == entry.name) return entry.kind;
  }
  throw std::invalid_argument("unknown transform kind: " + name);
}

TransformSpace::TransformSpace(std::vector<TransformKind> kinds,
                               int levels_per_op)
    : kinds_(std::move(kinds)), levels_(levels_per_op) {
  if (kinds_.empty())
    throw std::invalid_argument("transform space must be non-empty");
  if (levels_ < 1)
    throw std::invalid_argument("levels_per_op must be >= 1");
  for (std::size_t i = 0; i < kinds_.size(); ++i)
    for (std::size_t j = i + 1; j < kinds_.size(); ++j)
      if (kinds_[i] == kinds_[j])
        throw std::invalid_argument("duplicate transform kind: " +
                                    kind_name(kinds_[i]));

  for (TransformKind kind : kinds_) {
    kind_offsets_.push_back(elements_.size());
    const int n_levels = kind_has_magnitude(kind) ? levels_ : 1;
    for (int level = 0; level < n_levels; ++level)
      elements_.push_back(Transform{kind, level, magnitude_of(kind, level)});
  }
}

TransformSpace TransformSpace::from_names(const std::vector<std::string>& names,
                                          int levels_per_op) {
  std::vector<TransformKind> kinds;
  kinds.reserve(names.size());
  for (const std::string& name : names) kinds.push_back(kind_from_name(name));
  return TransformSpace(std::move(kinds), levels_per_op);
}

bool TransformSpace::include_identity() const {
  for (TransformKind kind : kinds_)
    if (kind == TransformKind::Identity) return true;
  return false;
}

const Transform& TransformSpace::element(std::size_t i) const {
  if (i >= elements_.size())
    throw std::out_of_range("transform index out of range");
  return elements_[i];
}

std::size_t TransformSpace::index_of(const Transform& g) const {
  for (std::size_t k = 0; k < kinds_.size(); ++k) {
    if (kinds_[k] != g.kind) continue;
    const int n_levels = kind_has_magnitude(g.kind) ? levels_ : 1;
    if (g.level < 0 || g.level >= n_levels)
      throw std::invalid_argument("transform level out of range for " +
                                  kind_name(g.kind));
    return kind_offsets_[k] + static_cast<std::size_t>(g.level);
  }
  throw std::invalid_argument("transform kind not in space: " +
                              kind_name(g.kind));
}

double TransformSpace::magnitude_of(TransformKind kind, int level) const {
  if (!kind_has_magnitude(kind)) return 0.0;
  const auto [lo, hi] = kind_magnitude_range(kind);
  if (levels_ == 1) return lo;
  return lo + (hi - lo) * static_cast<double>(level) /
                  static_cast<double>(levels_ - 1);
}

std::vector<double> apply(const Transform& g, std::span<const double> x) {
  if (x.size() != 2)
    throw std::invalid_argument("apply: feature vector must have dimension 2");
  std::vector<double> out(x.begin(), x.end());
  switch (g.kind) {
    case TransformKind::Identity:
      break;
    case TransformKind::Rotate: {
      const double rad = g.magnitude * std::numbers::pi / 180.0;
      const double c = std::cos(rad);
      const double s = std::sin(rad);
      out[0] = c * x[0] - s * x[1];
      out[1] = s * x[0] + c * x[1];
      break;
    }
    case TransformKind::Scale:
      out[0] = g.magnitude * x[0];
      out[1] = g.magnitude * x[1];
      break;
    case TransformKind::ReflectX:
      out[0] = -x[0];
      break;
    case TransformKind::ReflectY:
      out[1] = -x[1];
      break;
    case TransformKind::TranslateX:
      out[0] = x[0] + g.magnitude;
      break;
    case TransformKind::TranslateY:
      out[1] = x[1] + g.magnitude;
      break;
  }
  return out;
}

std::vector<Transform> enumerate(const TransformSpace& space) {
  std::vector<Transform> all;
  all.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) all.push_back(space.element(i));
  return all;
}

Transform uniform_sample(const TransformSpace& space, Rng& rng) {
  return space.element(rng.next_below(space.size()));
}

double measure(const TransformSpace& space) {
  return static_cast<double>(space.size());
}

}  // namespace invaug
