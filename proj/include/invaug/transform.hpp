#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "invaug/rng.hpp"

namespace invaug {

// The transformation set is finite by construction: each operation kind is
// either parameter-free or discretized into `levels_per_op` magnitude levels.
enum class TransformKind {
  Identity,
  Rotate,      // planar rotation, magnitude in degrees
  Scale,       // isotropic scaling
  ReflectX,    // negates the first coordinate
  ReflectY,    // negates the second coordinate
  TranslateX,  // offset added to the first coordinate
  TranslateY,  // offset added to the second coordinate
};

bool kind_has_magnitude(TransformKind kind);

// [lo, hi] magnitude range for kinds that carry one. Rotate spans the wide
// [-135, 135] degree range; scale and translation ranges are in feature
// units.
std::pair<double, double> kind_magnitude_range(TransformKind kind);

std::string kind_name(TransformKind kind);
TransformKind kind_from_name(const std::string& name);

// One element g of the transformation set: an operation kind plus a discrete
// magnitude level. `magnitude` is the resolved level value (0 for
// parameter-free kinds); it is filled in by the owning TransformSpace.
struct Transform {
  TransformKind kind = TransformKind::Identity;
  int level = 0;
  double magnitude = 0.0;

  bool operator==(const Transform& other) const {
    return kind == other.kind && level == other.level;
  }
};

// Finite transformation space: a list of kinds with a shared level count.
// Cardinality = sum over kinds of (1 if parameter-free else levels_per_op).
class TransformSpace {
 public:
  TransformSpace(std::vector<TransformKind> kinds, int levels_per_op = 30);

  static TransformSpace from_names(const std::vector<std::string>& names,
                                   int levels_per_op = 30);

  const std::vector<TransformKind>& kinds() const { return kinds_; }
  int levels_per_op() const { return levels_; }
  bool include_identity() const;

  std::size_t size() const { return elements_.size(); }

  // Element at canonical index i (kinds in declaration order, levels
  // ascending).
  const Transform& element(std::size_t i) const;

  // Canonical index of (kind, level); throws if the pair is not in the
  // space.
  std::size_t index_of(const Transform& g) const;

  // Affine level -> magnitude map: level 0 -> lo, level L-1 -> hi.
  double magnitude_of(TransformKind kind, int level) const;

 private:
  std::vector<TransformKind> kinds_;
  int levels_;
  std::vector<Transform> elements_;
  std::vector<std::size_t> kind_offsets_;
};

// Applies g to a 2-D feature vector.
std::vector<double> apply(const Transform& g, std::span<const double> x);

// Every (kind, level) pair exactly once, in canonical order.
std::vector<Transform> enumerate(const TransformSpace& space);

// Uniform draw over the space; consumes one bounded-integer draw.
Transform uniform_sample(const TransformSpace& space, Rng& rng);

// Counting measure of the discrete space: its cardinality as a real.
double measure(const TransformSpace& space);

}  // namespace invaug
