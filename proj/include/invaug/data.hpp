#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace invaug {

struct Sample {
  std::vector<double> x;
  int y = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int d = 0;
  int n_classes = 0;
  std::string name;

  std::size_t size() const { return samples.size(); }
};

enum class SyntheticKind { Rings, Wedges };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Rings;
  int n_train = 0;
  int n_test = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  // Number of radial bands (rings) or angular sectors (wedges).
  int n_classes = 3;
};

// Generative label oracles. Labels are assigned from the noise-free point,
// so invariance statements are exact at sigma = 0.
int rings_label(std::span<const double> x, int n_classes);
int wedges_label(std::span<const double> x, int n_classes);

// 2-D points on concentric circles of radii 1..K; labels invariant to any
// rotation about the origin. Produces n_train + n_test samples.
Dataset make_rings(const SyntheticSpec& spec);

// 2-D points in K equal angular sectors; labels invariant to positive
// scaling but not to rotation. Produces n_train + n_test samples.
Dataset make_wedges(const SyntheticSpec& spec);

// Train/test views over the generated dataset: first n_train samples train,
// remaining n_test samples test.
std::pair<Dataset, Dataset> make_dataset_pair(const SyntheticSpec& spec);

// Seeded-shuffle partition into two parts with the given positive fractions
// (must sum to 1). Errors if the larger part would miss a class.
std::pair<Dataset, Dataset> split(const Dataset& ds,
                                  std::pair<double, double> fractions,
                                  std::uint64_t seed);

// CSV with header x0,x1,...,y; values round-trip IEEE-754 doubles exactly.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path, std::string name = "csv");

}  // namespace invaug
