#include "invaug/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "invaug/format.hpp"
#include "invaug/rng.hpp"

namespace invaug {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_spec(const SyntheticSpec& spec) {
  if (spec.n_train < 1 || spec.n_test < 1)
    throw std::invalid_argument("dataset spec: n_train and n_test must be >= 1");
  if (spec.noise_sigma < 0.0)
    throw std::invalid_argument("dataset spec: noise_sigma must be >= 0");
  if (spec.n_classes < 1)
    throw std::invalid_argument("dataset spec: n_classes must be >= 1");
  if (spec.n_train < spec.n_classes)
    throw std::invalid_argument(
        "dataset spec: n_train must cover every class at least once");
}

}  // namespace

int rings_label(std::span<const double> x, int n_classes) {
  if (x.size() != 2) throw std::invalid_argument("rings_label: x must be 2-D");
  const double r = std::hypot(x[0], x[1]);
  // Band boundaries sit halfway between the generating radii 1..K.
  const long band = std::lround(r);
  return static_cast<int>(std::clamp<long>(band, 1, n_classes)) - 1;
}

int wedges_label(std::span<const double> x, int n_classes) {
  if (x.size() != 2) throw std::invalid_argument("wedges_label: x must be 2-D");
  double angle = std::atan2(x[1], x[0]);
  if (angle < 0.0) angle += kTwoPi;
  const double sector_width = kTwoPi / n_classes;
  const int sector = static_cast<int>(angle / sector_width);
  return std::min(sector, n_classes - 1);
}

Dataset make_rings(const SyntheticSpec& spec) {
  if (spec.kind != SyntheticKind::Rings)
    throw std::invalid_argument("make_rings: spec.kind must be rings");
  check_spec(spec);

  const int n = spec.n_train + spec.n_test;
  Dataset ds;
  ds.d = 2;
  ds.n_classes = spec.n_classes;
  ds.name = "rings";
  ds.samples.reserve(n);

  Rng rng(spec.seed);
  for (int i = 0; i < n; ++i) {
    const int label = i % spec.n_classes;  // round-robin keeps classes present
    const double radius = static_cast<double>(label + 1);
    const double angle = rng.uniform(0.0, kTwoPi);
    Sample s;
    s.x = {radius * std::cos(angle), radius * std::sin(angle)};
    s.y = label;
    s.x[0] += spec.noise_sigma * rng.normal();
    s.x[1] += spec.noise_sigma * rng.normal();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset make_wedges(const SyntheticSpec& spec) {
  if (spec.kind != SyntheticKind::Wedges)
    throw std::invalid_argument("make_wedges: spec.kind must be wedges");
  check_spec(spec);

  const int n = spec.n_train + spec.n_test;
  const double sector_width = kTwoPi / spec.n_classes;
  Dataset ds;
  ds.d = 2;
  ds.n_classes = spec.n_classes;
  ds.name = "wedges";
  ds.samples.reserve(n);

  Rng rng(spec.seed);
  for (int i = 0; i < n; ++i) {
    const int label = i % spec.n_classes;
    const double angle = (label + rng.next_double()) * sector_width;
    const double radius = rng.uniform(0.5, 2.0);
    Sample s;
    s.x = {radius * std::cos(angle), radius * std::sin(angle)};
    s.y = label;
    s.x[0] += spec.noise_sigma * rng.normal();
    s.x[1] += spec.noise_sigma * rng.normal();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::pair<Dataset, Dataset> make_dataset_pair(const SyntheticSpec& spec) {
  const Dataset full = spec.kind == SyntheticKind::Rings ? make_rings(spec)
                                                         : make_wedges(spec);
  Dataset train{{}, full.d, full.n_classes, full.name + "_train"};
  Dataset test{{}, full.d, full.n_classes, full.name + "_test"};
  train.samples.assign(full.samples.begin(), full.samples.begin() + spec.n_train);
  test.samples.assign(full.samples.begin() + spec.n_train, full.samples.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds,
                                  std::pair<double, double> fractions,
                                  std::uint64_t seed) {
  const auto [f1, f2] = fractions;
  if (f1 <= 0.0 || f2 <= 0.0)
    throw std::invalid_argument("split: fractions must be positive");
  if (std::abs(f1 + f2 - 1.0) > 1e-9)
    throw std::invalid_argument("split: fractions must sum to 1");
  if (ds.samples.empty()) throw std::invalid_argument("split: empty dataset");

  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.next_below(i + 1)]);

  const auto n1 = static_cast<std::size_t>(std::llround(f1 * n));
  Dataset a{{}, ds.d, ds.n_classes, ds.name + "_a"};
  Dataset b{{}, ds.d, ds.n_classes, ds.name + "_b"};
  for (std::size_t i = 0; i < n; ++i)
    (i < n1 ? a : b).samples.push_back(ds.samples[order[i]]);

  const Dataset& larger = a.samples.size() >= b.samples.size() ? a : b;
  std::vector<bool> present(ds.n_classes, false);
  for (const Sample& s : larger.samples) present[s.y] = true;
  for (int k = 0; k < ds.n_classes; ++k)
    if (!present[k])
      throw std::invalid_argument("split: class " + std::to_string(k) +
                                  " missing from the training part");
  return {std::move(a), std::move(b)};
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (int j = 0; j < ds.d; ++j) out << 'x' << j << ',';
  out << "y\n";
  for (const Sample& s : ds.samples) {
    for (double v : s.x) out << fmt_double(v) << ',';
    out << s.y << '\n';
  }
}

Dataset read_csv(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty csv: " + path.string());

  int d = 0;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) {
      if (col == "y") break;
      ++d;
    }
  }
  if (d < 1) throw std::runtime_error("csv header has no feature columns");

  Dataset ds;
  ds.d = d;
  ds.name = std::move(name);
  int max_label = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Sample s;
    for (int j = 0; j < d; ++j) {
      if (!std::getline(row, cell, ','))
        throw std::runtime_error("csv row too short");
      s.x.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell, ','))
      throw std::runtime_error("csv row missing label");
    s.y = std::stoi(cell);
    max_label = std::max(max_label, s.y);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("csv has no data rows");
  ds.n_classes = max_label + 1;
  return ds;
}

}  // namespace invaug
