#include "onlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "onlab/csv.hpp"
#include "onlab/error.hpp"
#include "onlab/random.hpp"

namespace onlab {

SyntheticKind parse_synthetic_kind(const std::string& s) {
  if (s == "blobs") return SyntheticKind::Blobs;
  if (s == "moons") return SyntheticKind::Moons;
  if (s == "rings") return SyntheticKind::Rings;
  fail(ErrorKind::InvalidKind, "unknown synthetic dataset kind '" + s + "'");
}

std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::Blobs: return "blobs";
    case SyntheticKind::Moons: return "moons";
    case SyntheticKind::Rings: return "rings";
  }
  return "?";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  fail(ErrorKind::FormatError, "unknown split '" + s + "'");
}

LabeledSet Dataset::subset(Split s) const {
  LabeledSet out;
  for (std::size_t i = 0; i < size(); ++i)
    if (splits[i] == s) {
      out.inputs.push_back(inputs[i]);
      out.labels.push_back(labels[i]);
    }
  return out;
}

void Dataset::validate() const {
  require_dims(labels.size(), inputs.size(), "dataset labels");
  require_dims(splits.size(), inputs.size(), "dataset splits");
  for (std::size_t i = 0; i < size(); ++i) {
    require_dims(inputs[i].size(), dim(), "dataset row");
    if (labels[i] >= classes) fail(ErrorKind::FormatError, "label exceeds class count");
    if (!all_finite(inputs[i])) fail(ErrorKind::FormatError, "non-finite feature");
  }
}

namespace {

// Fixed, seed-independent sign pattern for the fine features of each class.
double feature_sign(std::size_t cls, std::size_t j) {
  return (splitmix64(cls * 1000003ULL + j) >> 63) ? 1.0 : -1.0;
}

Vec coarse_point(const SyntheticParams& s, std::size_t cls, Rng& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pi = std::numbers::pi;
  double a = 0.0, b = 0.0;
  switch (s.kind) {
    case SyntheticKind::Blobs: {
      const double th = 2.0 * pi * static_cast<double>(cls) / static_cast<double>(s.classes);
      a = std::cos(th);
      b = std::sin(th);
      break;
    }
    case SyntheticKind::Moons: {
      const double t = pi * u(rng);
      if (cls == 0) {
        a = std::cos(t);
        b = std::sin(t);
      } else {
        a = 1.0 - std::cos(t);
        b = 0.5 - std::sin(t);
      }
      break;
    }
    case SyntheticKind::Rings: {
      const double t = 2.0 * pi * u(rng);
      const double r = static_cast<double>(cls + 1);
      a = r * std::cos(t);
      b = r * std::sin(t);
      break;
    }
  }
  return {a + s.noise * g(rng), b + s.noise * g(rng)};
}

}  // namespace

Dataset gen_synthetic(const SyntheticParams& s) {
  if (s.n_per_class < 1) fail(ErrorKind::ConfigError, "n_per_class must be >= 1");
  if (s.classes < 2) fail(ErrorKind::ConfigError, "need at least two classes");
  if (s.dim < 2) fail(ErrorKind::ConfigError, "synthetic data needs dim >= 2");
  if (!(s.noise >= 0.0)) fail(ErrorKind::ConfigError, "noise must be >= 0");
  if (s.kind == SyntheticKind::Moons && s.classes != 2)
    fail(ErrorKind::ConfigError, "moons has exactly two classes");

  Rng rng(s.seed);
  std::normal_distribution<double> g;
  Dataset d;
  d.classes = s.classes;
  for (std::size_t c = 0; c < s.classes; ++c) {
    std::vector<Split> tags(s.n_per_class, Split::Test);
    const std::size_t n_train = s.n_per_class * 3 / 5, n_val = s.n_per_class / 5;
    std::fill(tags.begin(), tags.begin() + static_cast<std::ptrdiff_t>(n_train), Split::Train);
    std::fill(tags.begin() + static_cast<std::ptrdiff_t>(n_train),
              tags.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), Split::Val);
    std::shuffle(tags.begin(), tags.end(), rng);
    for (std::size_t i = 0; i < s.n_per_class; ++i) {
      Vec x = coarse_point(s, c, rng);
      for (std::size_t j = 2; j < s.dim; ++j)
        x.push_back(s.feature_offset * feature_sign(c, j) + s.fine_noise_ratio * s.noise * g(rng));
      d.inputs.push_back(std::move(x));
      d.labels.push_back(c);
      d.splits.push_back(tags[i]);
    }
  }
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset out;
  out.classes = d.classes;
  for (std::size_t k : perm) {
    out.inputs.push_back(std::move(d.inputs[k]));
    out.labels.push_back(d.labels[k]);
    out.splits.push_back(d.splits[k]);
  }
  if (s.standardize) standardize(out);
  return out;
}

void standardize(Dataset& d) {
  const std::size_t n = d.dim();
  Vec mean(n, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.splits[i] == Split::Train) {
      axpy(1.0, d.inputs[i], mean);
      ++count;
    }
  if (count == 0) fail(ErrorKind::ConfigError, "cannot standardize without training rows");
  mean = scaled(mean, 1.0 / static_cast<double>(count));
  double var = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.splits[i] == Split::Train) {
      const Vec c = sub(d.inputs[i], mean);
      var += dot(c, c);
    }
  var /= static_cast<double>(count * n);
  const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (Vec& x : d.inputs)
    for (std::size_t j = 0; j < n; ++j) x[j] = (x[j] - mean[j]) * scale;
}

void save_dataset_csv(const Dataset& d, const std::string& path) {
  std::vector<std::string> header{"split", "label"};
  for (std::size_t j = 0; j < d.dim(); ++j) header.push_back("x" + std::to_string(j));
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < d.size(); ++i) {
    w.cell(to_string(d.splits[i])).cell(d.labels[i]);
    for (double v : d.inputs[i]) w.cell(v);
    w.end_row();
  }
  w.close();
}

Dataset load_dataset_csv(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "split" || rows[0][1] != "label")
    fail(ErrorKind::FormatError, path + ": expected header split,label,x0,...");
  const std::size_t n = rows[0].size() - 2;
  Dataset d;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != n + 2) fail(ErrorKind::FormatError, path + ": ragged row " + std::to_string(r));
    try {
      d.splits.push_back(parse_split(rows[r][0]));
      const std::size_t y = std::stoul(rows[r][1]);
      d.labels.push_back(y);
      d.classes = std::max(d.classes, y + 1);
      Vec x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = std::stod(rows[r][j + 2]);
      d.inputs.push_back(std::move(x));
    } catch (const std::logic_error&) {
      fail(ErrorKind::FormatError, path + ": bad value in row " + std::to_string(r));
    }
  }
  d.validate();
  return d;
}

}  // namespace onlab
