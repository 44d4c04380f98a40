#include "liwuda/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"

namespace liwuda::data {
namespace {

using Rng = std::mt19937_64;

// Cluster means at pairwise distance >= min_sep, drawn on a sphere whose radius
// grows until rejection sampling succeeds.
std::vector<std::vector<double>> place_means(std::size_t count, std::size_t dim, double min_sep,
                                             Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double radius = min_sep;
  std::vector<std::vector<double>> means;
  std::size_t failures = 0;
  while (means.size() < count) {
    std::vector<double> m(dim);
    double norm = 0.0;
    for (double& v : m) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : m) v *= radius / norm;
    const bool ok = std::all_of(means.begin(), means.end(), [&](const auto& other) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d2 += (m[k] - other[k]) * (m[k] - other[k]);
      return d2 >= min_sep * min_sep;
    });
    if (ok) {
      means.push_back(std::move(m));
      failures = 0;
    } else if (++failures == 200) {
      radius *= 1.25;
      failures = 0;
    }
  }
  return means;
}

// Balanced labels over `classes`, then shuffled.
std::vector<int> balanced_labels(std::span<const int> classes, std::size_t n, Rng& rng) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = classes[i % classes.size()];
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

void check_split(UdaSetting setting, const LabelSplit& s) {
  if (s.n_common < 1) throw ConfigError("split: at least one common class is required");
  switch (setting) {
    case UdaSetting::kPDA:
      if (s.n_target_private != 0) throw ConfigError("split: PDA requires n_target_private = 0");
      break;
    case UdaSetting::kOSDA:
      if (s.n_source_private != 0) throw ConfigError("split: OSDA requires n_source_private = 0");
      break;
    case UdaSetting::kCSDA:
      if (s.n_source_private != 0 || s.n_target_private != 0)
        throw ConfigError("split: CSDA requires no private classes");
      break;
    case UdaSetting::kUniDA:
      break;
  }
}

std::string_view to_string(DomainRole role) {
  return role == DomainRole::kSource ? "source" : "target";
}

DatasetPair generate_pair(const LabelSplit& split, const ShiftSpec& shift, std::size_t n_source,
                          std::size_t n_target, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("generate_pair: dim must be at least 2");
  if (split.n_common < 1) throw ConfigError("generate_pair: at least one common class required");
  if (!(shift.spread > 0.0)) throw ConfigError("generate_pair: spread must be positive");
  if (shift.noise_std < 0.0) throw ConfigError("generate_pair: noise_std must be >= 0");
  if (shift.translation.size() > dim)
    throw ConfigError("generate_pair: translation longer than dim");
  if (n_source < split.source_classes())
    throw ConfigError("generate_pair: fewer source samples than source classes");
  const std::size_t target_classes = split.n_common + split.n_target_private;
  if (n_target < target_classes)
    throw ConfigError("generate_pair: fewer target samples than target classes");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto means = place_means(split.total_classes(), dim, 6.0 * shift.spread, rng);

  std::vector<int> source_classes(split.source_classes());
  for (std::size_t c = 0; c < source_classes.size(); ++c) source_classes[c] = static_cast<int>(c);
  std::vector<int> target_classes_list;
  for (std::size_t c = 0; c < split.n_common; ++c) target_classes_list.push_back(static_cast<int>(c));
  for (std::size_t c = 0; c < split.n_target_private; ++c)
    target_classes_list.push_back(static_cast<int>(split.source_classes() + c));

  auto sample = [&](int cls, std::span<double> out) {
    const auto& mu = means[static_cast<std::size_t>(cls)];
    for (std::size_t k = 0; k < dim; ++k) out[k] = mu[k] + shift.spread * normal(rng);
  };

  DatasetPair pair;
  pair.source.role = DomainRole::kSource;
  pair.target.role = DomainRole::kTarget;
  pair.source.split = pair.target.split = split;
  pair.source.seed = pair.target.seed = seed;

  pair.source.labels = balanced_labels(source_classes, n_source, rng);
  pair.source.features = Matrix(n_source, dim);
  for (std::size_t i = 0; i < n_source; ++i) sample(pair.source.labels[i], pair.source.features.row(i));

  const auto target_true = balanced_labels(target_classes_list, n_target, rng);
  pair.target.features = Matrix(n_target, dim);
  pair.target.labels.resize(n_target);
  const double c = std::cos(shift.rotation);
  const double s = std::sin(shift.rotation);
  for (std::size_t i = 0; i < n_target; ++i) {
    auto x = pair.target.features.row(i);
    sample(target_true[i], x);
    const double x0 = x[0];
    const double x1 = x[1];
    x[0] = c * x0 - s * x1;
    x[1] = s * x0 + c * x1;
    for (std::size_t k = 0; k < shift.translation.size(); ++k) x[k] += shift.translation[k];
    if (shift.noise_std > 0.0)
      for (double& v : x) v += shift.noise_std * normal(rng);
    const bool is_private = static_cast<std::size_t>(target_true[i]) >= split.source_classes();
    pair.target.labels[i] = is_private ? kUnknownLabel : target_true[i];
  }
  return pair;
}

void write_dataset(std::ostream& out, const DomainDataset& d) {
  if (d.labels.size() != d.features.rows()) throw ShapeError("dataset: one label per sample");
  out << "liwuda-dataset 1\n"
      << "role " << to_string(d.role) << '\n'
      << "dim " << d.dim() << '\n'
      << "split " << d.split.n_common << ' ' << d.split.n_source_private << ' '
      << d.split.n_target_private << '\n'
      << "seed " << d.seed << '\n'
      << "samples " << d.size() << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << d.labels[i];
    for (double v : d.features.row(i)) out << '\t' << io::format_double(v);
    out << '\n';
  }
}

namespace {

class DatasetReader {
 public:
  explicit DatasetReader(std::istream& in) : in_(in) {}

  std::vector<std::string_view> header(std::string_view key, std::size_t values) {
    auto toks = fields(' ');
    if (toks.size() != values + 1 || toks[0] != key)
      fail("expected '" + std::string(key) + "' with " + std::to_string(values) + " value(s)");
    toks.erase(toks.begin());
    return toks;
  }

  std::vector<std::string_view> fields(char delim) {
    if (!std::getline(in_, line_)) fail("unexpected end of file");
    ++line_no_;
    if (in_.eof()) fail("missing line terminator");
    return io::split(line_, delim);
  }

  std::size_t count(std::string_view token) {
    const auto v = io::parse_int(token, where());
    if (v < 0) fail("count must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

  std::string where() const { return "dataset line " + std::to_string(line_no_); }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(where() + ": " + what); }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace

DomainDataset read_dataset(std::istream& in) {
  DatasetReader r(in);
  auto magic = r.fields(' ');
  if (magic.size() != 2 || magic[0] != "liwuda-dataset") r.fail("not a liwuda dataset file");
  if (magic[1] != "1")
    throw UnsupportedVersionError(r.where() + ": unsupported dataset version '" +
                                  std::string(magic[1]) + "'");
  DomainDataset d;
  const auto role = r.header("role", 1)[0];
  if (role == "source")
    d.role = DomainRole::kSource;
  else if (role == "target")
    d.role = DomainRole::kTarget;
  else
    r.fail("role must be 'source' or 'target'");
  const std::size_t dim = r.count(r.header("dim", 1)[0]);
  if (dim == 0) r.fail("dim must be positive");
  const auto split = r.header("split", 3);
  d.split = {r.count(split[0]), r.count(split[1]), r.count(split[2])};
  if (d.split.n_common == 0) r.fail("split needs at least one common class");
  const auto seed = r.header("seed", 1)[0];
  {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), v);
    if (seed.empty() || ec != std::errc() || ptr != seed.data() + seed.size())
      r.fail("seed must be an unsigned integer");
    d.seed = v;
  }
  const std::size_t n = r.count(r.header("samples", 1)[0]);

  const auto classes = static_cast<long long>(d.split.total_classes());
  d.features = Matrix(n, dim);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto toks = r.fields('\t');
    if (toks.size() != dim + 1)
      r.fail("expected label and " + std::to_string(dim) + " values, found " +
             std::to_string(toks.size()) + " fields");
    const auto label = io::parse_int(toks[0], r.where() + " field 1");
    if (label >= classes || label < kUnknownLabel)
      r.fail("label " + std::to_string(label) + " outside [-1, " + std::to_string(classes) + ")");
    if (label == kUnknownLabel && d.role == DomainRole::kSource)
      r.fail("source samples must be labeled");
    d.labels[i] = static_cast<int>(label);
    for (std::size_t k = 0; k < dim; ++k)
      d.features(i, k) = io::parse_double(toks[k + 1], r.where() + " field " + std::to_string(k + 2));
  }
  if (!r.at_eof()) {
    r.fields('\t');
    r.fail("trailing content after the declared samples");
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const DomainDataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  io::write_file_atomic(path, out.str());
}

DomainDataset load_dataset(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  return read_dataset(in);
}

}  // namespace liwuda::data
