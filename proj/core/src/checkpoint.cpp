#include "liwuda/checkpoint.hpp"

#include <sstream>
#include <string>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"

namespace liwuda::nn {
namespace {

constexpr std::string_view kMagic = "liwuda-checkpoint";
constexpr int kVersion = 1;

void write_network(std::ostream& out, std::string_view name, const NetworkParams& net) {
  out << "network " << name << '\n' << "layers " << net.layers.size() << '\n';
  for (const auto& layer : net.layers) {
    out << "layer " << layer.in_dim() << ' ' << layer.out_dim() << ' '
        << to_string(layer.activation) << '\n';
    for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
      auto r = layer.weight.row(i);
      for (std::size_t j = 0; j < r.size(); ++j)
        out << (j ? " " : "") << io::format_double(r[j]);
      out << '\n';
    }
    for (std::size_t j = 0; j < layer.bias.size(); ++j)
      out << (j ? " " : "") << io::format_double(layer.bias[j]);
    out << '\n';
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string_view> tokens(std::size_t expected = 0) {
    if (!std::getline(in_, line_)) fail("unexpected end of file");
    ++line_no_;
    auto toks = io::split(line_, ' ');
    if (expected && toks.size() != expected)
      fail("expected " + std::to_string(expected) + " fields, found " +
           std::to_string(toks.size()));
    return toks;
  }

  void expect(std::string_view token, std::string_view want) {
    if (token != want) fail("expected '" + std::string(want) + "', found '" + std::string(token) + "'");
  }

  std::string where() const { return "checkpoint line " + std::to_string(line_no_); }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(where() + ": " + what); }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

NetworkParams read_network(LineReader& reader, std::string_view name) {
  auto head = reader.tokens(2);
  reader.expect(head[0], "network");
  reader.expect(head[1], name);
  auto count = reader.tokens(2);
  reader.expect(count[0], "layers");
  const auto n_layers = io::parse_int(count[1], reader.where());
  if (n_layers <= 0) reader.fail("layer count must be positive");

  NetworkParams net;
  for (long long k = 0; k < n_layers; ++k) {
    auto spec = reader.tokens(4);
    reader.expect(spec[0], "layer");
    const auto in_dim = io::parse_int(spec[1], reader.where());
    const auto out_dim = io::parse_int(spec[2], reader.where());
    if (in_dim <= 0 || out_dim <= 0) reader.fail("layer dimensions must be positive");
    Activation act;
    try {
      act = parse_activation(spec[3]);
    } catch (const InputError& e) {
      reader.fail(e.what());
    }
    DenseLayer layer{Matrix(static_cast<std::size_t>(in_dim), static_cast<std::size_t>(out_dim)),
                     std::vector<double>(static_cast<std::size_t>(out_dim)), act};
    for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
      auto toks = reader.tokens(layer.weight.cols());
      for (std::size_t j = 0; j < toks.size(); ++j)
        layer.weight(i, j) = io::parse_double(toks[j], reader.where());
    }
    auto bias = reader.tokens(layer.bias.size());
    for (std::size_t j = 0; j < bias.size(); ++j)
      layer.bias[j] = io::parse_double(bias[j], reader.where());
    net.layers.push_back(std::move(layer));
  }
  try {
    net.validate();
  } catch (const ShapeError& e) {
    reader.fail(std::string("network ") + std::string(name) + ": " + e.what());
  }
  return net;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  out << kMagic << ' ' << kVersion << '\n';
  write_network(out, "feature", model.feature);
  write_network(out, "classifier", model.classifier);
  write_network(out, "weight", model.weight);
  out << "end\n";
}

Model read_model(std::istream& in) {
  LineReader reader(in);
  auto magic = reader.tokens(2);
  reader.expect(magic[0], kMagic);
  if (io::parse_int(magic[1], reader.where()) != kVersion)
    throw UnsupportedVersionError(reader.where() + ": unsupported checkpoint version " +
                                  std::string(magic[1]));
  Model model;
  model.feature = read_network(reader, "feature");
  model.classifier = read_network(reader, "classifier");
  model.weight = read_network(reader, "weight");
  auto end = reader.tokens(1);
  reader.expect(end[0], "end");
  if (model.classifier.input_dim() != model.feature.output_dim() ||
      model.weight.input_dim() != model.feature.output_dim())
    throw ParseError("checkpoint: heads do not match the feature dimension");
  if (model.weight.output_dim() != 1 ||
      model.weight.layers.back().activation != Activation::kSigmoid)
    throw ParseError("checkpoint: weight network must end in a single sigmoid unit");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ostringstream out;
  write_model(out, model);
  io::write_file_atomic(path, out.str());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  return read_model(in);
}

}  // namespace liwuda::nn
