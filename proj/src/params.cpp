#include "invgcllm/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "invgcllm/rng.hpp"

namespace invgcllm {

ParameterSet ParameterSet::init(std::size_t num_nodes, std::size_t dim, int layers,
                                int mask_layers, std::size_t mlp_hidden,
                                std::uint64_t seed) {
  if (num_nodes == 0 || dim == 0) throw std::invalid_argument("init: empty shape");
  if (mlp_hidden == 0) mlp_hidden = dim;
  ParameterSet p;
  p.dim = dim;
  p.layers = layers;
  p.mask_layers = mask_layers;
  p.seed = seed;

  Rng emb_rng(mix_seed(seed, 0));
  p.embedding = DenseMatrix(num_nodes, dim);
  for (double& v : p.embedding.values) v = emb_rng.normal(0.0, 0.1);

  Rng mask_rng(mix_seed(seed, 1));
  p.mask_embedding = DenseMatrix(num_nodes, dim);
  for (double& v : p.mask_embedding.values) v = mask_rng.normal(0.0, 0.1);

  Rng mlp_rng(mix_seed(seed, 2));
  p.mlp.w1 = DenseMatrix(mlp_hidden, 2 * dim);
  const double s1 = 0.1 / std::sqrt(static_cast<double>(2 * dim));
  for (double& v : p.mlp.w1.values) v = mlp_rng.normal(0.0, s1);
  p.mlp.b1.assign(mlp_hidden, 0.0);
  p.mlp.w2.assign(mlp_hidden, 0.0);
  const double s2 = 0.1 / std::sqrt(static_cast<double>(mlp_hidden));
  for (double& v : p.mlp.w2) v = mlp_rng.normal(0.0, s2);
  p.mlp.b2 = 0.0;
  return p;
}

std::size_t ParameterSet::flat_size() const {
  return embedding.values.size() + mask_embedding.values.size() + mlp.size();
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> out;
  out.reserve(flat_size());
  out.insert(out.end(), embedding.values.begin(), embedding.values.end());
  out.insert(out.end(), mask_embedding.values.begin(), mask_embedding.values.end());
  out.insert(out.end(), mlp.w1.values.begin(), mlp.w1.values.end());
  out.insert(out.end(), mlp.b1.begin(), mlp.b1.end());
  out.insert(out.end(), mlp.w2.begin(), mlp.w2.end());
  out.push_back(mlp.b2);
  return out;
}

void ParameterSet::unflatten(std::span<const double> flat) {
  if (flat.size() != flat_size())
    throw std::invalid_argument("unflatten: length mismatch");
  std::size_t o = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy(flat.begin() + o, flat.begin() + o + dst.size(), dst.begin());
    o += dst.size();
  };
  take(embedding.values);
  take(mask_embedding.values);
  take(mlp.w1.values);
  take(mlp.b1);
  take(mlp.w2);
  mlp.b2 = flat[o++];
}

std::vector<double> ParameterSet::stage1_flatten() const {
  const std::vector<double> full = flatten();
  return {full.begin() + static_cast<std::ptrdiff_t>(stage1_offset()), full.end()};
}

void ParameterSet::stage1_unflatten(std::span<const double> flat) {
  if (flat.size() != stage1_size())
    throw std::invalid_argument("stage1_unflatten: length mismatch");
  std::vector<double> full = flatten();
  std::copy(flat.begin(), flat.end(), full.begin() + static_cast<std::ptrdiff_t>(stage1_offset()));
  unflatten(full);
}

bool ParameterSet::all_finite() const {
  for (double v : flatten())
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

void write_le_doubles(std::ostream& out, const std::vector<double>& v) {
  static_assert(sizeof(double) == 8);
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

std::vector<double> read_le_doubles(std::istream& in, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw std::runtime_error("checkpoint: truncated payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap64(bits);
    std::memcpy(&v[i], &bits, 8);
  }
  return v;
}

std::int64_t header_field(std::istream& in, const std::string& key) {
  std::string k;
  std::int64_t v;
  if (!(in >> k >> v) || k != key)
    throw std::runtime_error("checkpoint: bad header, expected '" + key + "'");
  return v;
}

}  // namespace

void save_checkpoint(const ParameterSet& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << "invgcllm-checkpoint v1\n"
      << "nodes " << p.num_nodes() << "\n"
      << "dim " << p.dim << "\n"
      << "layers " << p.layers << "\n"
      << "mask_layers " << p.mask_layers << "\n"
      << "mlp_hidden " << p.mlp.hidden() << "\n"
      << "seed " << p.seed << "\n"
      << "count " << p.flat_size() << "\n"
      << "end\n";
  write_le_doubles(out, p.flatten());
}

ParameterSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "invgcllm-checkpoint" || version != "v1")
    throw std::runtime_error("checkpoint: unrecognized header in " + path);
  const auto nodes = static_cast<std::size_t>(header_field(in, "nodes"));
  const auto dim = static_cast<std::size_t>(header_field(in, "dim"));
  const int layers = static_cast<int>(header_field(in, "layers"));
  const int mask_layers = static_cast<int>(header_field(in, "mask_layers"));
  const auto hidden = static_cast<std::size_t>(header_field(in, "mlp_hidden"));
  const auto seed = static_cast<std::uint64_t>(header_field(in, "seed"));
  const auto count = static_cast<std::size_t>(header_field(in, "count"));
  std::string endtok;
  in >> endtok;
  if (endtok != "end") throw std::runtime_error("checkpoint: missing end marker");
  in.get();  // newline before payload

  ParameterSet p;
  p.dim = dim;
  p.layers = layers;
  p.mask_layers = mask_layers;
  p.seed = seed;
  p.embedding = DenseMatrix(nodes, dim);
  p.mask_embedding = DenseMatrix(nodes, dim);
  p.mlp.w1 = DenseMatrix(hidden, 2 * dim);
  p.mlp.b1.assign(hidden, 0.0);
  p.mlp.w2.assign(hidden, 0.0);
  if (count != p.flat_size())
    throw std::runtime_error("checkpoint: count does not match shapes");
  p.unflatten(read_le_doubles(in, count));
  return p;
}

}  // namespace invgcllm
