#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "kgalign/error.hpp"
#include "kgalign/model.hpp"

namespace kgalign {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'A', 'E', 'M', 'B', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                  static_cast<char>((v >> 16) & 0xff),
                                  static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error("model file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(model.dims.input_dim));
  put_u32(out, static_cast<std::uint32_t>(model.dims.dim));
  put_u32(out, static_cast<std::uint32_t>(model.dims.relation_vocab));
  put_u32(out, static_cast<std::uint32_t>(model.dims.attribute_vocab));
  for (const auto& t : model.tensors()) {
    put_u32(out, static_cast<std::uint32_t>(t.value->rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value->cols()));
    for (Eigen::Index i = 0; i < t.value->size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.value->data()[i])));
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(path.string() + ": not a model file");
  }
  if (get_u32(in) != kVersion) throw Error(path.string() + ": unsupported model version");
  EmbeddingModel model;
  model.dims.input_dim = get_u32(in);
  model.dims.dim = get_u32(in);
  model.dims.relation_vocab = get_u32(in);
  model.dims.attribute_vocab = get_u32(in);
  const std::size_t in_dim = model.dims.input_dim, d = model.dims.dim;
  const std::array<std::pair<std::size_t, std::size_t>, 12> shapes{{
      {in_dim, d}, {d, d}, {d, d},
      {model.dims.relation_vocab, d}, {1, d},
      {model.dims.attribute_vocab, d}, {1, d},
      {in_dim, d}, {1, d},
      {in_dim, d}, {1, d},
      {1, kModalities},
  }};
  auto tensors = model.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    auto& t = tensors[k];
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    if (rows != shapes[k].first || cols != shapes[k].second) {
      throw Error(path.string() + ": tensor " + std::string(t.name) + " has shape " +
                  std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                  std::to_string(shapes[k].first) + "x" + std::to_string(shapes[k].second));
    }
    t.value->resize(rows, cols);
    for (Eigen::Index i = 0; i < t.value->size(); ++i) {
      t.value->data()[i] = static_cast<double>(std::bit_cast<float>(get_u32(in)));
    }
  }
  return model;
}

}  // namespace kgalign
