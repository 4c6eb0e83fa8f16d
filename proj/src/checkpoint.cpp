#include "tinyssd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tinyssd {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'D', 'T'};

template <typename U>
void put_le(std::ofstream& f, U value) {
  unsigned char bytes[sizeof(U)];
  for (size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = (unsigned char)((value >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::ifstream& f) {
  unsigned char bytes[sizeof(U)];
  f.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  U value = 0;
  for (size_t i = 0; i < sizeof(U); ++i) value |= U(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  f.write(kMagic, 4);
  put_le<uint32_t>(f, ckpt.version);
  put_le<uint64_t>(f, ckpt.step);
  put_le<uint64_t>(f, ckpt.seed);
  put_le<uint64_t>(f, uint64_t(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    put_le<uint32_t>(f, uint32_t(name.size()));
    f.write(name.data(), std::streamsize(name.size()));
    put_le<uint32_t>(f, uint32_t(tensor.shape.size()));
    for (size_t ext : tensor.shape) put_le<uint64_t>(f, uint64_t(ext));
    for (float v : tensor.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_le<uint32_t>(f, bits);
    }
  }
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  Checkpoint ckpt;
  ckpt.version = get_le<uint32_t>(f);
  if (ckpt.version != 1)
    throw std::runtime_error("checkpoint: unsupported version");
  ckpt.step = get_le<uint64_t>(f);
  ckpt.seed = get_le<uint64_t>(f);
  const uint64_t count = get_le<uint64_t>(f);
  for (uint64_t r = 0; r < count; ++r) {
    const uint32_t name_len = get_le<uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (!f) throw std::runtime_error("checkpoint: truncated record name");
    const uint32_t rank = get_le<uint32_t>(f);
    std::vector<size_t> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = size_t(get_le<uint64_t>(f));
    Tensor<float> tensor(shape);
    for (float& v : tensor.data) {
      const uint32_t bits = get_le<uint32_t>(f);
      std::memcpy(&v, &bits, 4);
    }
    ckpt.tensors.emplace_back(std::move(name), std::move(tensor));
  }
  return ckpt;
}

Checkpoint checkpoint_from(const NetParams<float>& params, uint64_t step,
                           uint64_t seed) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.seed = seed;
  for (const auto& [name, tensor] : named_tensors(params))
    ckpt.tensors.emplace_back(name, *tensor);
  return ckpt;
}

void checkpoint_into(const Checkpoint& ckpt, NetParams<float>& params) {
  auto dst = named_tensors(params);
  for (auto& [name, tensor] : dst) {
    const Tensor<float>* found = nullptr;
    for (const auto& [cname, ctensor] : ckpt.tensors)
      if (cname == name) {
        found = &ctensor;
        break;
      }
    if (!found)
      throw std::runtime_error("checkpoint: missing tensor " + name);
    if (found->shape != tensor->shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    tensor->data = found->data;
  }
}

}  // namespace tinyssd
