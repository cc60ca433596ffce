#include "cloze/lm/safetensors.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

#include "cloze/error.hpp"

namespace cloze::lm {

struct SafeTensors::Mapping {
  const unsigned char* data = nullptr;
  std::size_t size = 0;

  Mapping(const Mapping&) = delete;
  Mapping& operator=(const Mapping&) = delete;
  Mapping(const unsigned char* d, std::size_t s) : data(d), size(s) {}
  ~Mapping() {
    if (data != nullptr) munmap(const_cast<unsigned char*>(data), size);
  }
};

std::int64_t TensorInfo::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000) << 16;
  std::uint32_t exponent = (h >> 10) & 0x1F;
  std::uint32_t mantissa = h & 0x3FF;
  std::uint32_t bits;
  if (exponent == 0) {
    if (mantissa == 0) {
      bits = sign;
    } else {  // subnormal: renormalize
      exponent = 127 - 15 + 1;
      while ((mantissa & 0x400) == 0) {
        mantissa <<= 1;
        --exponent;
      }
      mantissa &= 0x3FF;
      bits = sign | (exponent << 23) | (mantissa << 13);
    }
  } else if (exponent == 0x1F) {
    bits = sign | 0x7F800000 | (mantissa << 13);
  } else {
    bits = sign | ((exponent + 127 - 15) << 23) | (mantissa << 13);
  }
  return std::bit_cast<float>(bits);
}

float bfloat16_to_float(std::uint16_t h) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16);
}

namespace {

DType parse_dtype(const std::string& s) {
  if (s == "F32") return DType::kF32;
  if (s == "F16") return DType::kF16;
  if (s == "BF16") return DType::kBF16;
  if (s == "F64") return DType::kF64;
  throw ParseError("safetensors: unsupported dtype " + s);
}

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::kF16:
    case DType::kBF16:
      return 2;
    case DType::kF32:
      return 4;
    case DType::kF64:
      return 8;
  }
  return 0;
}

}  // namespace

SafeTensors SafeTensors::open(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw BackendUnavailable("cannot open " + path.string());
  struct stat st {};
  if (fstat(fd, &st) != 0 || st.st_size < 8) {
    ::close(fd);
    throw ParseError("safetensors: " + path.string() + " is too small");
  }
  const auto size = static_cast<std::size_t>(st.st_size);
  void* addr = mmap(nullptr, size, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (addr == MAP_FAILED) throw BackendUnavailable("cannot map " + path.string());

  SafeTensors out;
  out.mapping_ = std::make_shared<const Mapping>(static_cast<const unsigned char*>(addr), size);
  const unsigned char* bytes = out.mapping_->data;

  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | bytes[i];
  if (header_len > size - 8) throw ParseError("safetensors: header exceeds file size");
  out.data_offset_ = 8 + header_len;

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes + 8, bytes + 8 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("safetensors header: ") + e.what());
  }
  for (const auto& [name, entry] : header.items()) {
    if (name == "__metadata__") continue;
    TensorInfo ti;
    ti.dtype = parse_dtype(entry.at("dtype").get<std::string>());
    ti.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = entry.at("data_offsets").get<std::vector<std::size_t>>();
    ti.begin = offsets.at(0);
    ti.end = offsets.at(1);
    if (ti.end < ti.begin || out.data_offset_ + ti.end > size ||
        ti.end - ti.begin != static_cast<std::size_t>(ti.numel()) * dtype_size(ti.dtype)) {
      throw ParseError("safetensors: bad offsets for tensor " + name);
    }
    out.tensors_.emplace(name, std::move(ti));
  }
  return out;
}

bool SafeTensors::contains(std::string_view name) const {
  return tensors_.find(name) != tensors_.end();
}

const TensorInfo& SafeTensors::info(std::string_view name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ParseError("safetensors: missing tensor " + std::string(name));
  return it->second;
}

std::vector<std::string> SafeTensors::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::vector<float> SafeTensors::values(std::string_view name) const {
  const auto& ti = info(name);
  const unsigned char* p = mapping_->data + data_offset_ + ti.begin;
  const auto n = static_cast<std::size_t>(ti.numel());
  std::vector<float> out(n);
  // safetensors data is little-endian; so is every platform we build on.
  switch (ti.dtype) {
    case DType::kF32:
      std::memcpy(out.data(), p, n * 4);
      break;
    case DType::kF64:
      for (std::size_t i = 0; i < n; ++i) {
        double d;
        std::memcpy(&d, p + 8 * i, 8);
        out[i] = static_cast<float>(d);
      }
      break;
    case DType::kF16:
    case DType::kBF16:
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t h;
        std::memcpy(&h, p + 2 * i, 2);
        out[i] = ti.dtype == DType::kF16 ? half_to_float(h) : bfloat16_to_float(h);
      }
      break;
  }
  return out;
}

void SafeTensors::throw_rank(std::string_view name, int rank) {
  throw ParseError("safetensors: tensor " + std::string(name) + " is not rank " +
                   std::to_string(rank));
}

}  // namespace cloze::lm
