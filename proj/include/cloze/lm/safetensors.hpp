#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cloze::lm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

enum class DType { kF32, kF16, kBF16, kF64 };

struct TensorInfo {
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
  std::size_t begin = 0;  // byte offsets into the data section
  std::size_t end = 0;

  std::int64_t numel() const;
};

float half_to_float(std::uint16_t h);
float bfloat16_to_float(std::uint16_t h);

/// Read-only view of a .safetensors file (memory-mapped).
class SafeTensors {
 public:
  static SafeTensors open(const std::filesystem::path& path);

  bool contains(std::string_view name) const;
  const TensorInfo& info(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Tensor values converted to float, row-major.
  std::vector<float> values(std::string_view name) const;

  /// 2-D tensor as an Eigen matrix with the on-disk (row-major) shape.
  template <typename Scalar>
  Matrix<Scalar> matrix(std::string_view name) const {
    const auto& ti = info(name);
    if (ti.shape.size() != 2) throw_rank(name, 2);
    const auto v = values(name);
    using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(v.data(), ti.shape[0], ti.shape[1]).template cast<Scalar>();
  }

  template <typename Scalar>
  Vector<Scalar> vector(std::string_view name) const {
    const auto& ti = info(name);
    if (ti.shape.size() != 1) throw_rank(name, 1);
    const auto v = values(name);
    return Eigen::Map<const Eigen::VectorXf>(v.data(), ti.shape[0]).template cast<Scalar>();
  }

 private:
  struct Mapping;

  [[noreturn]] static void throw_rank(std::string_view name, int rank);

  std::shared_ptr<const Mapping> mapping_;
  std::size_t data_offset_ = 0;
  std::map<std::string, TensorInfo, std::less<>> tensors_;
};

}  // namespace cloze::lm
