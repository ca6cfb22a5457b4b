#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stancecred {

struct TensorInfo {
  std::string dtype;
  std::vector<std::int64_t> shape;
  std::uint64_t begin = 0;  // offsets into the data section
  std::uint64_t end = 0;
};

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;  // row-major
};

/// Reader/writer for the safetensors container (u64 little-endian header
/// length, JSON header, raw tensor bytes). F32, F64, F16 and BF16 tensors are
/// exposed as float; writing always emits F32.
class SafeTensors {
 public:
  static SafeTensors load(const std::string& path);

  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  const TensorInfo& info(const std::string& name) const;

  /// Rank-2 tensor as a matrix (file row-major order preserved); rank-1 as
  /// a 1 x n matrix. Higher ranks are rejected.
  Eigen::MatrixXf matrix(const std::string& name) const;
  Eigen::VectorXf vector(const std::string& name) const;

  static void write(const std::string& path, const std::vector<NamedTensor>& tensors);

 private:
  std::map<std::string, TensorInfo> tensors_;
  std::string data_;  // data section bytes
};

}  // namespace stancecred
