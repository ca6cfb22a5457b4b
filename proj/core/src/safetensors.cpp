#include "stancecred/safetensors.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

namespace {

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1f;
  const std::uint32_t mant = h & 0x3ff;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      // subnormal: normalize
      int e = -1;
      std::uint32_t m = mant;
      do {
        ++e;
        m <<= 1;
      } while ((m & 0x400) == 0);
      bits = sign | ((127 - 15 - e) << 23) | ((m & 0x3ff) << 13);
    }
  } else if (exp == 0x1f) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  float out;
  std::memcpy(&out, &bits, sizeof(out));
  return out;
}

float bf16_to_float(std::uint16_t h) {
  const std::uint32_t bits = static_cast<std::uint32_t>(h) << 16;
  float out;
  std::memcpy(&out, &bits, sizeof(out));
  return out;
}

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return n;
}

std::vector<float> decode(const TensorInfo& ti, const std::string& data) {
  if (ti.end > data.size() || ti.begin > ti.end)
    throw LoadError("safetensors: tensor offsets out of range");
  const char* p = data.data() + ti.begin;
  const std::uint64_t bytes = ti.end - ti.begin;
  const std::int64_t n = element_count(ti.shape);
  std::vector<float> out(static_cast<std::size_t>(n));
  if (ti.dtype == "F32") {
    if (bytes != static_cast<std::uint64_t>(n) * 4) throw LoadError("safetensors: F32 size mismatch");
    std::memcpy(out.data(), p, bytes);
  } else if (ti.dtype == "F64") {
    if (bytes != static_cast<std::uint64_t>(n) * 8) throw LoadError("safetensors: F64 size mismatch");
    for (std::int64_t i = 0; i < n; ++i) {
      double d;
      std::memcpy(&d, p + i * 8, 8);
      out[static_cast<std::size_t>(i)] = static_cast<float>(d);
    }
  } else if (ti.dtype == "F16" || ti.dtype == "BF16") {
    if (bytes != static_cast<std::uint64_t>(n) * 2) throw LoadError("safetensors: F16 size mismatch");
    for (std::int64_t i = 0; i < n; ++i) {
      std::uint16_t h;
      std::memcpy(&h, p + i * 2, 2);
      out[static_cast<std::size_t>(i)] = ti.dtype == "F16" ? half_to_float(h) : bf16_to_float(h);
    }
  } else {
    throw LoadError("safetensors: unsupported dtype " + ti.dtype);
  }
  return out;
}

}  // namespace

SafeTensors SafeTensors::load(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() < 8) throw LoadError("safetensors: file too short: " + path);
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, raw.data(), 8);
  if (8 + header_len > raw.size())
    throw LoadError("safetensors: header length exceeds file size: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("safetensors: malformed JSON header: " + std::string(e.what()));
  }

  SafeTensors st;
  st.data_ = raw.substr(8 + header_len);
  for (auto it = header.begin(); it != header.end(); ++it) {
    if (it.key() == "__metadata__") continue;
    TensorInfo ti;
    ti.dtype = it.value().at("dtype").get<std::string>();
    ti.shape = it.value().at("shape").get<std::vector<std::int64_t>>();
    const auto& off = it.value().at("data_offsets");
    ti.begin = off.at(0).get<std::uint64_t>();
    ti.end = off.at(1).get<std::uint64_t>();
    if (ti.begin > ti.end || ti.end > st.data_.size())
      throw LoadError("safetensors: offsets of tensor " + it.key() +
                      " fall outside the data section: " + path);
    st.tensors_.emplace(it.key(), std::move(ti));
  }
  return st;
}

bool SafeTensors::contains(const std::string& name) const {
  return tensors_.count(name) != 0;
}

std::vector<std::string> SafeTensors::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, ti] : tensors_) out.push_back(name);
  return out;
}

const TensorInfo& SafeTensors::info(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw LoadError("safetensors: missing tensor " + name);
  return it->second;
}

Eigen::MatrixXf SafeTensors::matrix(const std::string& name) const {
  const TensorInfo& ti = info(name);
  std::int64_t rows = 1, cols = 1;
  if (ti.shape.size() == 1) {
    cols = ti.shape[0];
  } else if (ti.shape.size() == 2) {
    rows = ti.shape[0];
    cols = ti.shape[1];
  } else {
    throw LoadError("safetensors: tensor " + name + " has rank > 2");
  }
  std::vector<float> flat = decode(ti, data_);
  Eigen::MatrixXf out(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c)
      out(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return out;
}

Eigen::VectorXf SafeTensors::vector(const std::string& name) const {
  const TensorInfo& ti = info(name);
  if (ti.shape.size() != 1)
    throw LoadError("safetensors: tensor " + name + " is not rank-1");
  std::vector<float> flat = decode(ti, data_);
  return Eigen::Map<Eigen::VectorXf>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void SafeTensors::write(const std::string& path, const std::vector<NamedTensor>& tensors) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const NamedTensor& t : tensors) {
    if (element_count(t.shape) != static_cast<std::int64_t>(t.data.size()))
      throw IoError("safetensors: shape/data mismatch for " + t.name);
    const std::uint64_t bytes = t.data.size() * 4;
    header[t.name] = {{"dtype", "F32"},
                      {"shape", t.shape},
                      {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string head = header.dump();
  while (head.size() % 8 != 0) head.push_back(' ');  // keep data section aligned

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  const std::uint64_t header_len = head.size();
  out.write(reinterpret_cast<const char*>(&header_len), 8);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const NamedTensor& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * 4));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace stancecred
