#pragma once

// Collective vocabulary: kinds, element types, reduction operators, typed
// rank buffers, and the textbook reference results every algorithm is
// checked against.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "core/error.hpp"

namespace pico {

enum class CollectiveKind { allreduce, reduce_scatter, allgather, alltoall };
enum class DataType { int32, int64, float32, float64 };
enum class ReduceOp { sum, max, min };

inline constexpr CollectiveKind kAllCollectives[] = {
    CollectiveKind::allreduce, CollectiveKind::reduce_scatter, CollectiveKind::allgather,
    CollectiveKind::alltoall};

std::string_view to_string(CollectiveKind kind);
std::string_view to_string(DataType type);
std::string_view to_string(ReduceOp op);
std::optional<CollectiveKind> parse_collective(std::string_view text);
std::optional<DataType> parse_datatype(std::string_view text);
std::optional<ReduceOp> parse_reduce_op(std::string_view text);

constexpr std::size_t width(DataType type) {
  return (type == DataType::int32 || type == DataType::float32) ? 4 : 8;
}

constexpr bool is_floating(DataType type) {
  return type == DataType::float32 || type == DataType::float64;
}

// Calls f with a value-initialized element of the C++ type behind `type`.
template <class F>
decltype(auto) dispatch(DataType type, F&& f) {
  switch (type) {
    case DataType::int32: return f(std::int32_t{});
    case DataType::int64: return f(std::int64_t{});
    case DataType::float32: return f(float{});
    case DataType::float64: break;
  }
  return f(double{});
}

// Contiguous element storage tagged with its DataType.
class Buffer {
 public:
  Buffer() = default;
  Buffer(DataType type, std::size_t elements) : type_(type), bytes_(elements * width(type)) {}

  template <class T>
  static Buffer of(DataType type, std::initializer_list<T> values) {
    Buffer b(type, values.size());
    std::size_t i = 0;
    dispatch(type, [&](auto tag) {
      using E = decltype(tag);
      for (T v : values) b.as<E>()[i++] = static_cast<E>(v);
    });
    return b;
  }

  DataType type() const { return type_; }
  std::size_t size() const { return bytes_.size() / width(type_); }
  std::size_t size_bytes() const { return bytes_.size(); }
  std::span<std::byte> bytes() { return bytes_; }
  std::span<const std::byte> bytes() const { return bytes_; }

  template <class T>
  std::span<T> as() {
    return {reinterpret_cast<T*>(bytes_.data()), bytes_.size() / sizeof(T)};
  }
  template <class T>
  std::span<const T> as() const {
    return {reinterpret_cast<const T*>(bytes_.data()), bytes_.size() / sizeof(T)};
  }

  // Element i widened to double; convenient for reports and tests.
  double at(std::size_t i) const;
  void set(std::size_t i, double value);

  friend bool operator==(const Buffer& a, const Buffer& b) {
    return a.type_ == b.type_ && a.bytes_ == b.bytes_;
  }

 private:
  DataType type_ = DataType::int32;
  std::vector<std::byte> bytes_;
};

struct RankVector {
  int rank = 0;
  Buffer data;

  friend bool operator==(const RankVector&, const RankVector&) = default;
};

// acc[i] = op(acc[i], in[i]) over raw element storage of `type`.
void reduce_into(std::span<std::byte> acc, std::span<const std::byte> in, DataType type,
                 ReduceOp op);

Buffer reduce_elementwise(const Buffer& a, const Buffer& b, ReduceOp op);

// Buffer of `elements` copies of the identity of `op` for `type`.
Buffer identity_buffer(DataType type, std::size_t elements, ReduceOp op);

// Reference semantics with reductions applied in rank order 0..p-1.
// Allgather takes per-rank contributions and returns their concatenation;
// every other kind takes full-length vectors.
std::vector<RankVector> naive_oracle(CollectiveKind kind, const std::vector<RankVector>& inputs,
                                     ReduceOp op);

}  // namespace pico
