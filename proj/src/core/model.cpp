#include "core/model.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace pico {

namespace {

template <class T>
T identity(ReduceOp op) {
  switch (op) {
    case ReduceOp::sum: return T{0};
    case ReduceOp::max: return std::numeric_limits<T>::lowest();
    case ReduceOp::min: break;
  }
  return std::numeric_limits<T>::max();
}

}  // namespace

std::string_view to_string(CollectiveKind kind) {
  switch (kind) {
    case CollectiveKind::allreduce: return "allreduce";
    case CollectiveKind::reduce_scatter: return "reduce_scatter";
    case CollectiveKind::allgather: return "allgather";
    case CollectiveKind::alltoall: break;
  }
  return "alltoall";
}

std::string_view to_string(DataType type) {
  switch (type) {
    case DataType::int32: return "int32";
    case DataType::int64: return "int64";
    case DataType::float32: return "float32";
    case DataType::float64: break;
  }
  return "float64";
}

std::string_view to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::sum: return "sum";
    case ReduceOp::max: return "max";
    case ReduceOp::min: break;
  }
  return "min";
}

std::optional<CollectiveKind> parse_collective(std::string_view text) {
  for (auto k : kAllCollectives)
    if (to_string(k) == text) return k;
  if (text == "reducescatter" || text == "reduce-scatter") return CollectiveKind::reduce_scatter;
  return std::nullopt;
}

std::optional<DataType> parse_datatype(std::string_view text) {
  for (auto t : {DataType::int32, DataType::int64, DataType::float32, DataType::float64})
    if (to_string(t) == text) return t;
  return std::nullopt;
}

std::optional<ReduceOp> parse_reduce_op(std::string_view text) {
  for (auto op : {ReduceOp::sum, ReduceOp::max, ReduceOp::min})
    if (to_string(op) == text) return op;
  return std::nullopt;
}

double Buffer::at(std::size_t i) const {
  return dispatch(type_, [&](auto tag) { return static_cast<double>(as<decltype(tag)>()[i]); });
}

void Buffer::set(std::size_t i, double value) {
  dispatch(type_, [&](auto tag) {
    using T = decltype(tag);
    as<T>()[i] = static_cast<T>(value);
  });
}

void reduce_into(std::span<std::byte> acc, std::span<const std::byte> in, DataType type,
                 ReduceOp op) {
  if (acc.size() != in.size())
    fail(Errc::usage, "reduce: length mismatch (" + std::to_string(acc.size()) + " vs " +
                          std::to_string(in.size()) + " bytes)");
  dispatch(type, [&](auto tag) {
    using T = decltype(tag);
    auto* a = reinterpret_cast<T*>(acc.data());
    const auto* b = reinterpret_cast<const T*>(in.data());
    const std::size_t n = acc.size() / sizeof(T);
    switch (op) {
      case ReduceOp::sum:
        for (std::size_t i = 0; i < n; ++i) a[i] = a[i] + b[i];
        break;
      case ReduceOp::max:
        for (std::size_t i = 0; i < n; ++i) a[i] = std::max(a[i], b[i]);
        break;
      case ReduceOp::min:
        for (std::size_t i = 0; i < n; ++i) a[i] = std::min(a[i], b[i]);
        break;
    }
  });
}

Buffer reduce_elementwise(const Buffer& a, const Buffer& b, ReduceOp op) {
  if (a.type() != b.type()) fail(Errc::usage, "reduce: datatype mismatch");
  if (a.size() != b.size())
    fail(Errc::usage, "reduce: length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  Buffer out = a;
  reduce_into(out.bytes(), b.bytes(), a.type(), op);
  return out;
}

Buffer identity_buffer(DataType type, std::size_t elements, ReduceOp op) {
  Buffer out(type, elements);
  dispatch(type, [&](auto tag) {
    using T = decltype(tag);
    std::ranges::fill(out.as<T>(), identity<T>(op));
  });
  return out;
}

std::vector<RankVector> naive_oracle(CollectiveKind kind, const std::vector<RankVector>& inputs,
                                     ReduceOp op) {
  const std::size_t p = inputs.size();
  if (p == 0) fail(Errc::usage, "oracle: no ranks");
  const DataType type = inputs.front().data.type();
  const std::size_t n = inputs.front().data.size();
  for (const auto& in : inputs) {
    if (in.data.type() != type) fail(Errc::usage, "oracle: mixed datatypes");
    if (in.data.size() != n) fail(Errc::usage, "oracle: unequal input lengths");
  }
  if ((kind == CollectiveKind::reduce_scatter || kind == CollectiveKind::alltoall) && n % p != 0)
    fail(Errc::usage, "oracle: " + std::string(to_string(kind)) + " needs the element count (" +
                          std::to_string(n) + ") divisible by p=" + std::to_string(p));

  const std::size_t w = width(type);
  std::vector<RankVector> out(p);
  for (std::size_t r = 0; r < p; ++r) out[r].rank = static_cast<int>(r);

  switch (kind) {
    case CollectiveKind::allreduce:
    case CollectiveKind::reduce_scatter: {
      Buffer total = inputs[0].data;
      for (std::size_t r = 1; r < p; ++r) reduce_into(total.bytes(), inputs[r].data.bytes(), type, op);
      if (kind == CollectiveKind::allreduce) {
        for (auto& o : out) o.data = total;
      } else {
        const std::size_t block = n / p;
        for (std::size_t r = 0; r < p; ++r) {
          out[r].data = Buffer(type, block);
          std::memcpy(out[r].data.bytes().data(), total.bytes().data() + r * block * w, block * w);
        }
      }
      break;
    }
    case CollectiveKind::allgather:
      for (auto& o : out) {
        o.data = Buffer(type, n * p);
        for (std::size_t s = 0; s < p; ++s)
          std::memcpy(o.data.bytes().data() + s * n * w, inputs[s].data.bytes().data(), n * w);
      }
      break;
    case CollectiveKind::alltoall: {
      const std::size_t block = n / p;
      for (std::size_t r = 0; r < p; ++r) {
        out[r].data = Buffer(type, n);
        for (std::size_t s = 0; s < p; ++s)
          std::memcpy(out[r].data.bytes().data() + s * block * w,
                      inputs[s].data.bytes().data() + r * block * w, block * w);
      }
      break;
    }
  }
  return out;
}

}  // namespace pico
