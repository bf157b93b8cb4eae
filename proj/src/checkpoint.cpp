// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>

#include "dembed/encoder.hpp"
#include "dembed/error.hpp"
#include "dembed/storage.hpp"

namespace dembed::encoder {

namespace {

constexpr std::string_view kAlphaName = "lora.alpha";
constexpr std::string_view kDropoutName = "lora.dropout";

void put_tensor(std::string& out, std::string_view name, const std::vector<std::size_t>& shape,
                std::span<const double> values) {
  storage::put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.append(name);
  storage::put_u8(out, static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) storage::put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : values) storage::put_f32(out, static_cast<float>(v));
}

}  // namespace

std::string serialize_checkpoint(const EncoderParams& params) {
  validate(params);
  std::string out = "CEMB";
  storage::put_u32(out, kCheckpointVersion);
  storage::put_u32(out, static_cast<std::uint32_t>(tensor_names().size() + 2));
  params.for_each_tensor([&](std::string_view name, const Tensor& t) {
    put_tensor(out, name, t.shape, t.data);
  });
  const double alpha = params.lora_alpha;
  const double dropout = params.lora_dropout;
  put_tensor(out, kAlphaName, {}, {&alpha, 1});
  put_tensor(out, kDropoutName, {}, {&dropout, 1});
  return out;
}

EncoderParams parse_checkpoint(std::string_view bytes) {
  storage::ByteReader r(bytes);
  if (!r.has(4) || r.take(4) != "CEMB") throw Error(Errc::bad_magic, "not a CEMB checkpoint");
  if (!r.has(4)) throw Error(Errc::shape_mismatch, "truncated checkpoint header");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(Errc::version_mismatch, "checkpoint version " + std::to_string(version) +
                                            ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto count = r.u32();
  std::map<std::string, Tensor, std::less<>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.u16();
    std::string name(r.take(name_len));
    const auto rank = r.u8();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u32();
    Tensor t;
    t.shape = shape;
    const std::size_t n = Tensor::element_count(shape);
    if (!r.has(n * sizeof(float))) throw Error(Errc::shape_mismatch, "truncated tensor " + name);
    t.data.resize(n);
    for (auto& v : t.data) v = r.f32();
    if (!tensors.emplace(std::move(name), std::move(t)).second) {
      throw Error(Errc::shape_mismatch, "duplicate tensor in checkpoint");
    }
  }
  if (r.remaining() != 0) throw Error(Errc::shape_mismatch, "trailing bytes after tensors");

  EncoderParams p;
  p.for_each_tensor([&](std::string_view name, Tensor& t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw Error(Errc::shape_mismatch, "checkpoint lacks tensor " + std::string(name));
    }
    t = std::move(it->second);
    tensors.erase(it);
  });
  auto scalar = [&](std::string_view name) {
    auto it = tensors.find(name);
    if (it == tensors.end() || !it->second.shape.empty()) {
      throw Error(Errc::shape_mismatch, "checkpoint lacks scalar " + std::string(name));
    }
    const double v = it->second.data[0];
    tensors.erase(it);
    return v;
  };
  p.lora_alpha = scalar(kAlphaName);
  p.lora_dropout = scalar(kDropoutName);
  if (!tensors.empty()) {
    throw Error(Errc::shape_mismatch, "unexpected tensor " + tensors.begin()->first);
  }
  validate(p);
  return p;
}

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path) {
  storage::write_atomic(path, serialize_checkpoint(params));
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(storage::read_file(path));
}

}  // namespace dembed::encoder
