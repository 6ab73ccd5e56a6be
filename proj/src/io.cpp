/*
 * Copyright 2026 The hbgmm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hbgmm/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace hbgmm {
namespace {

class Writer {
 public:
  void magic(const char (&tag)[5]) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::byte>(tag[i]));
  }
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::byte> take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
  }
  std::vector<std::byte> out_;
};

class Reader {
 public:
  Reader(std::span<const std::byte> in, const char* what) : in_(in), what_(what) {}

  void magic(const char (&tag)[5]) {
    need(4);
    for (int i = 0; i < 4; ++i) {
      require(in_[pos_ + i] == static_cast<std::byte>(tag[i]), Errc::kFormat,
              std::string(what_) + ": bad magic, expected '" + tag + "'");
    }
    pos_ += 4;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4))); }
  double f64() { return std::bit_cast<double>(le(8)); }

  std::size_t remaining() const { return in_.size() - pos_; }
  void version() {
    const auto v = u16();
    require(v == kFormatVersion, Errc::kFormat,
            std::string(what_) + ": unsupported version " + std::to_string(v));
  }
  void expect_exact(std::size_t bytes) {
    require(remaining() == bytes, Errc::kFormat,
            std::string(what_) + ": payload is " + std::to_string(remaining()) +
                " bytes, header declares " + std::to_string(bytes));
  }

 private:
  void need(std::size_t n) {
    require(remaining() >= n, Errc::kFormat, std::string(what_) + ": truncated");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::byte> in_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(Index v, const char* what) {
  require(v >= 0 && v <= Index(UINT32_MAX), Errc::kShape, std::string(what) + " out of range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::kIo, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), Errc::kIo, "error reading " + path.string());
  std::vector<std::byte> out(raw.size());
  if (!raw.empty()) std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::kIo, "error writing " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

// ---------------------------------------------------------------- FMAP

std::vector<std::byte> encode_feature_map(const FeatureMap& map) {
  require_shape(map.data.rows() == map.pixels() &&
                    map.valid.size() == static_cast<std::size_t>(map.pixels()),
                "feature map buffers do not match H x W");
  Writer w;
  w.reserve(18 + static_cast<std::size_t>(map.data.size()) * 4 + map.valid.size());
  w.magic("FMAP");
  w.u16(kFormatVersion);
  w.u32(checked_u32(map.height, "height"));
  w.u32(checked_u32(map.width, "width"));
  w.u32(checked_u32(map.dim(), "dimension"));
  const float* p = map.data.data();
  for (Index i = 0; i < map.data.size(); ++i) w.f32(p[i]);
  for (auto v : map.valid) w.u8(v ? 1 : 0);
  return w.take();
}

FeatureMap decode_feature_map(std::span<const std::byte> bytes) {
  Reader r(bytes, "FMAP");
  r.magic("FMAP");
  r.version();
  const std::uint64_t h = r.u32(), w = r.u32(), d = r.u32();
  r.expect_exact(h * w * d * 4 + h * w);
  FeatureMap map(static_cast<Index>(h), static_cast<Index>(w), static_cast<Index>(d));
  float* p = map.data.data();
  for (Index i = 0; i < map.data.size(); ++i) p[i] = r.f32();
  for (auto& v : map.valid) {
    v = r.u8();
    require(v <= 1, Errc::kFormat, "FMAP: validity byte is not 0/1");
  }
  return map;
}

// ---------------------------------------------------------------- GMMC

std::vector<std::byte> encode_classifier(const GMMClassifier<double>& model) {
  model.validate();
  Writer w;
  w.magic("GMMC");
  w.u16(kFormatVersion);
  w.u32(checked_u32(model.num_classes(), "C"));
  w.u32(checked_u32(model.components(), "K"));
  w.u32(checked_u32(model.feature_dim(), "D"));
  for (const auto& g : model.classes) {
    for (Index k = 0; k < g.components(); ++k) w.f64(g.weights(k));
    for (Index k = 0; k < g.components(); ++k)
      for (Index d = 0; d < g.dim(); ++d) w.f64(g.means(k, d));
    for (Index k = 0; k < g.components(); ++k)
      for (Index d = 0; d < g.dim(); ++d) w.f64(g.variances(k, d));
  }
  return w.take();
}

GMMClassifier<double> decode_classifier(std::span<const std::byte> bytes) {
  Reader r(bytes, "GMMC");
  r.magic("GMMC");
  r.version();
  const std::uint64_t c = r.u32(), k = r.u32(), d = r.u32();
  require(c >= 1 && k >= 1 && d >= 1, Errc::kFormat, "GMMC: C, K and D must be >= 1");
  r.expect_exact(c * (k + 2 * k * d) * 8);
  GMMClassifier<double> model;
  model.classes.resize(c);
  for (std::size_t ci = 0; ci < c; ++ci) {
    auto& g = model.classes[ci];
    g.class_id = static_cast<int>(ci);
    g.weights.resize(static_cast<Index>(k));
    g.means.resize(static_cast<Index>(k), static_cast<Index>(d));
    g.variances.resize(static_cast<Index>(k), static_cast<Index>(d));
    for (Index i = 0; i < g.weights.size(); ++i) g.weights(i) = r.f64();
    for (Index i = 0; i < g.means.rows(); ++i)
      for (Index j = 0; j < g.means.cols(); ++j) g.means(i, j) = r.f64();
    for (Index i = 0; i < g.variances.rows(); ++i)
      for (Index j = 0; j < g.variances.cols(); ++j) g.variances(i, j) = r.f64();
    require((g.variances.array() > 0.0).all() && (g.weights.array() >= 0.0).all(), Errc::kFormat,
            "GMMC: class " + std::to_string(ci) + " has invalid weights or variances");
  }
  return model;
}

// ---------------------------------------------------------------- NIGB

std::vector<std::byte> encode_bank(const NIGPosteriorBank<double>& bank) {
  bank.validate();
  Writer w;
  w.magic("NIGB");
  w.u16(kFormatVersion);
  w.u32(checked_u32(bank.num_classes(), "C"));
  w.u32(checked_u32(bank.components(), "K"));
  w.u32(checked_u32(bank.feature_dim(), "D"));
  for (Index c = 0; c < bank.num_classes(); ++c)
    for (Index k = 0; k < bank.components(); ++k)
      for (Index d = 0; d < bank.feature_dim(); ++d) {
        const auto p = bank.cell(c, k, d);
        w.f64(p.mu);
        w.f64(p.kappa);
        w.f64(p.alpha);
        w.f64(p.beta);
      }
  for (const auto& wk : bank.weights)
    for (Index k = 0; k < wk.size(); ++k) w.f64(wk(k));
  return w.take();
}

NIGPosteriorBank<double> decode_bank(std::span<const std::byte> bytes) {
  Reader r(bytes, "NIGB");
  r.magic("NIGB");
  r.version();
  const std::uint64_t c = r.u32(), k = r.u32(), d = r.u32();
  require(c >= 1 && k >= 1 && d >= 1, Errc::kFormat, "NIGB: C, K and D must be >= 1");
  r.expect_exact((c * k * d * 4 + c * k) * 8);
  NIGPosteriorBank<double> bank;
  bank.resize(static_cast<Index>(c), static_cast<Index>(k), static_cast<Index>(d));
  for (Index ci = 0; ci < bank.num_classes(); ++ci)
    for (Index ki = 0; ki < bank.components(); ++ki)
      for (Index di = 0; di < bank.feature_dim(); ++di) {
        NIGParams<double> p;
        p.mu = r.f64();
        p.kappa = r.f64();
        p.alpha = r.f64();
        p.beta = r.f64();
        bank.set_cell(ci, ki, di, p);
      }
  for (auto& wk : bank.weights)
    for (Index ki = 0; ki < wk.size(); ++ki) wk(ki) = r.f64();
  try {
    bank.validate();
  } catch (const Error& e) {
    throw Error(Errc::kFormat, std::string("NIGB: ") + e.what());
  }
  return bank;
}

// ---------------------------------------------------------------- grids

FeatureMap label_grid(std::span<const int> labels, Index height, Index width,
                      std::span<const std::uint8_t> valid) {
  require_shape(labels.size() == static_cast<std::size_t>(height * width),
                "label grid does not match H x W");
  require_shape(valid.empty() || valid.size() == labels.size(), "validity mask has wrong size");
  FeatureMap g(height, width, 1);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    g.data(static_cast<Index>(p), 0) = static_cast<float>(labels[p]);
    g.valid[p] = valid.empty() ? 1 : (valid[p] ? 1 : 0);
  }
  return g;
}

std::vector<int> grid_labels(const FeatureMap& grid) {
  require_shape(grid.dim() == 1, "label grid must have D = 1");
  std::vector<int> out(static_cast<std::size_t>(grid.pixels()));
  for (Index p = 0; p < grid.pixels(); ++p) {
    const float v = grid.data(p, 0);
    require(std::isfinite(v) && v == std::round(v), Errc::kFormat,
            "label grid holds a non-integer value");
    out[static_cast<std::size_t>(p)] = static_cast<int>(v);
  }
  return out;
}

FeatureMap scalar_grid(std::span<const float> values, Index height, Index width,
                       std::span<const std::uint8_t> valid) {
  require_shape(values.size() == static_cast<std::size_t>(height * width) &&
                    valid.size() == values.size(),
                "scalar grid does not match H x W");
  FeatureMap g(height, width, 1);
  for (std::size_t p = 0; p < values.size(); ++p) {
    g.data(static_cast<Index>(p), 0) = values[p];
    g.valid[p] = valid[p] ? 1 : 0;
  }
  return g;
}

}  // namespace hbgmm
