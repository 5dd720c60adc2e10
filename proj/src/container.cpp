#include "spect/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "spect/error.hpp"

namespace spect {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'J', '1'};

template <typename T>
void append_le(std::string& out, const T* data, std::size_t n) {
  static_assert(sizeof(T) == 4);
  std::size_t const start = out.size();
  out.resize(start + 4 * n);
  if constexpr (std::endian::native == std::endian::little) {
    if (n) std::memcpy(out.data() + start, data, 4 * n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u;
      std::memcpy(&u, data + i, 4);
      for (int b = 0; b < 4; ++b) out[start + 4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xFF);
    }
  }
}

template <typename T>
void read_le(std::string_view in, T* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    if (n) std::memcpy(data, in.data(), 4 * n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[4 * i + b])) << (8 * b);
      std::memcpy(data + i, &u, 4);
    }
  }
}

const nlohmann::json& need(const nlohmann::json& h, const char* key) {
  if (!h.contains(key)) throw FormatError(std::string("container: header lacks '") + key + "'");
  return h.at(key);
}

void expect_content(const ArrayFile& f, const char* content) {
  if (f.header.value("content", std::string()) != content)
    throw FormatError(std::string("container: expected content '") + content + "'");
}

}  // namespace

std::size_t ArrayFile::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string encode_container(const ArrayFile& file) {
  for (auto d : file.shape)
    if (d < 0) throw std::invalid_argument("container: negative dimension");
  if (!file.axes.empty() && file.axes.size() != file.shape.size())
    throw std::invalid_argument("container: axes length differs from shape rank");
  std::size_t const n = file.element_count();
  std::size_t const have = file.dtype == ArrayFile::DType::F32 ? file.f32.size() : file.i32.size();
  if (have != n) throw std::invalid_argument("container: payload length differs from shape product");

  nlohmann::json h = file.header;
  h["magic"] = "SPJ1";
  h["version"] = kContainerVersion;
  h["dtype"] = file.dtype == ArrayFile::DType::F32 ? "f32" : "i32";
  h["shape"] = file.shape;
  h["axes"] = file.axes;
  if (!h.contains("geometry")) h["geometry"] = nullptr;
  std::string const text = h.dump();

  std::string out(kMagic, 4);
  std::uint32_t const len = static_cast<std::uint32_t>(text.size());
  append_le(out, &len, 1);
  out += text;
  if (file.dtype == ArrayFile::DType::F32)
    append_le(out, file.f32.data(), n);
  else
    append_le(out, file.i32.data(), n);
  return out;
}

ArrayFile decode_container(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("container: bad magic");
  std::uint32_t len = 0;
  read_le(bytes.substr(4, 4), &len, 1);
  if (bytes.size() - 8 < len) throw FormatError("container: truncated header");
  ArrayFile f;
  try {
    f.header = nlohmann::json::parse(bytes.substr(8, len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: malformed header: ") + e.what());
  }
  if (!f.header.is_object()) throw FormatError("container: header is not an object");
  if (need(f.header, "magic") != "SPJ1") throw FormatError("container: header magic mismatch");
  if (need(f.header, "version") != kContainerVersion) throw FormatError("container: unsupported version");
  auto const& dtype = need(f.header, "dtype");
  if (dtype == "f32")
    f.dtype = ArrayFile::DType::F32;
  else if (dtype == "i32")
    f.dtype = ArrayFile::DType::I32;
  else
    throw FormatError("container: unsupported dtype");
  try {
    need(f.header, "shape").get_to(f.shape);
    if (f.header.contains("axes")) f.header.at("axes").get_to(f.axes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: bad shape/axes: ") + e.what());
  }
  for (auto d : f.shape)
    if (d < 0) throw FormatError("container: negative dimension");
  std::size_t const n = f.element_count();
  std::string_view const payload = bytes.substr(8 + len);
  if (payload.size() != 4 * n) throw FormatError("container: payload length does not match shape");
  if (f.dtype == ArrayFile::DType::F32) {
    f.f32.resize(n);
    read_le(payload, f.f32.data(), n);
  } else {
    f.i32.resize(n);
    read_le(payload, f.i32.data(), n);
  }
  return f;
}

void write_container(const std::filesystem::path& path, const ArrayFile& file) {
  std::string const bytes = encode_container(file);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

ArrayFile read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

ArrayFile to_container(const ImageVolume& volume, const std::string& content) {
  ArrayFile f;
  f.header["content"] = "volume";
  f.header["quantity"] = content;
  f.header["voxel_mm"] = volume.voxel_mm;
  f.shape = {volume.nz, volume.ny, volume.nx};
  f.axes = {"z", "y", "x"};
  f.f32 = volume.values;
  return f;
}

ImageVolume volume_from_container(const ArrayFile& f) {
  expect_content(f, "volume");
  if (f.dtype != ArrayFile::DType::F32 || f.shape.size() != 3) throw FormatError("volume: expected rank-3 f32");
  ImageVolume v;
  v.nz = static_cast<int>(f.shape[0]);
  v.ny = static_cast<int>(f.shape[1]);
  v.nx = static_cast<int>(f.shape[2]);
  need(f.header, "voxel_mm").get_to(v.voxel_mm);
  v.values = f.f32;
  return v;
}

ArrayFile to_container(const ProjectionStack& stack) {
  ArrayFile f;
  f.header["content"] = "projections";
  f.header["kind"] = to_string(stack.kind);
  f.header["geometry"] = stack.geometry;
  f.header["views"] = stack.views;
  std::vector<std::string> labels;
  for (int w = 0; w < stack.n_windows; ++w) labels.push_back(w < 3 ? kWindowLabels[w] : "w" + std::to_string(w));
  f.header["window_labels"] = labels;
  f.shape = {stack.n_windows, stack.n_slots(), stack.geometry.det_nv, stack.geometry.det_nu};
  f.axes = {"window", "view", "v", "u"};
  if (stack.kind == ProjectionKind::Sampled) {
    f.dtype = ArrayFile::DType::I32;
    f.i32.resize(stack.data.size());
    for (std::size_t i = 0; i < stack.data.size(); ++i) f.i32[i] = static_cast<std::int32_t>(stack.data[i]);
  } else {
    f.f32 = stack.data;
  }
  return f;
}

ProjectionStack projections_from_container(const ArrayFile& f) {
  expect_content(f, "projections");
  if (f.shape.size() != 4) throw FormatError("projections: expected rank-4 array");
  try {
    ProjectionStack s(need(f.header, "geometry").get<ScanGeometry>(), need(f.header, "views").get<std::vector<int>>(),
                      static_cast<int>(f.shape[0]),
                      projection_kind_from_string(need(f.header, "kind").get<std::string>()));
    if (static_cast<std::int64_t>(s.views.size()) != f.shape[1] || s.geometry.det_nv != f.shape[2] ||
        s.geometry.det_nu != f.shape[3])
      throw FormatError("projections: shape disagrees with geometry");
    if (f.dtype == ArrayFile::DType::F32)
      s.data = f.f32;
    else
      s.data.assign(f.i32.begin(), f.i32.end());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("projections: bad header: ") + e.what());
  }
}

ArrayFile to_container(const std::vector<VoiMask>& masks) {
  ArrayFile f;
  f.dtype = ArrayFile::DType::I32;
  f.header["content"] = "masks";
  f.header["names"] = nlohmann::json::array();
  f.header["roles"] = nlohmann::json::array();
  if (masks.empty()) {
    f.shape = {0, 0, 0, 0};
  } else {
    f.shape = {static_cast<std::int64_t>(masks.size()), masks[0].nz, masks[0].ny, masks[0].nx};
  }
  f.axes = {"mask", "z", "y", "x"};
  for (auto const& m : masks) {
    f.header["names"].push_back(m.name);
    f.header["roles"].push_back(std::string(m.role_name()));
    f.i32.insert(f.i32.end(), m.inside.begin(), m.inside.end());
  }
  return f;
}

std::vector<VoiMask> masks_from_container(const ArrayFile& f) {
  expect_content(f, "masks");
  if (f.dtype != ArrayFile::DType::I32 || f.shape.size() != 4) throw FormatError("masks: expected rank-4 i32");
  auto const names = need(f.header, "names").get<std::vector<std::string>>();
  auto const roles = need(f.header, "roles").get<std::vector<std::string>>();
  if (static_cast<std::int64_t>(names.size()) != f.shape[0] || roles.size() != names.size())
    throw FormatError("masks: name/role count mismatch");
  std::vector<VoiMask> out;
  std::size_t const n = static_cast<std::size_t>(f.shape[1] * f.shape[2] * f.shape[3]);
  for (std::size_t k = 0; k < names.size(); ++k) {
    VoiMask m;
    m.name = names[k];
    m.role = roles[k] == "background" ? VoiMask::Role::Background : VoiMask::Role::Sphere;
    m.nz = static_cast<int>(f.shape[1]);
    m.ny = static_cast<int>(f.shape[2]);
    m.nx = static_cast<int>(f.shape[3]);
    m.inside.assign(f.i32.begin() + static_cast<std::ptrdiff_t>(k * n),
                    f.i32.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
    out.push_back(std::move(m));
  }
  return out;
}

ArrayFile to_container(const FieldModel& model) {
  ArrayFile f;
  f.header["content"] = "field_model";
  f.header["layer_widths"] = model.net.widths();
  f.header["arch"] = model.arch;
  f.header["seed"] = model.seed;
  auto const p = model.net.parameters();
  f.shape = {static_cast<std::int64_t>(p.size())};
  f.axes = {"parameter"};
  f.f32.assign(p.begin(), p.end());
  return f;
}

FieldModel model_from_container(const ArrayFile& f) {
  expect_content(f, "field_model");
  try {
    FieldModel m;
    m.arch = need(f.header, "arch").get<FieldArchitecture>();
    m.seed = need(f.header, "seed").get<std::uint64_t>();
    auto const widths = need(f.header, "layer_widths").get<std::vector<int>>();
    m.net = Mlp<float>(widths, m.arch.activation);
    if (widths.front() != m.arch.encoding.width()) throw FormatError("field_model: input width disagrees with encoding");
    if (f.dtype != ArrayFile::DType::F32 || f.f32.size() != m.net.n_parameters())
      throw FormatError("field_model: parameter count does not match layer widths");
    std::copy(f.f32.begin(), f.f32.end(), m.net.parameters().begin());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field_model: bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("field_model: ") + e.what());
  }
}

}  // namespace spect
