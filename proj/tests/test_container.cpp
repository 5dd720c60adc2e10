#include <doctest.h>

#include <stdexcept>

#include <cstring>
#include <filesystem>
#include <random>

#include "spect/container.hpp"
#include "spect/error.hpp"
#include "spect/phantom.hpp"

using namespace spect;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  auto const p = fs::temp_directory_path() / "spect_container_test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("empty array round trip") {
  ArrayFile f;
  f.shape = {0};
  f.axes = {"x"};
  auto const back = decode_container(encode_container(f));
  CHECK(back.shape == std::vector<std::int64_t>{0});
  CHECK(back.f32.empty());
}

TEST_CASE("random volume round trip is bit exact") {
  std::mt19937_64 rng(1);
  ArrayFile f;
  f.shape = {3, 4, 5};
  f.axes = {"z", "y", "x"};
  f.f32.resize(60);
  for (auto& v : f.f32) {
    std::uint32_t const bits = static_cast<std::uint32_t>(rng());
    std::memcpy(&v, &bits, 4);
  }
  auto const back = decode_container(encode_container(f));
  CHECK(std::memcmp(back.f32.data(), f.f32.data(), 240) == 0);
  CHECK(back.axes == f.axes);
}

TEST_CASE("byte layout") {
  ArrayFile f;
  f.dtype = ArrayFile::DType::I32;
  f.shape = {2};
  f.axes = {"x"};
  f.i32 = {1, -2};
  auto const bytes = encode_container(f);
  CHECK(bytes.substr(0, 4) == "SPJ1");
  std::uint32_t len = 0;
  for (int k = 3; k >= 0; --k) len = (len << 8) | static_cast<unsigned char>(bytes[4 + k]);
  auto const header = nlohmann::json::parse(bytes.substr(8, len));
  CHECK(header["magic"] == "SPJ1");
  CHECK(header["version"] == 1);
  CHECK(header["dtype"] == "i32");
  CHECK(header["shape"] == nlohmann::json::array({2}));
  CHECK(header.contains("geometry"));
  REQUIRE(bytes.size() == 8 + len + 8);
  CHECK(static_cast<unsigned char>(bytes[8 + len]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8 + len + 4]) == 0xFE);
  CHECK(static_cast<unsigned char>(bytes[8 + len + 7]) == 0xFF);
}

TEST_CASE("malformed containers are format errors") {
  ArrayFile f;
  f.shape = {2, 2};
  f.axes = {"y", "x"};
  f.f32 = {1, 2, 3, 4};
  auto const good = encode_container(f);
  CHECK_THROWS_AS(decode_container(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_container(good + "xxxx"), FormatError);
  std::string bad_magic = good;
  bad_magic[3] = '2';
  CHECK_THROWS_AS(decode_container(bad_magic), FormatError);
  CHECK_THROWS_AS(decode_container("SP"), FormatError);

  auto header_with = [&](const char* key, nlohmann::json value) {
    std::uint32_t len = 0;
    for (int k = 3; k >= 0; --k) len = (len << 8) | static_cast<unsigned char>(good[4 + k]);
    auto h = nlohmann::json::parse(good.substr(8, len));
    h[key] = value;
    std::string const hs = h.dump();
    std::string out = "SPJ1";
    std::uint32_t const n = static_cast<std::uint32_t>(hs.size());
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((n >> (8 * k)) & 0xFF));
    return out + hs + good.substr(8 + len);
  };
  CHECK_NOTHROW(decode_container(header_with("note", "ok")));
  CHECK_THROWS_AS(decode_container(header_with("version", 2)), FormatError);
  CHECK_THROWS_AS(decode_container(header_with("dtype", "f64")), FormatError);
  CHECK_THROWS_AS(decode_container(header_with("shape", nlohmann::json::array({2, 3}))), FormatError);

  f.f32.pop_back();
  CHECK_THROWS(encode_container(f));
}

TEST_CASE("typed round trips through files") {
  auto const dir = scratch_dir();
  auto const ph = build_phantom(PhantomSpec::standard(), {64, 64, 48}, {4.8, 4.8, 4.8});
  write_container(dir / "a.spj", to_container(ph.activity, "activity"));
  auto const vol = volume_from_container(read_container(dir / "a.spj"));
  CHECK(vol.values == ph.activity.values);
  CHECK(vol.voxel_mm == ph.activity.voxel_mm);
  CHECK(vol.nx == 64);
  CHECK(vol.nz == 48);

  write_container(dir / "m.spj", to_container(ph.masks));
  auto const masks = masks_from_container(read_container(dir / "m.spj"));
  REQUIRE(masks.size() == ph.masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) {
    CHECK(masks[k].name == ph.masks[k].name);
    CHECK(masks[k].role == ph.masks[k].role);
    CHECK(masks[k].inside == ph.masks[k].inside);
  }

  auto const g = make_geometry(6, EllipticalOrbit{200, 150, 2}, 8, 8, 4.8, 3);
  ProjectionStack p(g, {0, 2, 4}, 3, ProjectionKind::Sampled);
  for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = static_cast<float>(i % 11);
  write_container(dir / "p.spj", to_container(p));
  auto const raw = read_container(dir / "p.spj");
  CHECK(raw.dtype == ArrayFile::DType::I32);
  CHECK(raw.header["window_labels"] == nlohmann::json::array({"peak", "lower", "upper"}));
  auto const q = projections_from_container(raw);
  CHECK(q.geometry == g);
  CHECK(q.views == p.views);
  CHECK(q.kind == p.kind);
  CHECK(q.data == p.data);

  FieldArchitecture arch;
  arch.hidden_layers = 3;
  arch.hidden_width = 12;
  arch.activation = Activation::Tanh;
  arch.encoding = {Encoding::Kind::Fourier, 2};
  auto const model = FieldModel::create(arch, 3, 99);
  write_container(dir / "f.spj", to_container(model));
  auto const m2 = model_from_container(read_container(dir / "f.spj"));
  CHECK(m2.seed == 99);
  CHECK(m2.net.widths() == model.net.widths());
  CHECK(m2.arch.activation == Activation::Tanh);
  CHECK(m2.arch.encoding.n_frequencies == 2);
  CHECK(std::equal(m2.net.parameters().begin(), m2.net.parameters().end(), model.net.parameters().begin()));

  CHECK_THROWS_AS(volume_from_container(read_container(dir / "p.spj")), FormatError);
  CHECK_THROWS_AS(read_container(dir / "missing.spj"), FormatError);
}
