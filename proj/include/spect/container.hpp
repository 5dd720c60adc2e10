#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spect/field.hpp"
#include "spect/phantom.hpp"
#include "spect/projection.hpp"
#include "spect/volume.hpp"

namespace spect {

/// On-disk layout: "SPJ1", u32 little-endian header length, UTF-8 JSON header,
/// row-major little-endian payload. The header always carries magic, version,
/// dtype ("f32" | "i32"), shape, axes and geometry (null when unbound).
struct ArrayFile {
  enum class DType { F32, I32 };

  nlohmann::json header = nlohmann::json::object();
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;
  std::vector<std::string> axes;
  std::vector<float> f32;
  std::vector<std::int32_t> i32;

  std::size_t element_count() const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

std::string encode_container(const ArrayFile& file);
/// Throws FormatError on bad magic/version/dtype, or a payload whose length
/// differs from the shape product.
ArrayFile decode_container(std::string_view bytes);

void write_container(const std::filesystem::path& path, const ArrayFile& file);
ArrayFile read_container(const std::filesystem::path& path);

ArrayFile to_container(const ImageVolume& volume, const std::string& content);
ImageVolume volume_from_container(const ArrayFile& file);

/// Sampled stacks are stored as i32 counts, everything else as f32.
ArrayFile to_container(const ProjectionStack& stack);
ProjectionStack projections_from_container(const ArrayFile& file);

ArrayFile to_container(const std::vector<VoiMask>& masks);
std::vector<VoiMask> masks_from_container(const ArrayFile& file);

ArrayFile to_container(const FieldModel& model);
FieldModel model_from_container(const ArrayFile& file);

}  // namespace spect
