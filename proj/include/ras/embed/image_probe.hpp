#pragma once

#include <string_view>

namespace ras::embed {

enum class ImageFormat { jpeg, png, tiff };

std::string_view to_string(ImageFormat format) noexcept;

/// Identifies the format from its signature and fully decodes the image.
/// Throws InvalidImage for empty input, other formats, or a failed decode.
ImageFormat probe_image(std::string_view bytes);

}  // namespace ras::embed
