#include "ras/embed/image_probe.hpp"

#include <array>
#include <cstring>

#include <opencv2/imgcodecs.hpp>

#include "ras/common/error.hpp"

namespace ras::embed {

namespace {

bool starts_with(std::string_view bytes, std::string_view magic) {
  return bytes.size() >= magic.size() && std::memcmp(bytes.data(), magic.data(), magic.size()) == 0;
}

}  // namespace

std::string_view to_string(ImageFormat format) noexcept {
  switch (format) {
    case ImageFormat::jpeg: return "jpeg";
    case ImageFormat::png: return "png";
    case ImageFormat::tiff: return "tiff";
  }
  return "unknown";
}

ImageFormat probe_image(std::string_view bytes) {
  using namespace std::string_view_literals;
  if (bytes.empty()) throw InvalidImage("image payload is empty");

  ImageFormat format;
  if (starts_with(bytes, "\xFF\xD8\xFF"sv))
    format = ImageFormat::jpeg;
  else if (starts_with(bytes, "\x89PNG\r\n\x1A\n"sv))
    format = ImageFormat::png;
  else if (starts_with(bytes, "II*\0"sv) || starts_with(bytes, "MM\0*"sv))
    format = ImageFormat::tiff;
  else
    throw InvalidImage("unsupported image format (expected JPEG, PNG or TIFF)");

  cv::Mat decoded;
  try {
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
                      const_cast<char*>(bytes.data()));
    decoded = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw InvalidImage(std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty())
    throw InvalidImage("image could not be decoded as " + std::string(to_string(format)));
  return format;
}

}  // namespace ras::embed
