#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "mgca/common/error.hpp"
#include "mgca/common/hash.hpp"

namespace mgca {

inline constexpr int kImageSide = 224;

/// A decoded still image as read from disk (8-bit, 1/3/4 channels, BGR order).
struct VisualAsset {
  cv::Mat pixels;
  std::uint64_t content_hash = 0;
  std::string source;
};

/// Value range an encoder expects for its pixel input.
struct InputRange {
  float lo = 0.0f;
  float hi = 1.0f;
};

/// Normalized encoder input: 224x224, 3 channels RGB, CV_32FC3.
struct Image {
  cv::Mat tensor;
  std::uint64_t content_hash = 0;
  std::string source;

  std::string hash_hex() const { return to_hex(content_hash); }
};

/// FNV-1a over the decoded pixel rows plus the geometry, so the key is
/// independent of the container format the pixels came from.
inline std::uint64_t pixel_hash(const cv::Mat& m) {
  const int header[4] = {m.rows, m.cols, m.channels(), m.depth()};
  std::uint64_t h = fnv1a64(std::span(reinterpret_cast<const unsigned char*>(header), sizeof header));
  const std::size_t row_bytes = static_cast<std::size_t>(m.cols) * m.elemSize();
  for (int r = 0; r < m.rows; ++r) h = fnv1a64(std::span(m.ptr<unsigned char>(r), row_bytes), h);
  return h;
}

inline VisualAsset make_asset(cv::Mat pixels, std::string source) {
  VisualAsset a;
  a.content_hash = pixel_hash(pixels);
  a.pixels = std::move(pixels);
  a.source = std::move(source);
  return a;
}

/// Index of the representative frame of an F-frame video.
inline long middle_frame_index(long frame_count) { return frame_count / 2; }

namespace detail {

inline long count_frames_by_decoding(const std::string& path) {
  cv::VideoCapture cap(path);
  if (!cap.isOpened()) return 0;
  long n = 0;
  cv::Mat frame;
  while (cap.read(frame)) ++n;
  return n;
}

}  // namespace detail

/// Returns the middle frame (index floor(F/2)) of a video; a still image is
/// returned unchanged.
inline VisualAsset extract_middle_frame(const std::filesystem::path& ref) {
  const std::string path = ref.string();
  if (cv::haveImageReader(path)) {
    cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (!img.empty()) return make_asset(std::move(img), path);
  }
  cv::VideoCapture cap(path);
  if (!cap.isOpened()) throw Error("visual asset unreadable: " + path);
  long frames = static_cast<long>(cap.get(cv::CAP_PROP_FRAME_COUNT));
  if (frames <= 0) frames = detail::count_frames_by_decoding(path);
  if (frames <= 0) throw Error("visual asset unreadable: " + path);
  const long target = middle_frame_index(frames);

  cv::Mat frame;
  if (target > 0) cap.set(cv::CAP_PROP_POS_FRAMES, static_cast<double>(target));
  if (static_cast<long>(cap.get(cv::CAP_PROP_POS_FRAMES)) != target) {
    // Container does not seek; step through from the start.
    cap.open(path);
    for (long i = 0; i < target && cap.grab(); ++i) {
    }
  }
  if (!cap.read(frame) || frame.empty()) throw Error("visual asset unreadable: " + path);
  return make_asset(std::move(frame), path);
}

inline VisualAsset load_visual(const std::filesystem::path& ref) { return extract_middle_frame(ref); }

/// True when `ref` decodes as an image or as a video with at least one frame.
inline bool visual_decodable(const std::filesystem::path& ref) {
  try {
    load_visual(ref);
    return true;
  } catch (const Error&) {
    return false;
  }
}

/// Converts to 3-channel RGB, resizes to 224x224 and maps [0,255] onto `range`.
inline Image normalize_image(const VisualAsset& asset, InputRange range = {}) {
  const cv::Mat& src = asset.pixels;
  if (src.empty() || src.rows == 0 || src.cols == 0) throw Error("zero-area image: " + asset.source);

  cv::Mat eight;
  if (src.depth() == CV_8U) {
    eight = src;
  } else if (src.depth() == CV_16U) {
    src.convertTo(eight, CV_8U, 1.0 / 257.0);
  } else {
    src.convertTo(eight, CV_8U);
  }

  cv::Mat rgb;
  switch (eight.channels()) {
    case 1: cv::cvtColor(eight, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(eight, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(eight, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw Error("unsupported channel count in " + asset.source);
  }

  cv::Mat sized;
  if (rgb.rows == kImageSide && rgb.cols == kImageSide) {
    sized = rgb;
  } else {
    const bool shrinking = rgb.rows > kImageSide || rgb.cols > kImageSide;
    cv::resize(rgb, sized, cv::Size(kImageSide, kImageSide), 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  }

  Image out;
  const double scale = static_cast<double>(range.hi - range.lo) / 255.0;
  sized.convertTo(out.tensor, CV_32FC3, scale, range.lo);
  out.content_hash = asset.content_hash;
  out.source = asset.source;
  return out;
}

}  // namespace mgca
