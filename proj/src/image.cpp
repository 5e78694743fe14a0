#include "fer/image.hpp"

#include <numeric>

#include "fer/error.hpp"

namespace fer {

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0) throw ArgumentError("image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

double Image::mean() const noexcept {
  if (data_.empty()) return 0.0;
  double sum = 0.0;
  for (float v : data_) sum += v;
  return sum / static_cast<double>(data_.size());
}

}  // namespace fer
